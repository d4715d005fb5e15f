// Compares the serial reference path (workers = 1) against the OpenMP path
// for the two hot kernels: batch record generation (settle-heavy) and batch
// gradient accumulation. Both paths are bitwise identical by construction;
// this target only reports throughput.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "pegfit/dataset.hpp"
#include "pegfit/estimator.hpp"
#include "pegfit/parallel.hpp"

using namespace pegfit;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double bench_records(int workers, int count) {
    RngStream rng(42);
    PolygonShape peg = generate_polygon(5, rng);
    ContactScene scene = make_scene(make_peg_hole_pair(peg, 1.0), desk_contact_params());
    ComplianceConfig compliance;
    DomainConfig domain = DomainConfig::sim();

    std::vector<MisalignmentRecord> records(static_cast<std::size_t>(count));
    auto t0 = std::chrono::steady_clock::now();
    parallel_for(count, workers, [&](std::int64_t i) {
        RngStream r = RngStream::derive(7, {static_cast<std::uint64_t>(i)});
        MisalignmentOffset off = sample_offset(r);
        records[static_cast<std::size_t>(i)] = generate_record(scene, 0, off, compliance, domain, r);
    });
    return seconds_since(t0);
}

double bench_gradients(int workers, int batches) {
    EstimatorNet net = build_estimator(5, 128, 3);
    RngStream rng(11);
    const int batch = 256;
    std::vector<std::array<double, 25>> inputs(batch);
    std::vector<std::array<double, 5>> targets(batch);
    for (int i = 0; i < batch; ++i) {
        for (double& v : inputs[static_cast<std::size_t>(i)]) v = rng.gaussian();
        for (double& v : targets[static_cast<std::size_t>(i)]) v = rng.uniform(-5.0, 5.0);
    }
    std::vector<double> grad(net.param_count() + 1);
    auto t0 = std::chrono::steady_clock::now();
    for (int b = 0; b < batches; ++b) {
        std::fill(grad.begin(), grad.end(), 0.0);
        blocked_accumulate(batch, workers, 32, grad, [&](std::vector<double>& buf, std::int64_t i) {
            EstimatorForward f = forward_estimator(net, inputs[static_cast<std::size_t>(i)]);
            nn::MaeResult mae = nn::mae_loss(f.pred, targets[static_cast<std::size_t>(i)]);
            backward_estimator(net, f, mae.grad, {}, {}, {},
                               std::span<double>(buf.data(), buf.size() - 1));
            buf[buf.size() - 1] += mae.loss;
        });
    }
    return seconds_since(t0);
}

}  // namespace

int main(int argc, char** argv) {
    int workers = argc > 1 ? std::atoi(argv[1]) : default_workers();
    int records = 24;
    int batches = 40;

    std::printf("kernel benchmark, parallel workers = %d\n", workers);
    double rec_serial = bench_records(1, records);
    double rec_par = bench_records(workers, records);
    std::printf("record generation  (%3d records): serial %7.3f s | parallel %7.3f s | speedup %.2fx\n",
                records, rec_serial, rec_par, rec_serial / rec_par);
    double grad_serial = bench_gradients(1, batches);
    double grad_par = bench_gradients(workers, batches);
    std::printf("batch gradients    (%3d batches): serial %7.3f s | parallel %7.3f s | speedup %.2fx\n",
                batches, grad_serial, grad_par, grad_serial / grad_par);
    return 0;
}
