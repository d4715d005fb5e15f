#include "pegfit/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pegfit/io.hpp"
#include "pegfit/parallel.hpp"

namespace pegfit {

std::size_t DlaNet::param_count() const {
    return force_enc.param_count() + torque_enc.param_count() + fusion.param_count() +
           force_head.param_count() + torque_head.param_count();
}

std::vector<double> DlaNet::get_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    nn::stack_params_into(force_enc, flat);
    nn::stack_params_into(torque_enc, flat);
    nn::stack_params_into(fusion, flat);
    nn::stack_params_into(force_head, flat);
    nn::stack_params_into(torque_head, flat);
    return flat;
}

void DlaNet::set_params(std::span<const double> flat) {
    std::size_t pos = 0;
    pos += nn::stack_params_from(force_enc, flat.subspan(pos));
    pos += nn::stack_params_from(torque_enc, flat.subspan(pos));
    pos += nn::stack_params_from(fusion, flat.subspan(pos));
    pos += nn::stack_params_from(force_head, flat.subspan(pos));
    pos += nn::stack_params_from(torque_head, flat.subspan(pos));
    if (pos != flat.size()) throw std::invalid_argument("DlaNet::set_params: size mismatch");
}

DlaNet build_dla(int k, int width, std::uint64_t seed) {
    DlaNet net;
    net.k = k;
    net.width = width;
    net.in_std.fill(1.0);
    net.out_std.fill(1.0);
    RngStream rng = RngStream::derive(seed, {0xd1aULL});
    net.force_enc = nn::DenseStack::make({2 * k, width, width, width}, true, rng);
    net.torque_enc = nn::DenseStack::make({3 * k, width, width, width}, true, rng);
    net.fusion = nn::DenseStack::make({2 * width, width, width, width}, true, rng);
    net.force_head = nn::DenseStack::make({width, width, width, 2 * k}, false, rng);
    net.torque_head = nn::DenseStack::make({width, width, width, 3 * k}, false, rng);
    return net;
}

namespace {

struct DlaForward {
    nn::StackCache force_cache, torque_cache, fusion_cache, fhead_cache, thead_cache;
    std::vector<double> fusion_feat;
    std::array<double, 25> pred{};  // standardized sim-domain prediction
};

DlaForward forward_dla(const DlaNet& net, const std::array<double, 25>& x) {
    DlaForward f;
    int fk = 2 * net.k;
    std::vector<double> ffeat = nn::forward(net.force_enc, std::span<const double>(x.data(), static_cast<std::size_t>(fk)), &f.force_cache);
    std::vector<double> tfeat = nn::forward(net.torque_enc, std::span<const double>(x.data() + fk, static_cast<std::size_t>(3 * net.k)), &f.torque_cache);
    std::vector<double> concat;
    concat.reserve(ffeat.size() + tfeat.size());
    concat.insert(concat.end(), ffeat.begin(), ffeat.end());
    concat.insert(concat.end(), tfeat.begin(), tfeat.end());
    f.fusion_feat = nn::forward(net.fusion, concat, &f.fusion_cache);
    std::vector<double> fo = nn::forward(net.force_head, f.fusion_feat, &f.fhead_cache);
    std::vector<double> to = nn::forward(net.torque_head, f.fusion_feat, &f.thead_cache);
    // The domain gap is a modest deviation from identity, so the heads
    // predict a residual on top of the standardized input. A paired set of a
    // few dozen poses cannot pin down a free-form 25->25 map, but it can pin
    // down the correction.
    for (int i = 0; i < fk; ++i)
        f.pred[static_cast<std::size_t>(i)] = fo[static_cast<std::size_t>(i)] + x[static_cast<std::size_t>(i)];
    for (int i = 0; i < 3 * net.k; ++i)
        f.pred[static_cast<std::size_t>(fk + i)] = to[static_cast<std::size_t>(i)] + x[static_cast<std::size_t>(fk + i)];
    return f;
}

void backward_dla(const DlaNet& net, const DlaForward& fwd, std::span<const double> pred_grad,
                  std::span<double> grad) {
    std::size_t off_force = 0;
    std::size_t off_torque = off_force + net.force_enc.param_count();
    std::size_t off_fusion = off_torque + net.torque_enc.param_count();
    std::size_t off_fhead = off_fusion + net.fusion.param_count();
    std::size_t off_thead = off_fhead + net.force_head.param_count();

    int fk = 2 * net.k;
    std::vector<double> fg(pred_grad.begin(), pred_grad.begin() + fk);
    std::vector<double> tg(pred_grad.begin() + fk, pred_grad.end());
    std::vector<double> g1 = nn::backward(net.force_head, fwd.fhead_cache, fg,
                                          grad.subspan(off_fhead, net.force_head.param_count()));
    std::vector<double> g2 = nn::backward(net.torque_head, fwd.thead_cache, tg,
                                          grad.subspan(off_thead, net.torque_head.param_count()));
    std::vector<double> fusion_grad(g1.size());
    for (std::size_t i = 0; i < fusion_grad.size(); ++i) fusion_grad[i] = g1[i] + g2[i];
    std::vector<double> concat_grad = nn::backward(net.fusion, fwd.fusion_cache, fusion_grad,
                                                   grad.subspan(off_fusion, net.fusion.param_count()));
    std::vector<double> cf(concat_grad.begin(), concat_grad.begin() + net.width);
    std::vector<double> ct(concat_grad.begin() + net.width, concat_grad.end());
    nn::backward(net.force_enc, fwd.force_cache, cf, grad.subspan(off_force, net.force_enc.param_count()));
    nn::backward(net.torque_enc, fwd.torque_cache, ct, grad.subspan(off_torque, net.torque_enc.param_count()));
}

std::array<double, 25> standardize25(const std::array<double, 25>& sig,
                                     const std::array<double, 25>& mean,
                                     const std::array<double, 25>& std) {
    std::array<double, 25> out;
    for (int i = 0; i < 25; ++i)
        out[static_cast<std::size_t>(i)] = (sig[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) / std[static_cast<std::size_t>(i)];
    return out;
}

void stats25(const std::vector<std::array<double, 25>>& sigs, std::array<double, 25>& mean,
             std::array<double, 25>& std) {
    std::array<double, 25> sum{}, sq{};
    for (const auto& s : sigs)
        for (int i = 0; i < 25; ++i) {
            sum[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)];
            sq[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
        }
    double n = static_cast<double>(sigs.size());
    for (int i = 0; i < 25; ++i) {
        mean[static_cast<std::size_t>(i)] = sum[static_cast<std::size_t>(i)] / n;
        double var = sq[static_cast<std::size_t>(i)] / n - mean[static_cast<std::size_t>(i)] * mean[static_cast<std::size_t>(i)];
        std[static_cast<std::size_t>(i)] = std::sqrt(std::max(var, 1e-18));
    }
}

std::vector<const PairedRecord*> role_pairs(const PairedDataset& paired, std::uint8_t role) {
    std::vector<const PairedRecord*> out;
    for (const PairedRecord& p : paired.pairs)
        if (p.role == role && p.sim.usable() && p.real.usable()) out.push_back(&p);
    return out;
}

std::array<double, 25> jittered(const std::array<double, 25>& x, double sigma, RngStream& rng) {
    std::array<double, 25> out = x;
    if (sigma > 0.0)
        for (double& v : out) v += sigma * rng.gaussian();
    return out;
}

// Shared mini-batch loop for the adaptation trainers: seeded shuffling,
// deterministic blocked gradient accumulation, per-item input jitter, and
// best-validation parameter retention on a held-back slice of the pairs.
//
// fwd_bwd(item, input_jitter_rng, grad_buffer) accumulates gradients for the
// first `trainable` parameters; val_loss(item) scores clean inputs.
template <class FwdBwd, class ValLoss, class Apply>
void run_adapt_training(std::vector<double>& params, std::size_t trainable, std::size_t n_items,
                        int epochs, int batch, double const_lr, const AdaptConfig& cfg,
                        std::uint64_t stream_tag, FwdBwd&& fwd_bwd, ValLoss&& val_loss,
                        Apply&& apply_params) {
    RngStream shuffle_rng = RngStream::derive(cfg.seed, {stream_tag});
    std::vector<std::size_t> order(n_items);
    for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.next_u64() % i)]);
    std::size_t n_val = std::min(n_items / 2, static_cast<std::size_t>(
                                                  std::ceil(cfg.val_fraction * static_cast<double>(n_items))));
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    nn::AdamState adam(trainable);
    std::vector<double> grad(params.size() + 1);
    nn::CosineSchedule sched;
    std::vector<double> best_params = params;
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < epochs; ++epoch) {
        double lr = const_lr > 0.0 ? const_lr : sched.lr(epoch);
        for (std::size_t i = train_idx.size(); i > 1; --i)
            std::swap(train_idx[i - 1], train_idx[static_cast<std::size_t>(shuffle_rng.next_u64() % i)]);
        for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(batch)) {
            std::size_t end = std::min(train_idx.size(), start + static_cast<std::size_t>(batch));
            std::size_t bsize = end - start;
            std::fill(grad.begin(), grad.end(), 0.0);
            blocked_accumulate(static_cast<std::int64_t>(bsize), cfg.workers, 8, grad,
                               [&](std::vector<double>& buf, std::int64_t bi) {
                                   std::size_t ri = train_idx[start + static_cast<std::size_t>(bi)];
                                   RngStream jit = RngStream::derive(
                                       cfg.seed, {stream_tag, 0x717ULL,
                                                  static_cast<std::uint64_t>(epoch), ri});
                                   buf[buf.size() - 1] +=
                                       fwd_bwd(ri, jit, std::span<double>(buf.data(), buf.size() - 1));
                               });
            double inv = 1.0 / static_cast<double>(bsize);
            for (std::size_t gi = 0; gi < trainable; ++gi) grad[gi] *= inv;
            nn::adam_step(std::span<double>(params.data(), trainable),
                          std::span<const double>(grad.data(), trainable), adam, lr);
            apply_params(params);
        }
        if (!val_idx.empty()) {
            double v = 0.0;
            for (std::size_t ri : val_idx) v += val_loss(ri);
            v /= static_cast<double>(val_idx.size());
            if (v < best_val) {
                best_val = v;
                best_params = params;
            }
        }
    }
    if (!val_idx.empty()) {
        params = best_params;
        apply_params(params);
    }
}

}  // namespace

std::array<double, 25> convert(const DlaNet& dla, const std::array<double, 25>& real_signature) {
    DlaForward f = forward_dla(dla, standardize25(real_signature, dla.in_mean, dla.in_std));
    std::array<double, 25> out;
    for (int i = 0; i < 25; ++i)
        out[static_cast<std::size_t>(i)] =
            f.pred[static_cast<std::size_t>(i)] * dla.out_std[static_cast<std::size_t>(i)] + dla.out_mean[static_cast<std::size_t>(i)];
    return out;
}

DlaNet train_dla(const PairedDataset& paired, const AdaptConfig& cfg, std::uint64_t paired_hash) {
    std::vector<const PairedRecord*> train = role_pairs(paired, 0);
    if (static_cast<int>(train.size()) < kMinAdaptPairs)
        throw std::runtime_error("train_dla: insufficient paired data (" + std::to_string(train.size()) +
                                 " < " + std::to_string(kMinAdaptPairs) + " pairs)");
    DlaNet net = build_dla(static_cast<int>(paired.k), 128, cfg.seed);
    net.paired_hash = paired_hash;

    std::vector<std::array<double, 25>> real_sigs, sim_sigs;
    for (const PairedRecord* p : train) {
        real_sigs.push_back(p->real.signature);
        sim_sigs.push_back(p->sim.signature);
    }
    stats25(real_sigs, net.in_mean, net.in_std);
    stats25(sim_sigs, net.out_mean, net.out_std);

    std::vector<std::array<double, 25>> inputs(real_sigs.size()), targets(sim_sigs.size());
    for (std::size_t i = 0; i < real_sigs.size(); ++i) {
        inputs[i] = standardize25(real_sigs[i], net.in_mean, net.in_std);
        targets[i] = standardize25(sim_sigs[i], net.out_mean, net.out_std);
    }

    std::vector<double> params = net.get_params();
    run_adapt_training(
        params, params.size(), inputs.size(), cfg.dla_epochs, cfg.batch, -1.0, cfg, 0xd1a5ULL,
        [&](std::size_t ri, RngStream& jit, std::span<double> buf) {
            DlaForward f = forward_dla(net, jittered(inputs[ri], cfg.input_jitter, jit));
            nn::MaeResult mae = nn::mae_loss(f.pred, targets[ri]);
            backward_dla(net, f, mae.grad, buf);
            return mae.loss;
        },
        [&](std::size_t ri) {
            DlaForward f = forward_dla(net, inputs[ri]);
            return nn::mae_loss(f.pred, targets[ri]).loss;
        },
        [&](std::span<const double> p) { net.set_params(p); });
    return net;
}

EstimatorNet distill_fla(const EstimatorNet& sim_net, const PairedDataset& paired,
                         const AdaptConfig& cfg, std::uint64_t paired_hash) {
    std::vector<const PairedRecord*> train = role_pairs(paired, 0);
    if (static_cast<int>(train.size()) < kMinAdaptPairs)
        throw std::runtime_error("distill_fla: insufficient paired data");

    EstimatorNet real_net = sim_net;  // same architecture, stats and heads included
    real_net.dataset_hash = paired_hash;

    // Frozen teacher features on the paired sim signatures.
    std::vector<std::array<double, 25>> inputs;
    std::vector<EstimatorFeatures> targets;
    for (const PairedRecord* p : train) {
        inputs.push_back(real_net.standardize(p->real.signature));
        targets.push_back(extract_features(sim_net, p->sim.signature));
    }

    // Only encoder + fusion parameters train; heads are frozen by restricting
    // the optimizer to their gradient region.
    std::size_t trainable = real_net.force_enc.param_count() + real_net.torque_enc.param_count() +
                            real_net.fusion.param_count();
    std::vector<double> params = real_net.get_params();
    auto feature_loss = [&](std::size_t ri, const std::array<double, 25>& input,
                            std::span<double> buf, bool with_grad) {
        EstimatorForward f = forward_estimator(real_net, input);
        const EstimatorFeatures& t = targets[ri];
        nn::MaeResult mf = nn::mae_loss(f.force_feat, t.force);
        nn::MaeResult mt = nn::mae_loss(f.torque_feat, t.torque);
        nn::MaeResult mu = nn::mae_loss(f.fusion_feat, t.fusion);
        if (with_grad) backward_estimator(real_net, f, {}, mf.grad, mt.grad, mu.grad, buf);
        return mf.loss + mt.loss + mu.loss;
    };
    run_adapt_training(
        params, trainable, inputs.size(), cfg.fla_epochs, cfg.batch, -1.0, cfg, 0xf1a5ULL,
        [&](std::size_t ri, RngStream& jit, std::span<double> buf) {
            return feature_loss(ri, jittered(inputs[ri], cfg.input_jitter, jit), buf, true);
        },
        [&](std::size_t ri) { return feature_loss(ri, inputs[ri], {}, false); },
        [&](std::span<const double> p) { real_net.set_params(p); });
    return real_net;
}

EstimatorNet fine_tune(const EstimatorNet& net, const PairedDataset& paired, const AdaptConfig& cfg,
                       const DlaNet* front_end) {
    std::vector<const PairedRecord*> train = role_pairs(paired, 0);
    if (train.empty()) throw std::runtime_error("fine_tune: no paired training data");
    EstimatorNet tuned = net;

    std::vector<std::array<double, 25>> inputs;
    std::vector<std::array<double, 5>> targets;
    for (const PairedRecord* p : train) {
        std::array<double, 25> sig = front_end ? convert(*front_end, p->real.signature) : p->real.signature;
        inputs.push_back(tuned.standardize(sig));
        targets.push_back({p->real.pose.px, p->real.pose.py, p->real.pose.ox, p->real.pose.oy, p->real.pose.oz});
    }

    std::vector<double> params = tuned.get_params();
    run_adapt_training(
        params, params.size(), inputs.size(), cfg.fine_tune_epochs, cfg.batch, cfg.fine_tune_lr,
        cfg, 0xf73ULL,
        [&](std::size_t ri, RngStream& jit, std::span<double> buf) {
            EstimatorForward f = forward_estimator(tuned, jittered(inputs[ri], cfg.input_jitter, jit));
            nn::MaeResult mae = nn::mae_loss(f.pred, targets[ri]);
            backward_estimator(tuned, f, mae.grad, {}, {}, {}, buf);
            return mae.loss;
        },
        [&](std::size_t ri) {
            EstimatorForward f = forward_estimator(tuned, inputs[ri]);
            return nn::mae_loss(f.pred, targets[ri]).loss;
        },
        [&](std::span<const double> p) { tuned.set_params(p); });
    return tuned;
}

ExtrinsicPose estimate_adapted(const AdaptedEstimator& adapted, const std::array<double, 25>& signature) {
    if (adapted.dla) return estimate(adapted.net, convert(*adapted.dla, signature));
    return estimate(adapted.net, signature);
}

AdaptedEstimator adapt_full(const EstimatorNet& sim_net, const PairedDataset& paired,
                            const AdaptConfig& cfg, std::uint64_t paired_hash) {
    AdaptedEstimator out;
    out.paired_hash = paired_hash;
    out.dla = train_dla(paired, cfg, paired_hash);
    EstimatorNet distilled = distill_fla(sim_net, paired, cfg, paired_hash);
    out.net = fine_tune(distilled, paired, cfg, &*out.dla);
    out.methods = {"dla", "fla", "fine_tune"};
    return out;
}

nlohmann::json AdaptationReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const AdaptationRow& r : rows)
        arr.push_back({{"method", r.method},
                       {"seen_pos_mae_mm", r.seen_pos},
                       {"seen_ori_mae_deg", r.seen_ori},
                       {"unseen_pos_mae_mm", r.unseen_pos},
                       {"unseen_ori_mae_deg", r.unseen_ori}});
    return nlohmann::json{{"rows", arr}};
}

std::string AdaptationReport::to_csv() const {
    std::ostringstream out;
    out << "method,seen_pos_mm,seen_ori_deg,unseen_pos_mm,unseen_ori_deg\n";
    for (const AdaptationRow& r : rows)
        out << r.method << "," << fmt_double(r.seen_pos) << "," << fmt_double(r.seen_ori) << ","
            << fmt_double(r.unseen_pos) << "," << fmt_double(r.unseen_ori) << "\n";
    return out.str();
}

const AdaptationRow& AdaptationReport::row(const std::string& method) const {
    for (const AdaptationRow& r : rows)
        if (r.method == method) return r;
    throw std::runtime_error("AdaptationReport: no row " + method);
}

AdaptationReport evaluate_adaptation(const EstimatorNet& sim_net, const DlaNet& dla,
                                     const EstimatorNet& fla_net, const EstimatorNet& ft_net,
                                     const AdaptedEstimator& ours, const PairedDataset& paired,
                                     const ShapeSet& shapes, std::uint64_t expected_hash) {
    if (dla.paired_hash != expected_hash || ours.paired_hash != expected_hash)
        throw std::runtime_error("evaluate_adaptation: paired-dataset hash mismatch (provenance)");

    std::map<std::uint32_t, bool> seen_of;
    for (const ShapeEntry& e : shapes.shapes) seen_of[e.id] = e.seen;

    std::vector<const PairedRecord*> eval = role_pairs(paired, 1);
    if (eval.empty()) throw std::runtime_error("evaluate_adaptation: no eval pairs");

    struct Acc {
        double pos = 0.0, ori = 0.0;
        std::int64_t n = 0;
    };
    auto run = [&](const std::string& name, auto&& predict) {
        Acc seen, unseen;
        for (const PairedRecord* p : eval) {
            ExtrinsicPose est = predict(p->real.signature);
            double pos = 0.5 * (std::abs(est.px - p->real.pose.px) + std::abs(est.py - p->real.pose.py));
            double ori = (std::abs(est.ox - p->real.pose.ox) + std::abs(est.oy - p->real.pose.oy) +
                          std::abs(est.oz - p->real.pose.oz)) / 3.0;
            Acc& acc = seen_of.at(p->shape_id) ? seen : unseen;
            acc.pos += pos;
            acc.ori += ori;
            acc.n++;
        }
        AdaptationRow row;
        row.method = name;
        if (seen.n > 0) { row.seen_pos = seen.pos / static_cast<double>(seen.n); row.seen_ori = seen.ori / static_cast<double>(seen.n); }
        if (unseen.n > 0) { row.unseen_pos = unseen.pos / static_cast<double>(unseen.n); row.unseen_ori = unseen.ori / static_cast<double>(unseen.n); }
        return row;
    };

    AdaptationReport report;
    report.rows.push_back(run("w/o Adaptation", [&](const std::array<double, 25>& s) { return estimate(sim_net, s); }));
    report.rows.push_back(run("DLA", [&](const std::array<double, 25>& s) { return estimate(sim_net, convert(dla, s)); }));
    report.rows.push_back(run("FLA", [&](const std::array<double, 25>& s) { return estimate(fla_net, s); }));
    report.rows.push_back(run("Fine-tuning", [&](const std::array<double, 25>& s) { return estimate(ft_net, s); }));
    report.rows.push_back(run("Ours", [&](const std::array<double, 25>& s) { return estimate_adapted(ours, s); }));
    return report;
}

namespace {

void save_stack_b(BinaryWriter& w, const nn::DenseStack& s) {
    w.u32(static_cast<std::uint32_t>(s.layers.size()));
    for (const nn::DenseLayer& l : s.layers) {
        w.u32(static_cast<std::uint32_t>(l.in));
        w.u32(static_cast<std::uint32_t>(l.out));
        w.u8(l.relu ? 1 : 0);
    }
    for (const nn::DenseLayer& l : s.layers) {
        for (double v : l.w) w.f64(v);
        for (double v : l.b) w.f64(v);
    }
}

nn::DenseStack load_stack_b(BinaryReader& rd) {
    nn::DenseStack s;
    std::uint32_t n = rd.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        nn::DenseLayer l;
        l.in = static_cast<int>(rd.u32());
        l.out = static_cast<int>(rd.u32());
        l.relu = rd.u8() != 0;
        l.w.resize(static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out));
        l.b.resize(static_cast<std::size_t>(l.out));
        s.layers.push_back(std::move(l));
    }
    for (nn::DenseLayer& l : s.layers) {
        for (double& v : l.w) v = rd.f64();
        for (double& v : l.b) v = rd.f64();
    }
    return s;
}

}  // namespace

void save_dla(const DlaNet& dla, const std::string& path) {
    BinaryWriter w(path);
    w.magic("PFDL");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(dla.k));
    w.u32(static_cast<std::uint32_t>(dla.width));
    for (double v : dla.in_mean) w.f64(v);
    for (double v : dla.in_std) w.f64(v);
    for (double v : dla.out_mean) w.f64(v);
    for (double v : dla.out_std) w.f64(v);
    w.u64(dla.paired_hash);
    save_stack_b(w, dla.force_enc);
    save_stack_b(w, dla.torque_enc);
    save_stack_b(w, dla.fusion);
    save_stack_b(w, dla.force_head);
    save_stack_b(w, dla.torque_head);
}

DlaNet load_dla(const std::string& path) {
    BinaryReader rd(path);
    rd.expect_magic("PFDL");
    std::uint32_t version = rd.u32();
    if (version != 1) throw std::runtime_error(path + ": unsupported DLA checkpoint version");
    DlaNet dla;
    dla.k = static_cast<int>(rd.u32());
    dla.width = static_cast<int>(rd.u32());
    for (double& v : dla.in_mean) v = rd.f64();
    for (double& v : dla.in_std) v = rd.f64();
    for (double& v : dla.out_mean) v = rd.f64();
    for (double& v : dla.out_std) v = rd.f64();
    dla.paired_hash = rd.u64();
    dla.force_enc = load_stack_b(rd);
    dla.torque_enc = load_stack_b(rd);
    dla.fusion = load_stack_b(rd);
    dla.force_head = load_stack_b(rd);
    dla.torque_head = load_stack_b(rd);
    return dla;
}

}  // namespace pegfit
