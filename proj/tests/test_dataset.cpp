#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "pegfit/dataset.hpp"
#include "pegfit/io.hpp"

using namespace pegfit;

namespace {

ShapeSet tiny_shape_set(int records_per_shape = 24) {
    ShapeSetConfig cfg;
    cfg.seen_classes = {4, 5};
    cfg.unseen_classes = {7};
    cfg.shapes_per_seen_class = 1;
    cfg.shapes_per_unseen_class = 1;
    cfg.records_per_seen_shape = records_per_shape;
    cfg.records_per_unseen_shape = records_per_shape / 2;
    return generate_shape_set(cfg, 91);
}

DatasetGenConfig tiny_gen(int workers = 1) {
    DatasetGenConfig cfg;
    cfg.train_per_shape = 16;
    cfg.val_per_shape = 4;
    cfg.workers = workers;
    return cfg;
}

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("offset sampling respects bounds, symmetry and determinism") {
    RngStream rng(3);
    double sum[5] = {0, 0, 0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        MisalignmentOffset o = sample_offset(rng);
        CHECK(std::abs(o.dx) <= kMaxLateralOffsetMm);
        CHECK(std::abs(o.dy) <= kMaxLateralOffsetMm);
        CHECK(std::abs(o.dox) <= kMaxAngularOffsetDeg);
        CHECK(std::abs(o.doy) <= kMaxAngularOffsetDeg);
        CHECK(std::abs(o.doz) <= kMaxAngularOffsetDeg);
        sum[0] += o.dx;
        sum[1] += o.dy;
        sum[2] += o.dox;
        sum[3] += o.doy;
        sum[4] += o.doz;
    }
    // Uniform(-a, a) mean estimator has sigma = a/sqrt(3n); allow 3 sigma.
    double tol_p = 3.0 * kMaxLateralOffsetMm / std::sqrt(3.0 * n);
    double tol_o = 3.0 * kMaxAngularOffsetDeg / std::sqrt(3.0 * n);
    CHECK(std::abs(sum[0] / n) < tol_p);
    CHECK(std::abs(sum[1] / n) < tol_p);
    CHECK(std::abs(sum[2] / n) < tol_o);
    CHECK(std::abs(sum[3] / n) < tol_o);
    CHECK(std::abs(sum[4] / n) < tol_o);

    RngStream a(42), b(42);
    for (int i = 0; i < 16; ++i) {
        MisalignmentOffset oa = sample_offset(a), ob = sample_offset(b);
        CHECK(oa.dx == ob.dx);
        CHECK(oa.doz == ob.doz);
    }
}

TEST_CASE("zero offset free-inserts; a 5 mm offset makes a contact record") {
    PolygonShape square = oracle::axis_square(15.0);
    ContactScene scene = make_scene(make_peg_hole_pair(square, 1.0), desk_contact_params());
    ComplianceConfig compliance;

    RngStream r1(1);
    MisalignmentRecord free_rec = generate_record(scene, 0, MisalignmentOffset{}, compliance,
                                                  DomainConfig::sim(), r1);
    CHECK(free_rec.free_insert());

    RngStream r2(2);
    MisalignmentRecord rec = generate_record(scene, 0, MisalignmentOffset{5, 0, 0, 0, 0}, compliance,
                                             DomainConfig::sim(), r2);
    CHECK_FALSE(rec.free_insert());
    // Settled pose keeps most of the commanded lateral offset.
    CHECK(std::abs(rec.pose.px - 5.0) < 1.0);

    // Re-running the generation reproduces the record bit for bit.
    RngStream r3(2);
    MisalignmentRecord again = generate_record(scene, 0, MisalignmentOffset{5, 0, 0, 0, 0}, compliance,
                                               DomainConfig::sim(), r3);
    CHECK(again.pose.px == rec.pose.px);
    CHECK(again.signature == rec.signature);
}

TEST_CASE("dataset generation: splits partition records, stats standardize the train split") {
    ShapeSet shapes = tiny_shape_set();
    GenReport report;
    Dataset ds = generate_dataset(shapes, tiny_gen(), DomainConfig::sim(), 5, &report);
    CHECK(report.records == 24 + 24 + 12);
    CHECK(report.records == static_cast<std::int64_t>(ds.records.size()));

    int split_count[3] = {0, 0, 0};
    for (const MisalignmentRecord& r : ds.records) {
        split_count[static_cast<int>(r.split())]++;
        bool seen = r.shape_id <= 1;
        if (!seen) CHECK(r.split() == Split::Test);
    }
    CHECK(split_count[0] + split_count[1] + split_count[2] == report.records);
    CHECK(split_count[0] == 32);
    CHECK(split_count[1] == 8);

    // Standardizing the usable train records with the stored stats gives
    // mean 0, variance 1 per channel.
    std::array<double, 25> sum{}, sq{};
    int n = 0;
    for (const MisalignmentRecord& r : ds.records) {
        if (!r.usable() || r.split() != Split::Train) continue;
        for (int i = 0; i < 25; ++i) {
            double v = (r.signature[(std::size_t)i] - ds.sig_mean[(std::size_t)i]) / ds.sig_std[(std::size_t)i];
            sum[(std::size_t)i] += v;
            sq[(std::size_t)i] += v * v;
        }
        n++;
    }
    REQUIRE(n > 10);
    for (int i = 0; i < 25; ++i) {
        CHECK(std::abs(sum[(std::size_t)i] / n) < 1e-9);
        CHECK(std::abs(sq[(std::size_t)i] / n - 1.0) < 1e-6);
    }
}

TEST_CASE("dataset files round-trip bitwise and regenerate byte-identically") {
    ShapeSet shapes = tiny_shape_set();
    Dataset ds = generate_dataset(shapes, tiny_gen(), DomainConfig::sim(), 5);
    std::string p1 = tmp_path("pegfit_ds1.pfit");
    std::string p2 = tmp_path("pegfit_ds2.pfit");
    ds.save(p1);

    Dataset loaded = Dataset::load(p1);
    CHECK(loaded.records.size() == ds.records.size());
    loaded.save(p2);
    CHECK(fnv1a_file(p1) == fnv1a_file(p2));

    // Regeneration with the same seed is byte-identical.
    Dataset ds2 = generate_dataset(shapes, tiny_gen(), DomainConfig::sim(), 5);
    std::string p3 = tmp_path("pegfit_ds3.pfit");
    ds2.save(p3);
    CHECK(fnv1a_file(p1) == fnv1a_file(p3));

    // A different seed changes the bytes.
    Dataset ds3 = generate_dataset(shapes, tiny_gen(), DomainConfig::sim(), 6);
    std::string p4 = tmp_path("pegfit_ds4.pfit");
    ds3.save(p4);
    CHECK(fnv1a_file(p1) != fnv1a_file(p4));

    for (const std::string& p : {p1, p2, p3, p4}) std::remove(p.c_str());
}

TEST_CASE("generation output is independent of the worker count") {
    ShapeSet shapes = tiny_shape_set();
    Dataset serial = generate_dataset(shapes, tiny_gen(1), DomainConfig::sim(), 5);
    Dataset parallel = generate_dataset(shapes, tiny_gen(4), DomainConfig::sim(), 5);
    REQUIRE(serial.records.size() == parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        CHECK(serial.records[i].signature == parallel.records[i].signature);
        CHECK(serial.records[i].pose.px == parallel.records[i].pose.px);
        CHECK(serial.records[i].flags == parallel.records[i].flags);
    }
}

TEST_CASE("paired records share the commanded offset bitwise; degenerate domain pairs coincide") {
    ShapeSetConfig sc;
    sc.seen_classes = {4};
    sc.unseen_classes = {7};
    sc.shapes_per_seen_class = 1;
    sc.shapes_per_unseen_class = 1;
    ShapeSet shapes = generate_shape_set(sc, 17);

    PairedGenConfig pg;
    pg.train_poses_per_shape = 6;
    pg.eval_poses_per_shape = 3;

    // Degenerate: the "real" domain equals sim; halves must match exactly.
    PairedDataset same = generate_paired_dataset(shapes, pg, DomainConfig::sim(), DomainConfig::sim(), 3);
    CHECK(same.pairs.size() == 6 + 3 + 3);
    for (const PairedRecord& p : same.pairs) {
        CHECK(p.sim.offset.dx == p.real.offset.dx);
        CHECK(p.sim.signature == p.real.signature);
    }

    // Default pseudo-real: nearly every pair diverges.
    PairedDataset diff = generate_paired_dataset(shapes, pg, DomainConfig::sim(),
                                                 DomainConfig::pseudo_real_default(), 3);
    int diverged = 0;
    for (const PairedRecord& p : diff.pairs) {
        CHECK(p.sim.offset.dx == p.real.offset.dx);
        CHECK(p.sim.offset.doz == p.real.offset.doz);
        double d = 0;
        for (int i = 0; i < 25; ++i)
            d += std::abs(p.sim.signature[(std::size_t)i] - p.real.signature[(std::size_t)i]);
        if (d > 0) diverged++;
    }
    CHECK(static_cast<double>(diverged) >= 0.95 * static_cast<double>(diff.pairs.size()));

    // Round trip.
    std::string path = tmp_path("pegfit_paired.pfpr");
    diff.save(path);
    PairedDataset loaded = PairedDataset::load(path);
    REQUIRE(loaded.pairs.size() == diff.pairs.size());
    CHECK(loaded.pairs[0].sim.signature == diff.pairs[0].sim.signature);
    std::string path2 = tmp_path("pegfit_paired2.pfpr");
    loaded.save(path2);
    CHECK(fnv1a_file(path) == fnv1a_file(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("shape set manifest json round-trips") {
    ShapeSet shapes = tiny_shape_set();
    nlohmann::json j = shapes.to_json();
    ShapeSet back = ShapeSet::from_json(j);
    REQUIRE(back.shapes.size() == shapes.shapes.size());
    for (std::size_t i = 0; i < shapes.shapes.size(); ++i) {
        CHECK(back.shapes[i].id == shapes.shapes[i].id);
        CHECK(back.shapes[i].seen == shapes.shapes[i].seen);
        CHECK(back.shapes[i].shape.vertices[0].x == shapes.shapes[i].shape.vertices[0].x);
    }
}

TEST_CASE("free-insert rate stays below 5 percent at the default bounds") {
    ShapeSet shapes = tiny_shape_set(60);
    GenReport report;
    generate_dataset(shapes, tiny_gen(), DomainConfig::sim(), 11, &report);
    CHECK(static_cast<double>(report.free_insert) < 0.05 * static_cast<double>(report.records));
}
