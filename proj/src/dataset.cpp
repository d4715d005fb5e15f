#include "pegfit/dataset.hpp"

#include <cmath>

#include "pegfit/io.hpp"
#include "pegfit/parallel.hpp"

namespace pegfit {

MisalignmentOffset sample_offset(RngStream& rng) {
    MisalignmentOffset o;
    o.dx = rng.uniform(-kMaxLateralOffsetMm, kMaxLateralOffsetMm);
    o.dy = rng.uniform(-kMaxLateralOffsetMm, kMaxLateralOffsetMm);
    o.dox = rng.uniform(-kMaxAngularOffsetDeg, kMaxAngularOffsetDeg);
    o.doy = rng.uniform(-kMaxAngularOffsetDeg, kMaxAngularOffsetDeg);
    o.doz = rng.uniform(-kMaxAngularOffsetDeg, kMaxAngularOffsetDeg);
    return o;
}

ExtrinsicPose extrinsic_from_pose(const RigidPose& p) {
    return ExtrinsicPose{p.x, p.y, p.ox, p.oy, p.oz};
}

void Dataset::compute_stats() {
    std::array<double, 25> sum{}, sq{};
    std::int64_t count = 0;
    for (const MisalignmentRecord& r : records) {
        if (!r.usable() || r.split() != Split::Train) continue;
        for (int i = 0; i < 25; ++i) {
            sum[static_cast<std::size_t>(i)] += r.signature[static_cast<std::size_t>(i)];
            sq[static_cast<std::size_t>(i)] += r.signature[static_cast<std::size_t>(i)] * r.signature[static_cast<std::size_t>(i)];
        }
        count++;
    }
    if (count == 0) throw std::runtime_error("Dataset::compute_stats: no usable train records");
    for (int i = 0; i < 25; ++i) {
        double mu = sum[static_cast<std::size_t>(i)] / static_cast<double>(count);
        double var = sq[static_cast<std::size_t>(i)] / static_cast<double>(count) - mu * mu;
        sig_mean[static_cast<std::size_t>(i)] = mu;
        sig_std[static_cast<std::size_t>(i)] = std::sqrt(std::max(var, 1e-18));
    }
}

namespace {

void write_record(BinaryWriter& w, const MisalignmentRecord& r) {
    w.u32(r.shape_id);
    w.u8(r.domain);
    w.u8(r.flags);
    w.f64(r.offset.dx); w.f64(r.offset.dy);
    w.f64(r.offset.dox); w.f64(r.offset.doy); w.f64(r.offset.doz);
    w.f64(r.pose.px); w.f64(r.pose.py);
    w.f64(r.pose.ox); w.f64(r.pose.oy); w.f64(r.pose.oz);
    for (double v : r.signature) w.f64(v);
}

MisalignmentRecord read_record(BinaryReader& rd) {
    MisalignmentRecord r;
    r.shape_id = rd.u32();
    r.domain = rd.u8();
    r.flags = rd.u8();
    r.offset.dx = rd.f64(); r.offset.dy = rd.f64();
    r.offset.dox = rd.f64(); r.offset.doy = rd.f64(); r.offset.doz = rd.f64();
    r.pose.px = rd.f64(); r.pose.py = rd.f64();
    r.pose.ox = rd.f64(); r.pose.oy = rd.f64(); r.pose.oz = rd.f64();
    for (double& v : r.signature) v = rd.f64();
    return r;
}

}  // namespace

void Dataset::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic("PFIT");
    w.u32(1);
    w.u32(m);
    w.u32(k);
    w.u64(records.size());
    for (double v : sig_mean) w.f64(v);
    for (double v : sig_std) w.f64(v);
    for (const MisalignmentRecord& r : records) write_record(w, r);
}

Dataset Dataset::load(const std::string& path) {
    BinaryReader rd(path);
    rd.expect_magic("PFIT");
    std::uint32_t version = rd.u32();
    if (version != 1) throw std::runtime_error(path + ": unsupported PFIT version");
    Dataset d;
    d.m = rd.u32();
    d.k = rd.u32();
    std::uint64_t count = rd.u64();
    for (double& v : d.sig_mean) v = rd.f64();
    for (double& v : d.sig_std) v = rd.f64();
    d.records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) d.records.push_back(read_record(rd));
    return d;
}

nlohmann::json ShapeSet::to_json() const {
    nlohmann::json j;
    j["clearance_mm"] = clearance;
    nlohmann::json arr = nlohmann::json::array();
    for (const ShapeEntry& e : shapes) {
        nlohmann::json s = shape_to_json(e.shape);
        s["id"] = e.id;
        s["role"] = e.seen ? "seen" : "unseen";
        s["record_count"] = e.record_count;
        arr.push_back(s);
    }
    j["shapes"] = arr;
    return j;
}

ShapeSet ShapeSet::from_json(const nlohmann::json& j) {
    ShapeSet set;
    set.clearance = j.at("clearance_mm");
    for (const auto& s : j.at("shapes")) {
        ShapeEntry e;
        e.id = s.at("id");
        e.shape = shape_from_json(s);
        e.seen = s.at("role") == "seen";
        e.record_count = s.at("record_count");
        set.shapes.push_back(std::move(e));
    }
    return set;
}

ShapeSetConfig desk_shape_config() { return ShapeSetConfig{}; }

ShapeSetConfig paper_shape_config() {
    ShapeSetConfig cfg;
    cfg.shapes_per_seen_class = 20;
    cfg.shapes_per_unseen_class = 20;
    cfg.records_per_seen_shape = 3200;
    cfg.records_per_unseen_shape = 1000;
    return cfg;
}

ShapeSet generate_shape_set(const ShapeSetConfig& cfg, std::uint64_t seed) {
    ShapeSet set;
    set.clearance = cfg.clearance;
    std::uint32_t id = 0;
    auto add_class = [&](int n, int count, bool seen, int records) {
        for (int i = 0; i < count; ++i) {
            // Some (n, instance) streams yield offset self-intersections for
            // concave shapes; step the sub-seed until the hole is valid.
            for (std::uint64_t sub = 0;; ++sub) {
                RngStream rng = RngStream::derive(seed, {static_cast<std::uint64_t>(n),
                                                         static_cast<std::uint64_t>(i), sub});
                PolygonShape shape = generate_polygon(n, rng);
                try {
                    offset_polygon(shape, cfg.clearance);
                } catch (const std::runtime_error&) {
                    continue;
                }
                shape.seed = seed;
                set.shapes.push_back(ShapeEntry{id, std::move(shape), seen, records});
                break;
            }
            id++;
        }
    };
    for (int n : cfg.seen_classes) add_class(n, cfg.shapes_per_seen_class, true, cfg.records_per_seen_shape);
    for (int n : cfg.unseen_classes) add_class(n, cfg.shapes_per_unseen_class, false, cfg.records_per_unseen_shape);
    return set;
}

MisalignmentRecord generate_record(const ContactScene& scene, std::uint32_t shape_id,
                                   const MisalignmentOffset& offset,
                                   const ComplianceConfig& compliance, const DomainConfig& domain,
                                   RngStream& rng) {
    MisalignmentRecord rec;
    rec.shape_id = shape_id;
    rec.domain = static_cast<std::uint8_t>(domain.tag);
    rec.offset = offset;

    RigidPose cmd{offset.dx, offset.dy, 0.0, offset.dox, offset.doy, offset.doz};
    // The lowest peg corner under the commanded rotation fixes the first z
    // that can possibly touch; start the descent one step above it.
    const double rad = 3.14159265358979323846 / 180.0;
    double a = offset.dox * rad, b = offset.doy * rad, c0 = offset.doz * rad;
    double zx = std::sin(a) * std::sin(c0) - std::cos(a) * std::sin(b) * std::cos(c0);
    double zy = std::sin(a) * std::cos(c0) + std::cos(a) * std::sin(b) * std::sin(c0);
    double min_z = 0.0;
    for (const Vec2& v : scene.pair.peg.vertices)
        min_z = std::min(min_z, zx * v.x + zy * v.y);
    double z_start = std::ceil((-min_z + 0.5) / kInsertStepMm) * kInsertStepMm;

    std::optional<RigidPose> warm;
    bool contact = false;
    for (double z = z_start; z >= -3.0 - 1e-9; z -= kInsertStepMm) {
        cmd.z = z;
        SettleResult s = settle(scene, cmd, compliance, domain, rng, warm);
        warm = s.pose;
        if (std::abs(s.wrench.fz) > kContactThresholdN) {
            contact = true;
            break;
        }
    }
    if (!contact) {
        rec.flags |= kFlagFreeInsert;
        return rec;
    }

    ProbeResult probe = multi_point_contact(scene, cmd, compliance, domain, rng);
    rec.pose = extrinsic_from_pose(probe.initial_pose);
    rec.signature = probe.signature.values;
    if (probe.signature.unstable) rec.flags |= kFlagUnstable;
    for (bool lost : probe.signature.lost_contact)
        if (lost) rec.flags |= kFlagLostContact;
    return rec;
}

Dataset generate_dataset(const ShapeSet& shapes, const DatasetGenConfig& cfg,
                         const DomainConfig& domain, std::uint64_t seed, GenReport* report) {
    struct Task {
        const ShapeEntry* entry;
        int record_index;
    };
    std::vector<Task> tasks;
    for (const ShapeEntry& e : shapes.shapes)
        for (int i = 0; i < e.record_count; ++i) tasks.push_back({&e, i});

    Dataset ds;
    ds.records.resize(tasks.size());
    std::vector<ContactScene> scenes;
    scenes.reserve(shapes.shapes.size());
    for (const ShapeEntry& e : shapes.shapes)
        scenes.push_back(make_scene(make_peg_hole_pair(e.shape, shapes.clearance), cfg.contact));
    std::vector<std::size_t> scene_of(tasks.size());
    {
        std::size_t si = 0;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (t > 0 && tasks[t].entry != tasks[t - 1].entry) si++;
            scene_of[t] = si;
        }
    }

    parallel_for(static_cast<std::int64_t>(tasks.size()), cfg.workers, [&](std::int64_t ti) {
        const Task& task = tasks[static_cast<std::size_t>(ti)];
        const ShapeEntry& e = *task.entry;
        RngStream rng = RngStream::derive(seed, {e.id, static_cast<std::uint64_t>(task.record_index),
                                                 static_cast<std::uint64_t>(domain.tag)});
        MisalignmentOffset off = sample_offset(rng);
        MisalignmentRecord rec = generate_record(scenes[scene_of[static_cast<std::size_t>(ti)]],
                                                 e.id, off, cfg.compliance, domain, rng);
        if (e.seen) {
            if (task.record_index < cfg.train_per_shape) rec.set_split(Split::Train);
            else if (task.record_index < cfg.train_per_shape + cfg.val_per_shape) rec.set_split(Split::Val);
            else rec.set_split(Split::Test);
        } else {
            rec.set_split(Split::Test);
        }
        ds.records[static_cast<std::size_t>(ti)] = rec;
    });

    ds.compute_stats();
    if (report) {
        report->records = static_cast<std::int64_t>(ds.records.size());
        for (const MisalignmentRecord& r : ds.records) {
            if (r.free_insert()) report->free_insert++;
            if (r.unstable()) report->unstable++;
            if (r.lost_contact()) report->lost_contact++;
        }
    }
    return ds;
}

nlohmann::json GenReport::to_json() const {
    nlohmann::json j;
    j["records"] = records;
    j["free_insert"] = free_insert;
    j["unstable"] = unstable;
    j["lost_contact"] = lost_contact;
    j["free_insert_rate"] = records > 0 ? static_cast<double>(free_insert) / static_cast<double>(records) : 0.0;
    return j;
}

void PairedDataset::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic("PFPR");
    w.u32(1);
    w.u32(m);
    w.u32(k);
    w.u64(pairs.size());
    for (const PairedRecord& p : pairs) {
        w.u32(p.shape_id);
        w.u8(p.role);
        w.f64(p.offset.dx); w.f64(p.offset.dy);
        w.f64(p.offset.dox); w.f64(p.offset.doy); w.f64(p.offset.doz);
        write_record(w, p.sim);
        write_record(w, p.real);
    }
}

PairedDataset PairedDataset::load(const std::string& path) {
    BinaryReader rd(path);
    rd.expect_magic("PFPR");
    std::uint32_t version = rd.u32();
    if (version != 1) throw std::runtime_error(path + ": unsupported PFPR version");
    PairedDataset d;
    d.m = rd.u32();
    d.k = rd.u32();
    std::uint64_t count = rd.u64();
    d.pairs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        PairedRecord p;
        p.shape_id = rd.u32();
        p.role = rd.u8();
        p.offset.dx = rd.f64(); p.offset.dy = rd.f64();
        p.offset.dox = rd.f64(); p.offset.doy = rd.f64(); p.offset.doz = rd.f64();
        p.sim = read_record(rd);
        p.real = read_record(rd);
        d.pairs.push_back(p);
    }
    return d;
}

PairedDataset generate_paired_dataset(const ShapeSet& shapes, const PairedGenConfig& cfg,
                                      const DomainConfig& sim_domain, const DomainConfig& real_domain,
                                      std::uint64_t seed) {
    struct Task {
        const ShapeEntry* entry;
        int pose_index;
        std::uint8_t role;
    };
    std::vector<Task> tasks;
    for (const ShapeEntry& e : shapes.shapes) {
        if (e.seen)
            for (int i = 0; i < cfg.train_poses_per_shape; ++i) tasks.push_back({&e, i, 0});
        for (int i = 0; i < cfg.eval_poses_per_shape; ++i) tasks.push_back({&e, i, 1});
    }

    PairedDataset out;
    out.pairs.resize(tasks.size());
    std::vector<ContactScene> scenes;
    scenes.reserve(shapes.shapes.size());
    for (const ShapeEntry& e : shapes.shapes)
        scenes.push_back(make_scene(make_peg_hole_pair(e.shape, shapes.clearance), cfg.contact));
    std::vector<std::size_t> scene_index;
    {
        std::size_t si = 0;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (t > 0 && tasks[t].entry != tasks[t - 1].entry) si++;
            scene_index.push_back(si);
        }
    }

    parallel_for(static_cast<std::int64_t>(tasks.size()), cfg.workers, [&](std::int64_t ti) {
        const Task& task = tasks[static_cast<std::size_t>(ti)];
        const ShapeEntry& e = *task.entry;
        const ContactScene& scene = scenes[scene_index[static_cast<std::size_t>(ti)]];
        RngStream offset_rng = RngStream::derive(seed, {0xabcdULL, e.id,
                                                        static_cast<std::uint64_t>(task.pose_index),
                                                        task.role});
        PairedRecord pair;
        pair.shape_id = e.id;
        pair.role = task.role;
        bool found = false;
        for (int attempt = 0; attempt < 100 && !found; ++attempt) {
            MisalignmentOffset off = sample_offset(offset_rng);
            RngStream sim_rng = RngStream::derive(seed, {0x51aaULL, e.id,
                                                         static_cast<std::uint64_t>(task.pose_index),
                                                         task.role, static_cast<std::uint64_t>(attempt), 0});
            RngStream real_rng = RngStream::derive(real_domain.noise_seed ^ seed,
                                                   {0x4ea1ULL, e.id,
                                                    static_cast<std::uint64_t>(task.pose_index),
                                                    task.role, static_cast<std::uint64_t>(attempt), 1});
            MisalignmentRecord sim = generate_record(scene, e.id, off, cfg.compliance, sim_domain, sim_rng);
            if (sim.free_insert()) continue;
            MisalignmentRecord real = generate_record(scene, e.id, off, cfg.compliance, real_domain, real_rng);
            if (real.free_insert()) continue;
            pair.offset = off;
            pair.sim = sim;
            pair.real = real;
            found = true;
        }
        if (!found)
            throw std::runtime_error("generate_paired_dataset: could not find contact offset");
        out.pairs[static_cast<std::size_t>(ti)] = pair;
    });
    return out;
}

}  // namespace pegfit
