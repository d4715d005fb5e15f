#include "pegfit/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pegfit/io.hpp"
#include "pegfit/parallel.hpp"

namespace pegfit {

namespace {

nlohmann::json pose_json(const ExtrinsicPose& p) {
    return {{"px", p.px}, {"py", p.py}, {"ox", p.ox}, {"oy", p.oy}, {"oz", p.oz}};
}

// Descend in fixed steps until the averaged |Fz| crosses the contact
// threshold. Returns false if the peg reaches 3 mm below the plate freely.
bool descend_to_contact(const ContactScene& scene, RigidPose& cmd, const ComplianceConfig& compliance,
                        const DomainConfig& domain, RngStream& rng) {
    const double rad = 3.14159265358979323846 / 180.0;
    double a = cmd.ox * rad, b = cmd.oy * rad, c0 = cmd.oz * rad;
    double zx = std::sin(a) * std::sin(c0) - std::cos(a) * std::sin(b) * std::cos(c0);
    double zy = std::sin(a) * std::cos(c0) + std::cos(a) * std::sin(b) * std::sin(c0);
    double min_z = 0.0;
    for (const Vec2& v : scene.pair.peg.vertices)
        min_z = std::min(min_z, zx * v.x + zy * v.y);
    double z_start = std::ceil((-min_z + 0.5) / kInsertStepMm) * kInsertStepMm;

    std::optional<RigidPose> warm;
    for (double z = z_start; z >= -3.0 - 1e-9; z -= kInsertStepMm) {
        cmd.z = z;
        SettleResult s = settle(scene, cmd, compliance, domain, rng, warm);
        warm = s.pose;
        if (std::abs(s.wrench.fz) > kContactThresholdN) return true;
    }
    return false;
}

}  // namespace

nlohmann::json TrialRecord::to_json() const {
    nlohmann::json trials_json = nlohmann::json::array();
    for (const TrialEntry& t : trials) {
        nlohmann::json e;
        e["free_insert"] = t.free_insert;
        e["inserted"] = t.inserted;
        if (!t.free_insert) {
            e["estimated"] = pose_json(t.estimated);
            e["true_pose"] = pose_json(t.true_pose);
            e["ma_p_mm"] = t.ma_p;
            e["ma_o_deg"] = t.ma_o;
        }
        trials_json.push_back(e);
    }
    return nlohmann::json{{"scenario_id", scenario_id},
                          {"shape_id", shape_id},
                          {"offset", {{"dx", initial_offset.dx}, {"dy", initial_offset.dy},
                                      {"dox", initial_offset.dox}, {"doy", initial_offset.doy},
                                      {"doz", initial_offset.doz}}},
                          {"trials", trials_json},
                          {"success", success},
                          {"trials_used", trials_used},
                          {"aborted_unstable", aborted_unstable}};
}

TrialRecord run_trial(const ContactScene& scene, std::uint32_t shape_id,
                      const MisalignmentOffset& offset, const PoseEstimatorFn& estimator,
                      const ComplianceConfig& compliance, const DomainConfig& domain,
                      RngStream& rng, int max_trials) {
    TrialRecord rec;
    rec.shape_id = shape_id;
    rec.initial_offset = offset;

    RigidPose cmd{offset.dx, offset.dy, 0.0, offset.dox, offset.doy, offset.doz};
    for (int trial = 1; trial <= max_trials; ++trial) {
        rec.trials_used = trial;
        TrialEntry entry;
        if (!descend_to_contact(scene, cmd, compliance, domain, rng)) {
            // Within clearance: insert directly.
            entry.free_insert = true;
            RigidPose ins_cmd = cmd;
            ins_cmd.z = 1.0;
            InsertionResult ins = attempt_insertion(scene, ins_cmd, compliance, domain, rng);
            entry.inserted = ins.success;
            rec.trials.push_back(entry);
            rec.success = ins.success;
            break;
        }
        ProbeResult probe;
        try {
            probe = multi_point_contact(scene, cmd, compliance, domain, rng);
        } catch (const std::runtime_error&) {
            rec.aborted_unstable = true;
            break;
        }
        if (probe.signature.unstable) {
            rec.aborted_unstable = true;
            break;
        }
        entry.true_pose = extrinsic_from_pose(probe.initial_pose);
        entry.estimated = estimator(probe.signature.values);
        entry.ma_p = std::max(std::abs(entry.estimated.px - entry.true_pose.px),
                              std::abs(entry.estimated.py - entry.true_pose.py));
        entry.ma_o = std::max({std::abs(entry.estimated.ox - entry.true_pose.ox),
                               std::abs(entry.estimated.oy - entry.true_pose.oy),
                               std::abs(entry.estimated.oz - entry.true_pose.oz)});

        // One-shot correction: align the peg to the hole per the estimate.
        cmd.x -= entry.estimated.px;
        cmd.y -= entry.estimated.py;
        cmd.ox -= entry.estimated.ox;
        cmd.oy -= entry.estimated.oy;
        cmd.oz -= entry.estimated.oz;

        RigidPose ins_cmd = cmd;
        ins_cmd.z = 1.0;
        InsertionResult ins = attempt_insertion(scene, ins_cmd, compliance, domain, rng);
        entry.inserted = ins.success;
        rec.trials.push_back(entry);
        if (ins.success) {
            rec.success = true;
            break;
        }
        // Re-contact at the corrected pose next trial.
    }
    return rec;
}

std::vector<Vec2> spiral_points(double pitch, int count) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(count));
    pts.push_back({0.0, 0.0});
    double b = pitch / (2.0 * 3.14159265358979323846);
    double theta = std::sqrt(2.0 * pitch / b);
    for (int i = 1; i < count; ++i) {
        double r = b * theta;
        pts.push_back({r * std::cos(theta), r * std::sin(theta)});
        theta += pitch / std::max(r, pitch);
    }
    return pts;
}

TrialRecord spiral_search(const ContactScene& scene, std::uint32_t shape_id,
                          const MisalignmentOffset& offset, const ComplianceConfig& compliance,
                          const DomainConfig& domain, RngStream& rng, double pitch, int max_probes) {
    TrialRecord rec;
    rec.shape_id = shape_id;
    rec.initial_offset = offset;

    std::vector<Vec2> pts = spiral_points(pitch, max_probes);
    for (int probe = 0; probe < max_probes; ++probe) {
        RigidPose cmd{offset.dx + pts[static_cast<std::size_t>(probe)].x,
                      offset.dy + pts[static_cast<std::size_t>(probe)].y,
                      1.0, offset.dox, offset.doy, offset.doz};
        InsertionResult ins = attempt_insertion(scene, cmd, compliance, domain, rng, /*fast_fail=*/true);
        rec.trials_used = probe + 1;
        if (ins.success) {
            rec.success = true;
            break;
        }
    }
    return rec;
}

nlohmann::json SuiteReport::summary_json() const {
    nlohmann::json methods_json = nlohmann::json::array();
    for (const MethodReport& m : methods) {
        nlohmann::json rows = nlohmann::json::array();
        for (const SuiteClassRow& r : m.rows)
            rows.push_back({{"vertex_class", r.vertex_class},
                            {"seen", r.seen},
                            {"scenarios", r.scenarios},
                            {"successes", r.successes},
                            {"success_rate_pct", r.success_rate},
                            {"avg_trials", r.avg_trials}});
        methods_json.push_back({{"method", m.method},
                                {"rows", rows},
                                {"seen_sr_pct", m.seen_sr},
                                {"unseen_sr_pct", m.unseen_sr},
                                {"seen_avg_trials", m.seen_at},
                                {"unseen_avg_trials", m.unseen_at},
                                {"median_ma_p_per_trial", m.median_ma_p_per_trial}});
    }
    return nlohmann::json{{"methods", methods_json}};
}

std::string SuiteReport::to_csv() const {
    std::ostringstream out;
    out << "method,group,vertex_class,scenarios,successes,success_rate_pct,avg_trials\n";
    for (const MethodReport& m : methods) {
        for (const SuiteClassRow& r : m.rows)
            out << m.method << "," << (r.seen ? "seen" : "unseen") << "," << r.vertex_class << ","
                << r.scenarios << "," << r.successes << "," << fmt_double(r.success_rate) << ","
                << fmt_double(r.avg_trials) << "\n";
        out << m.method << ",seen,avg,,," << fmt_double(m.seen_sr) << "," << fmt_double(m.seen_at) << "\n";
        out << m.method << ",unseen,avg,,," << fmt_double(m.unseen_sr) << "," << fmt_double(m.unseen_at) << "\n";
    }
    return out.str();
}

const MethodReport& SuiteReport::method(const std::string& name) const {
    for (const MethodReport& m : methods)
        if (m.method == name) return m;
    throw std::runtime_error("SuiteReport: no method " + name);
}

SuiteReport evaluate_suite(const ShapeSet& shapes, const std::vector<SuiteMethod>& methods,
                           const SuiteConfig& cfg, const DomainConfig& domain, std::uint64_t seed) {
    struct Scenario {
        const ShapeEntry* entry;
        std::size_t scene_index;
        int index;
        MisalignmentOffset offset;
    };
    std::vector<ContactScene> scenes;
    scenes.reserve(shapes.shapes.size());
    std::vector<Scenario> scenarios;
    for (std::size_t si = 0; si < shapes.shapes.size(); ++si) {
        const ShapeEntry& e = shapes.shapes[si];
        scenes.push_back(make_scene(make_peg_hole_pair(e.shape, shapes.clearance), cfg.contact));
        for (int i = 0; i < cfg.scenarios_per_shape; ++i) {
            RngStream rng = RngStream::derive(seed, {0x5c3aULL, e.id, static_cast<std::uint64_t>(i)});
            scenarios.push_back({&e, si, i, sample_offset(rng)});
        }
    }

    SuiteReport report;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const SuiteMethod& method = methods[mi];
        MethodReport mr;
        mr.method = method.name;
        mr.records.resize(scenarios.size());
        parallel_for(static_cast<std::int64_t>(scenarios.size()), cfg.workers, [&](std::int64_t i) {
            const Scenario& sc = scenarios[static_cast<std::size_t>(i)];
            RngStream rng = RngStream::derive(seed, {0x7217ULL, sc.entry->id,
                                                     static_cast<std::uint64_t>(sc.index)});
            TrialRecord rec = method.estimator
                                  ? run_trial(scenes[sc.scene_index], sc.entry->id, sc.offset,
                                              method.estimator, cfg.compliance, domain, rng)
                                  : spiral_search(scenes[sc.scene_index], sc.entry->id, sc.offset,
                                                  cfg.compliance, domain, rng);
            rec.scenario_id = static_cast<std::uint32_t>(i);
            mr.records[static_cast<std::size_t>(i)] = std::move(rec);
        });

        std::map<std::uint32_t, std::pair<int, bool>> info;
        for (const ShapeEntry& e : shapes.shapes) info[e.id] = {e.shape.n(), e.seen};
        std::map<int, SuiteClassRow> by_class;
        struct GroupAcc {
            std::int64_t scen = 0, succ = 0, trials = 0;
        } seen_acc, unseen_acc;
        std::vector<std::vector<double>> ma_p_by_trial;
        for (const TrialRecord& rec : mr.records) {
            auto [vclass, seen] = info.at(rec.shape_id);
            SuiteClassRow& row = by_class[vclass];
            row.vertex_class = vclass;
            row.seen = seen;
            row.scenarios++;
            GroupAcc& acc = seen ? seen_acc : unseen_acc;
            acc.scen++;
            if (rec.success) {
                row.successes++;
                row.avg_trials += rec.trials_used;
                acc.succ++;
                acc.trials += rec.trials_used;
            }
            for (std::size_t t = 0; t < rec.trials.size(); ++t) {
                if (rec.trials[t].free_insert) continue;
                if (ma_p_by_trial.size() <= t) ma_p_by_trial.resize(t + 1);
                ma_p_by_trial[t].push_back(rec.trials[t].ma_p);
            }
        }
        for (auto& [vclass, row] : by_class) {
            row.success_rate = row.scenarios > 0 ? 100.0 * static_cast<double>(row.successes) / static_cast<double>(row.scenarios) : 0.0;
            row.avg_trials = row.successes > 0 ? row.avg_trials / static_cast<double>(row.successes) : 0.0;
            mr.rows.push_back(row);
        }
        mr.seen_sr = seen_acc.scen > 0 ? 100.0 * static_cast<double>(seen_acc.succ) / static_cast<double>(seen_acc.scen) : 0.0;
        mr.unseen_sr = unseen_acc.scen > 0 ? 100.0 * static_cast<double>(unseen_acc.succ) / static_cast<double>(unseen_acc.scen) : 0.0;
        mr.seen_at = seen_acc.succ > 0 ? static_cast<double>(seen_acc.trials) / static_cast<double>(seen_acc.succ) : 0.0;
        mr.unseen_at = unseen_acc.succ > 0 ? static_cast<double>(unseen_acc.trials) / static_cast<double>(unseen_acc.succ) : 0.0;
        for (std::vector<double>& v : ma_p_by_trial) {
            std::sort(v.begin(), v.end());
            mr.median_ma_p_per_trial.push_back(v.empty() ? 0.0 : v[v.size() / 2]);
        }
        report.methods.push_back(std::move(mr));
    }
    return report;
}

}  // namespace pegfit
