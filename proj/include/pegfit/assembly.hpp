#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pegfit/contact.hpp"
#include "pegfit/dataset.hpp"

#include <json.hpp>

namespace pegfit {

// Pose predictor fed by the probe signature; plain and adapted estimators
// both fit this signature.
using PoseEstimatorFn = std::function<ExtrinsicPose(const std::array<double, 25>&)>;

struct TrialEntry {
    ExtrinsicPose estimated;
    ExtrinsicPose true_pose;  // settled pose at probe column 0
    double ma_p = 0.0;        // max abs position estimation error, mm
    double ma_o = 0.0;        // max abs orientation estimation error, deg
    bool inserted = false;
    bool free_insert = false;  // no contact found, direct insertion
};

struct TrialRecord {
    std::uint32_t scenario_id = 0;
    std::uint32_t shape_id = 0;
    MisalignmentOffset initial_offset;
    std::vector<TrialEntry> trials;
    bool success = false;
    int trials_used = 0;
    bool aborted_unstable = false;

    nlohmann::json to_json() const;
};

constexpr int kMaxTrials = 5;

// Closed loop: contact, probe, estimate, subtract the estimate from the
// commanded pose, attempt insertion; repeat up to kMaxTrials.
TrialRecord run_trial(const ContactScene& scene, std::uint32_t shape_id,
                      const MisalignmentOffset& offset, const PoseEstimatorFn& estimator,
                      const ComplianceConfig& compliance, const DomainConfig& domain,
                      RngStream& rng, int max_trials = kMaxTrials);

constexpr double kSpiralPitchMm = 1.0;
constexpr int kSpiralMaxProbes = 100;

// Archimedean spiral of press-down probes around the initial lateral pose;
// orientation is never corrected. trials_used reports probes spent.
TrialRecord spiral_search(const ContactScene& scene, std::uint32_t shape_id,
                          const MisalignmentOffset& offset, const ComplianceConfig& compliance,
                          const DomainConfig& domain, RngStream& rng,
                          double pitch = kSpiralPitchMm, int max_probes = kSpiralMaxProbes);

// Lateral spiral targets relative to the start pose; index 0 is the center.
std::vector<Vec2> spiral_points(double pitch, int count);

struct SuiteMethod {
    std::string name;
    PoseEstimatorFn estimator;  // empty estimator = spiral search
};

struct SuiteClassRow {
    int vertex_class = 0;
    bool seen = true;
    std::int64_t scenarios = 0;
    std::int64_t successes = 0;
    double success_rate = 0.0;  // percent
    double avg_trials = 0.0;    // over successful scenarios
};

struct MethodReport {
    std::string method;
    std::vector<SuiteClassRow> rows;
    double seen_sr = 0.0, unseen_sr = 0.0;
    double seen_at = 0.0, unseen_at = 0.0;
    std::vector<double> median_ma_p_per_trial;  // estimator methods only
    std::vector<TrialRecord> records;
};

struct SuiteReport {
    std::vector<MethodReport> methods;

    nlohmann::json summary_json() const;
    std::string to_csv() const;  // Table-4-shaped SR block plus AT
    const MethodReport& method(const std::string& name) const;
};

struct SuiteConfig {
    int scenarios_per_shape = 20;
    ComplianceConfig compliance;
    ContactParams contact = desk_contact_params();
    int workers = 1;
};

// Paired comparison: every method sees the identical (shape, offset, noise
// stream) scenarios. Scenario outputs are slotted by id, so the suite is
// deterministic for any worker count.
SuiteReport evaluate_suite(const ShapeSet& shapes, const std::vector<SuiteMethod>& methods,
                           const SuiteConfig& cfg, const DomainConfig& domain, std::uint64_t seed);

}  // namespace pegfit
