#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pegfit/geometry.hpp"
#include "pegfit/rng.hpp"

namespace pegfit {

// Pose of the peg sensor frame (bottom-face origin, peg axes) relative to the
// hole frame. z is height of the bottom-face origin above plate_top_z.
// Orientation is intrinsic X-Y-Z Euler, degrees, stored in (-180, 180].
struct RigidPose {
    double x = 0.0, y = 0.0, z = 0.0;
    double ox = 0.0, oy = 0.0, oz = 0.0;
};

RigidPose normalize_angles(RigidPose p);

struct Wrench {
    double fx = 0.0, fy = 0.0, fz = 0.0;  // N
    double tx = 0.0, ty = 0.0, tz = 0.0;  // N*mm

    Wrench& operator+=(const Wrench& o);
    Wrench operator*(double s) const;
    Wrench operator-() const { return *this * -1.0; }
};

double wrench_norm(const Wrench& w);

struct ComplianceConfig {
    std::array<double, 6> stiffness{50.0, 50.0, 50.0, 500.0, 500.0, 500.0};  // N/mm, N*mm/deg
    double fz_cmd = 10.0;  // press force, N
    double beta = 0.3;     // relaxation gain
    int max_iters = 500;
    double eps = 1e-4;     // pose-update stop norm (mm / deg)
    int avg_window = 50;   // wrench averaging window W
};

struct ContactParams {
    double kn = 10.0;               // N/mm per sample
    double mu = 0.3;                // Coulomb friction
    double boundary_spacing = 0.5;  // mm, perimeter rings
    double face_grid = 2.0;         // mm, bottom-face interior grid
    double ring_spacing = 2.0;      // mm, vertical gap between side rings
    double ring_max_height = 18.0;  // mm of side wall covered by rings
    double slip_reg = 0.05;         // mm, friction regularization
};

// Lighter sampling preset used by dataset generation and the assembly suite;
// the contact force law is identical, only sample density changes.
ContactParams desk_contact_params();

enum class Domain : std::uint8_t { Sim = 0, PseudoReal = 1 };

// Fixed perturbation of the simulator physics plus a nonlinear sensor model.
// Stands in for the hardware gap the adaptation stage has to close.
struct DomainConfig {
    Domain tag = Domain::Sim;
    double kn_scale = 1.0;
    double mu_offset = 0.0;
    std::array<double, 6> gains{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    double yaw_bias_deg = 0.0;
    double tau_sat = 0.0;  // N*mm tanh torque saturation, 0 = off
    double sigma_f = 0.0;  // N
    double sigma_t = 0.0;  // N*mm
    Wrench bias{};
    std::uint64_t noise_seed = 0;

    static DomainConfig sim();
    static DomainConfig pseudo_real_default();
};

// Peg sample points in the local frame (z up from the bottom face): bottom
// perimeter + bottom-face grid + side-wall rings. Built once per pair.
struct PegSampleSet {
    std::vector<std::array<double, 3>> points;
    std::size_t bottom_count = 0;  // points with z == 0 (perimeter + grid)
};

PegSampleSet build_sample_set(const PegHolePair& pair, const ContactParams& params);

// Pre-assembled scene: pair + params + cached samples. All contact queries
// below are pure functions of (scene, pose), safe to call concurrently.
struct ContactScene {
    PegHolePair pair;
    ContactParams params;
    PegSampleSet samples;
};

ContactScene make_scene(const PegHolePair& pair, const ContactParams& params);

struct WrenchPair {
    Wrench world;       // force at sensor origin, world axes
    Wrench sensor;      // same wrench expressed in peg axes
    std::array<double, 6> contact_stiffness{};  // diagonal estimate for the solver
    double max_penetration = 0.0;
    int contacts = 0;
};

// Instantaneous penalty contact wrench. Points below the plate top and
// laterally outside the hole polygon are in material; the smaller of the
// vertical and lateral exit translations picks floor vs wall mode. Friction
// (floor mode) opposes the point's lateral slip from its commanded location.
// Throws if any sample penetrates deeper than the extrusion height.
WrenchPair contact_wrench_full(const ContactScene& scene, const RigidPose& pose,
                               const RigidPose& commanded, double kn_eff, double mu_eff);

// Spec-surface convenience: sensor-frame wrench at `pose`, friction reference
// = pose itself (zero slip, so no friction contribution).
Wrench contact_wrench(const PegHolePair& pair, const RigidPose& pose, const ContactParams& params);

// Sensor model: yaw-rotate, per-axis gain, tanh torque saturation, constant
// bias, additive Gaussian noise. Sim domain is the exact identity.
Wrench sensor_transform(const Wrench& w, const DomainConfig& domain, RngStream& noise);

struct SettleResult {
    RigidPose pose;
    Wrench wrench;     // averaged over the final W iterations, sensor frame,
                       // reaction sign (reads -contact), domain-transformed
    bool converged = false;
    int iters = 0;
    double max_penetration = 0.0;
};

// Quasi-static admittance relaxation to the pose where spring-to-commanded,
// press, and contact forces balance. The update scales by the estimated
// total stiffness per axis so stiff contacts stay stable; the fixed point is
// unchanged by that scaling. Deterministic for fixed inputs.
SettleResult settle(const ContactScene& scene, const RigidPose& commanded,
                    const ComplianceConfig& compliance, const DomainConfig& domain,
                    RngStream& noise, const std::optional<RigidPose>& warm_start = std::nullopt);

// 5 x k contact signature, rows (Fx, Fy, Tx, Ty, Tz), column 0 the initial
// contact followed by the m probe contacts.
struct ContactSignature {
    int m = 4;
    double probe_delta_deg = 10.0;
    std::array<double, 25> values{};  // row-major 5 x (m+1)
    std::array<bool, 5> lost_contact{};
    bool unstable = false;

    int k() const { return m + 1; }
    double& at(int row, int col) { return values[static_cast<std::size_t>(row * k() + col)]; }
    double at(int row, int col) const { return values[static_cast<std::size_t>(row * k() + col)]; }
};

struct ProbeResult {
    ContactSignature signature;
    RigidPose initial_pose;   // settled pose of column 0 (the extrinsic pose)
    Wrench initial_wrench;
};

constexpr double kContactThresholdN = 0.5;

// Initial settle plus probes at (+d about X), (-d about X), (+d about Y),
// (-d about Y) commanded relative to the initial pose; each probe settles
// independently from its own command. Throws if the initial settle does not
// reach the contact threshold.
ProbeResult multi_point_contact(const ContactScene& scene, const RigidPose& initial_commanded,
                                const ComplianceConfig& compliance, const DomainConfig& domain,
                                RngStream& noise, int m = 4, double delta_deg = 10.0);

struct InsertionResult {
    bool success = false;
    double depth = 0.0;  // mm below plate top reached by the sensor origin
    int steps = 0;
    bool jammed = false;
};

constexpr double kInsertDepthMm = 15.0;
constexpr double kInsertStepMm = 0.5;

// Commands stepwise descent to kInsertDepthMm at fixed lateral/orientation.
// Success requires depth >= kInsertDepthMm - kInsertStepMm; a lateral wrench
// above jam_threshold while depth stalls for 5 consecutive steps aborts.
// fast_fail additionally aborts unpromising probes early (spiral search).
InsertionResult attempt_insertion(const ContactScene& scene, const RigidPose& commanded,
                                  const ComplianceConfig& compliance, const DomainConfig& domain,
                                  RngStream& noise, bool fast_fail = false,
                                  double jam_threshold = 2.0);

}  // namespace pegfit
