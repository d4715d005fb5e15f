#include "pegfit/contact.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace pegfit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

struct Mat3 {
    std::array<double, 9> m{};  // row-major
    std::array<double, 3> mul(const std::array<double, 3>& v) const {
        return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
                m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
                m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
    }
    std::array<double, 3> tmul(const std::array<double, 3>& v) const {  // transpose * v
        return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
                m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
                m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
    }
};

Mat3 rotation_xyz(double ox_deg, double oy_deg, double oz_deg) {
    double a = deg2rad(ox_deg), b = deg2rad(oy_deg), c = deg2rad(oz_deg);
    double ca = std::cos(a), sa = std::sin(a);
    double cb = std::cos(b), sb = std::sin(b);
    double cc = std::cos(c), sc = std::sin(c);
    // R = Rx(a) * Ry(b) * Rz(c)
    Mat3 r;
    r.m = {cb * cc, -cb * sc, sb,
           ca * sc + sa * sb * cc, ca * cc - sa * sb * sc, -sa * cb,
           sa * sc - ca * sb * cc, sa * cc + ca * sb * sc, ca * cb};
    return r;
}

std::array<double, 3> cross3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double wrap_angle(double deg) {
    double a = std::fmod(deg + 180.0, 360.0);
    if (a < 0.0) a += 360.0;
    return a - 180.0;
}

}  // namespace

RigidPose normalize_angles(RigidPose p) {
    p.ox = wrap_angle(p.ox);
    p.oy = wrap_angle(p.oy);
    p.oz = wrap_angle(p.oz);
    return p;
}

Wrench& Wrench::operator+=(const Wrench& o) {
    fx += o.fx; fy += o.fy; fz += o.fz;
    tx += o.tx; ty += o.ty; tz += o.tz;
    return *this;
}

Wrench Wrench::operator*(double s) const { return {fx * s, fy * s, fz * s, tx * s, ty * s, tz * s}; }

double wrench_norm(const Wrench& w) {
    return std::sqrt(w.fx * w.fx + w.fy * w.fy + w.fz * w.fz + w.tx * w.tx + w.ty * w.ty + w.tz * w.tz);
}

ContactParams desk_contact_params() {
    ContactParams p;
    p.boundary_spacing = 1.0;
    p.face_grid = 3.0;
    p.ring_spacing = 2.5;
    return p;
}

DomainConfig DomainConfig::sim() { return DomainConfig{}; }

DomainConfig DomainConfig::pseudo_real_default() {
    DomainConfig d;
    d.tag = Domain::PseudoReal;
    d.kn_scale = 1.5;
    d.mu_offset = 0.2;
    // Per-axis gains drawn once in [0.8, 1.2] from a fixed stream.
    RngStream g(0x5eed0fdadbeefULL);
    for (double& v : d.gains) v = g.uniform(0.8, 1.2);
    d.yaw_bias_deg = 2.0;
    // Probe torques reach ~1400 N*mm; this keeps the saturation in the
    // bent-but-invertible regime so adaptation has something to recover.
    d.tau_sat = 1500.0;
    d.sigma_f = 0.05;
    d.sigma_t = 5.0;
    d.bias = Wrench{0.2, -0.1, 0.0, 10.0, -5.0, 8.0};
    return d;
}

PegSampleSet build_sample_set(const PegHolePair& pair, const ContactParams& params) {
    PegSampleSet set;
    // Bottom perimeter ring; per-edge samples without the end vertex so each
    // corner appears exactly once.
    std::vector<Vec2> ring;
    int n = pair.peg.n();
    for (int i = 0; i < n; ++i) {
        Vec2 a = pair.peg.vertices[static_cast<std::size_t>(i)];
        Vec2 b = pair.peg.vertices[static_cast<std::size_t>((i + 1) % n)];
        Vec2 d = b - a;
        double len = norm(d);
        int segs = static_cast<int>(std::floor(len / params.boundary_spacing)) + 1;
        for (int j = 0; j < segs; ++j) {
            double t = static_cast<double>(j) / segs;
            ring.push_back(a + t * d);
        }
    }
    for (const Vec2& p : ring) set.points.push_back({p.x, p.y, 0.0});
    // Bottom-face interior grid.
    double minx = 1e30, maxx = -1e30, miny = 1e30, maxy = -1e30;
    for (const Vec2& v : pair.peg.vertices) {
        minx = std::min(minx, v.x); maxx = std::max(maxx, v.x);
        miny = std::min(miny, v.y); maxy = std::max(maxy, v.y);
    }
    for (double gx = std::floor(minx / params.face_grid) * params.face_grid; gx <= maxx; gx += params.face_grid)
        for (double gy = std::floor(miny / params.face_grid) * params.face_grid; gy <= maxy; gy += params.face_grid)
            if (polygon_sdf(pair.peg, {gx, gy}) < -0.25 * params.face_grid)
                set.points.push_back({gx, gy, 0.0});
    set.bottom_count = set.points.size();
    // Side-wall rings up the extrusion; these carry rim/wall contact when the
    // peg is tilted inside the hole.
    double zmax = std::min(params.ring_max_height, pair.extrusion_height);
    for (double z = params.ring_spacing; z <= zmax + 1e-9; z += params.ring_spacing)
        for (const Vec2& p : ring) set.points.push_back({p.x, p.y, z});
    return set;
}

ContactScene make_scene(const PegHolePair& pair, const ContactParams& params) {
    return ContactScene{pair, params, build_sample_set(pair, params)};
}

WrenchPair contact_wrench_full(const ContactScene& scene, const RigidPose& pose,
                               const RigidPose& commanded, double kn_eff, double mu_eff) {
    const PegHolePair& pair = scene.pair;
    Mat3 r = rotation_xyz(pose.ox, pose.oy, pose.oz);
    Mat3 rc = rotation_xyz(commanded.ox, commanded.oy, commanded.oz);
    std::array<double, 3> t = {pose.x, pose.y, pair.plate_top_z + pose.z};
    std::array<double, 3> tc = {commanded.x, commanded.y, pair.plate_top_z + commanded.z};
    const double deg = kPi / 180.0;

    WrenchPair out;
    std::array<double, 3> f_sum{}, t_sum{};
    for (const auto& lp : scene.samples.points) {
        std::array<double, 3> w = r.mul(lp);
        w[0] += t[0]; w[1] += t[1]; w[2] += t[2];
        double depth = pair.plate_top_z - w[2];
        if (depth <= 0.0) continue;
        if (depth > pair.extrusion_height)
            throw std::runtime_error("contact_wrench: sample penetration exceeds extrusion height");
        Vec2 grad;
        double s = polygon_sdf_grad(pair.hole, {w[0], w[1]}, grad);
        if (s < 0.0) continue;  // inside the hole cavity: free space
        out.contacts++;
        out.max_penetration = std::max(out.max_penetration, std::min(depth, s));
        std::array<double, 3> f{};
        std::array<double, 3> rel = {w[0] - t[0], w[1] - t[1], w[2] - t[2]};
        if (s > 0.0 && s < depth) {
            // Wall mode: shortest exit is lateral, push toward the hole.
            f[0] = -kn_eff * s * grad.x;
            f[1] = -kn_eff * s * grad.y;
            out.contact_stiffness[0] += kn_eff * grad.x * grad.x;
            out.contact_stiffness[1] += kn_eff * grad.y * grad.y;
            out.contact_stiffness[5] += kn_eff * (rel[0] * rel[0] + rel[1] * rel[1]) * deg;
        } else {
            // Floor mode: support force plus Coulomb friction against the
            // lateral slip away from the commanded location of this point.
            double normal = kn_eff * depth;
            f[2] = normal;
            std::array<double, 3> wc = rc.mul(lp);
            double sx = w[0] - (wc[0] + tc[0]);
            double sy = w[1] - (wc[1] + tc[1]);
            double smag = std::sqrt(sx * sx + sy * sy);
            double denom = std::max(smag, scene.params.slip_reg);
            f[0] = -mu_eff * normal * sx / denom;
            f[1] = -mu_eff * normal * sy / denom;
            out.contact_stiffness[2] += kn_eff;
            out.contact_stiffness[3] += kn_eff * rel[1] * rel[1] * deg;
            out.contact_stiffness[4] += kn_eff * rel[0] * rel[0] * deg;
            // Regularized friction behaves as a lateral spring of slope
            // mu*N/denom; without it in the scaling the iteration limit-cycles.
            double kf = mu_eff * normal / denom;
            out.contact_stiffness[0] += kf;
            out.contact_stiffness[1] += kf;
            out.contact_stiffness[5] += kf * (rel[0] * rel[0] + rel[1] * rel[1]) * deg;
        }
        f_sum[0] += f[0]; f_sum[1] += f[1]; f_sum[2] += f[2];
        std::array<double, 3> tq = cross3(rel, f);
        t_sum[0] += tq[0]; t_sum[1] += tq[1]; t_sum[2] += tq[2];
    }
    out.world = Wrench{f_sum[0], f_sum[1], f_sum[2], t_sum[0], t_sum[1], t_sum[2]};
    std::array<double, 3> fs = r.tmul(f_sum);
    std::array<double, 3> ts = r.tmul(t_sum);
    out.sensor = Wrench{fs[0], fs[1], fs[2], ts[0], ts[1], ts[2]};
    return out;
}

Wrench contact_wrench(const PegHolePair& pair, const RigidPose& pose, const ContactParams& params) {
    ContactScene scene = make_scene(pair, params);
    return contact_wrench_full(scene, pose, pose, params.kn, params.mu).sensor;
}

Wrench sensor_transform(const Wrench& w, const DomainConfig& domain, RngStream& noise) {
    if (domain.tag == Domain::Sim) return w;
    Wrench out = w;
    double c = std::cos(deg2rad(domain.yaw_bias_deg));
    double s = std::sin(deg2rad(domain.yaw_bias_deg));
    out = Wrench{c * w.fx - s * w.fy, s * w.fx + c * w.fy, w.fz,
                 c * w.tx - s * w.ty, s * w.tx + c * w.ty, w.tz};
    out.fx *= domain.gains[0]; out.fy *= domain.gains[1]; out.fz *= domain.gains[2];
    out.tx *= domain.gains[3]; out.ty *= domain.gains[4]; out.tz *= domain.gains[5];
    if (domain.tau_sat > 0.0) {
        out.tx = domain.tau_sat * std::tanh(out.tx / domain.tau_sat);
        out.ty = domain.tau_sat * std::tanh(out.ty / domain.tau_sat);
        out.tz = domain.tau_sat * std::tanh(out.tz / domain.tau_sat);
    }
    out += domain.bias;
    if (domain.sigma_f > 0.0 || domain.sigma_t > 0.0) {
        out.fx += domain.sigma_f * noise.gaussian();
        out.fy += domain.sigma_f * noise.gaussian();
        out.fz += domain.sigma_f * noise.gaussian();
        out.tx += domain.sigma_t * noise.gaussian();
        out.ty += domain.sigma_t * noise.gaussian();
        out.tz += domain.sigma_t * noise.gaussian();
    }
    return out;
}

SettleResult settle(const ContactScene& scene, const RigidPose& commanded,
                    const ComplianceConfig& compliance, const DomainConfig& domain,
                    RngStream& noise, const std::optional<RigidPose>& warm_start) {
    double kn_eff = scene.params.kn * domain.kn_scale;
    double mu_eff = scene.params.mu + domain.mu_offset;
    RigidPose cmd = normalize_angles(commanded);
    RigidPose p = warm_start ? normalize_angles(*warm_start) : cmd;

    SettleResult res;
    int w = compliance.avg_window;
    std::vector<Wrench> window(static_cast<std::size_t>(w));
    int recorded = 0;

    for (int iter = 1; iter <= compliance.max_iters; ++iter) {
        WrenchPair wp = contact_wrench_full(scene, p, cmd, kn_eff, mu_eff);
        res.max_penetration = std::max(res.max_penetration, wp.max_penetration);

        std::array<double, 6> force = {
            wp.world.fx - compliance.stiffness[0] * (p.x - cmd.x),
            wp.world.fy - compliance.stiffness[1] * (p.y - cmd.y),
            wp.world.fz - compliance.fz_cmd - compliance.stiffness[2] * (p.z - cmd.z),
            wp.world.tx - compliance.stiffness[3] * (p.ox - cmd.ox),
            wp.world.ty - compliance.stiffness[4] * (p.oy - cmd.oy),
            wp.world.tz - compliance.stiffness[5] * (p.oz - cmd.oz)};
        double step_norm = 0.0;
        std::array<double, 6> delta;
        for (int i = 0; i < 6; ++i) {
            delta[i] = compliance.beta * force[i] / (compliance.stiffness[static_cast<std::size_t>(i)] + wp.contact_stiffness[static_cast<std::size_t>(i)]);
            step_norm = std::max(step_norm, std::abs(delta[i]));
        }
        p.x += delta[0]; p.y += delta[1]; p.z += delta[2];
        p.ox += delta[3]; p.oy += delta[4]; p.oz += delta[5];

        window[static_cast<std::size_t>(recorded % w)] = wp.sensor;
        recorded++;
        res.iters = iter;
        if (step_norm < compliance.eps) {
            res.converged = true;
            break;
        }
    }

    res.pose = normalize_angles(p);
    Wrench avg;
    if (res.converged) {
        // Post-convergence iterations would all record the equilibrium wrench,
        // so the W-window average equals one evaluation at the settled pose.
        avg = contact_wrench_full(scene, res.pose, cmd, kn_eff, mu_eff).sensor;
    } else {
        int count = std::min(recorded, w);
        // Ring buffer averaged in chronological order for fixed summation order.
        for (int i = 0; i < count; ++i) {
            int idx = (recorded - count + i) % w;
            avg += window[static_cast<std::size_t>(idx)];
        }
        avg = avg * (1.0 / std::max(1, count));
    }
    res.wrench = sensor_transform(-avg, domain, noise);
    return res;
}

ProbeResult multi_point_contact(const ContactScene& scene, const RigidPose& initial_commanded,
                                const ComplianceConfig& compliance, const DomainConfig& domain,
                                RngStream& noise, int m, double delta_deg) {
    if (m != 4) throw std::invalid_argument("multi_point_contact: m must be 4");
    ProbeResult res;
    res.signature.m = m;
    res.signature.probe_delta_deg = delta_deg;

    SettleResult initial = settle(scene, initial_commanded, compliance, domain, noise);
    if (std::abs(initial.wrench.fz) <= kContactThresholdN)
        throw std::runtime_error("multi_point_contact: initial settle below contact threshold");
    res.initial_pose = initial.pose;
    res.initial_wrench = initial.wrench;
    res.signature.unstable = !initial.converged;

    auto put_column = [&](int col, const SettleResult& s) {
        res.signature.at(0, col) = s.wrench.fx;
        res.signature.at(1, col) = s.wrench.fy;
        res.signature.at(2, col) = s.wrench.tx;
        res.signature.at(3, col) = s.wrench.ty;
        res.signature.at(4, col) = s.wrench.tz;
        res.signature.lost_contact[static_cast<std::size_t>(col)] =
            std::abs(s.wrench.fz) <= kContactThresholdN;
        if (!s.converged) res.signature.unstable = true;
    };
    put_column(0, initial);

    // Fixed probe order: +X, -X, +Y, -Y.
    const std::array<std::array<double, 2>, 4> probes = {{{delta_deg, 0.0},
                                                          {-delta_deg, 0.0},
                                                          {0.0, delta_deg},
                                                          {0.0, -delta_deg}}};
    for (int i = 0; i < m; ++i) {
        RigidPose cmd = initial_commanded;
        cmd.ox += probes[static_cast<std::size_t>(i)][0];
        cmd.oy += probes[static_cast<std::size_t>(i)][1];
        SettleResult probe = settle(scene, cmd, compliance, domain, noise);
        put_column(i + 1, probe);
    }
    return res;
}

InsertionResult attempt_insertion(const ContactScene& scene, const RigidPose& commanded,
                                  const ComplianceConfig& compliance, const DomainConfig& domain,
                                  RngStream& noise, bool fast_fail, double jam_threshold) {
    InsertionResult res;
    RigidPose cmd = commanded;
    std::optional<RigidPose> warm;
    double prev_depth = -1e30;
    int stall = 0;
    double z0 = std::min(cmd.z, 1.0);
    double settled_z = z0;
    // The commanded z never runs more than press_band below the achieved z,
    // which caps the spring press force the way a force-limited position
    // controller would. Without the cap a blocked peg gets wedged through
    // geometrically jammed states by an unbounded spring pull.
    const double press_band = 0.3;
    int steps = static_cast<int>(std::ceil((z0 + kInsertDepthMm) / kInsertStepMm)) + 10;
    double z_cmd = z0;
    for (int i = 1; i <= steps; ++i) {
        z_cmd = std::max(z_cmd - kInsertStepMm, -kInsertDepthMm);
        cmd.z = std::max(z_cmd, settled_z - press_band);
        SettleResult s;
        try {
            s = settle(scene, cmd, compliance, domain, noise, warm);
        } catch (const std::runtime_error&) {
            // Invalid contact state counts as a jammed failure, not an error.
            res.jammed = true;
            break;
        }
        warm = s.pose;
        settled_z = s.pose.z;
        res.steps = i;
        double depth = -s.pose.z;
        res.depth = std::max(res.depth, depth);
        double lateral = std::hypot(s.wrench.fx, s.wrench.fy);
        if (depth - prev_depth < 0.05) {
            stall++;
            if (stall >= 5 && lateral > jam_threshold) {
                res.jammed = true;
                break;
            }
            if (stall >= 8) break;  // no progress with the press budget spent
            if (fast_fail && stall >= 3 && res.depth < 1.0) break;
        } else {
            stall = 0;
        }
        prev_depth = depth;
        if (depth >= kInsertDepthMm - kInsertStepMm) break;
    }
    res.success = res.depth >= kInsertDepthMm - kInsertStepMm;
    return res;
}

}  // namespace pegfit
