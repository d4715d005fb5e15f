#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pegfit/contact.hpp"

using namespace pegfit;

namespace {

// Independent Euler X-Y-Z rotation for the hand-computed oracles.
struct R3 {
    double m[3][3];
    static R3 euler_xyz(double ox, double oy, double oz) {
        double a = ox * M_PI / 180, b = oy * M_PI / 180, c = oz * M_PI / 180;
        double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b);
        double cc = std::cos(c), sc = std::sin(c);
        R3 rx{{{1, 0, 0}, {0, ca, -sa}, {0, sa, ca}}};
        R3 ry{{{cb, 0, sb}, {0, 1, 0}, {-sb, 0, cb}}};
        R3 rz{{{cc, -sc, 0}, {sc, cc, 0}, {0, 0, 1}}};
        return rx.mul(ry).mul(rz);
    }
    R3 mul(const R3& o) const {
        R3 r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                r.m[i][j] = 0;
                for (int k = 0; k < 3; ++k) r.m[i][j] += m[i][k] * o.m[k][j];
            }
        return r;
    }
    void apply(const double v[3], double out[3]) const {
        for (int i = 0; i < 3; ++i) out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    void apply_t(const double v[3], double out[3]) const {
        for (int i = 0; i < 3; ++i) out[i] = m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2];
    }
};

PegHolePair square_pair() { return make_peg_hole_pair(oracle::axis_square(15.0), 1.0); }

}  // namespace

TEST_CASE("no penetration gives the zero wrench") {
    ContactParams params;
    PegHolePair pair = square_pair();
    Wrench w = contact_wrench(pair, RigidPose{0, 0, 0.1, 0, 0, 0}, params);
    CHECK(w.fx == 0.0);
    CHECK(w.fy == 0.0);
    CHECK(w.fz == 0.0);
    CHECK(w.tx == 0.0);
    CHECK(w.ty == 0.0);
    CHECK(w.tz == 0.0);
}

TEST_CASE("flat symmetric contact on the plate: pure Fz = kn*d*samples") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    double d = 0.5;
    WrenchPair wp = contact_wrench_full(scene, RigidPose{40, 0, -d, 0, 0, 0},
                                        RigidPose{40, 0, -d, 0, 0, 0}, params.kn, params.mu);
    double expected_fz = params.kn * d * static_cast<double>(scene.samples.bottom_count);
    CHECK(std::abs(wp.sensor.fz - expected_fz) < 1e-6);
    CHECK(std::abs(wp.sensor.fx) < 1e-6);
    CHECK(std::abs(wp.sensor.fy) < 1e-6);
    CHECK(std::abs(wp.sensor.tx) < 1e-6);
    CHECK(std::abs(wp.sensor.ty) < 1e-6);
    CHECK(std::abs(wp.sensor.tz) < 1e-6);
}

TEST_CASE("single-corner contact matches the analytic point load") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    // Tilt so corner (15,15) is the unique lowest point, far from the hole.
    RigidPose pose{40, 0, 0, -5, 5, 0};
    R3 rot = R3::euler_xyz(pose.ox, pose.oy, pose.oz);
    double corner[3] = {15, 15, 0}, wc[3];
    rot.apply(corner, wc);
    pose.z = -wc[2] - 0.03;  // 0.03 mm penetration of just that corner
    Wrench w = contact_wrench(pair, pose, params);

    double depth = -(wc[2] + pose.z);
    REQUIRE(depth > 0.0);
    double f_world[3] = {0, 0, params.kn * depth};
    double t_world[3] = {wc[1] * f_world[2], -wc[0] * f_world[2], 0.0};
    double f_s[3], t_s[3];
    rot.apply_t(f_world, f_s);
    rot.apply_t(t_world, t_s);
    CHECK(std::abs(w.fx - f_s[0]) < 1e-9);
    CHECK(std::abs(w.fy - f_s[1]) < 1e-9);
    CHECK(std::abs(w.fz - f_s[2]) < 1e-9);
    CHECK(std::abs(w.tx - t_s[0]) < 1e-9);
    CHECK(std::abs(w.ty - t_s[1]) < 1e-9);
    CHECK(std::abs(w.tz - t_s[2]) < 1e-9);
}

TEST_CASE("instantaneous wrench is exactly linear in kn") {
    ContactParams params;
    RngStream rng(3);
    PolygonShape peg = generate_polygon(5, rng);
    PegHolePair pair = make_peg_hole_pair(peg, 1.0);
    ContactScene scene = make_scene(pair, params);
    RigidPose pose{3, -2, -0.4, 2, -1, 3};
    RigidPose cmd{2.5, -1.5, 0, 1.5, -1, 2.5};  // friction engaged
    WrenchPair base = contact_wrench_full(scene, pose, cmd, params.kn, params.mu);
    REQUIRE(base.contacts > 0);
    for (double alpha : {0.5, 2.0}) {
        WrenchPair scaled = contact_wrench_full(scene, pose, cmd, params.kn * alpha, params.mu);
        CHECK(scaled.sensor.fx == alpha * base.sensor.fx);
        CHECK(scaled.sensor.fy == alpha * base.sensor.fy);
        CHECK(scaled.sensor.fz == alpha * base.sensor.fz);
        CHECK(scaled.sensor.tx == alpha * base.sensor.tx);
        CHECK(scaled.sensor.ty == alpha * base.sensor.ty);
        CHECK(scaled.sensor.tz == alpha * base.sensor.tz);
    }
}

TEST_CASE("translating the whole scene leaves the sensor wrench unchanged") {
    ContactParams params;
    RngStream rng(4);
    PolygonShape peg = generate_polygon(6, rng);
    PegHolePair pair = make_peg_hole_pair(peg, 1.0);
    ContactScene scene = make_scene(pair, params);
    RigidPose pose{4, 1, -0.3, 1, 2, -2};
    Wrench w1 = contact_wrench_full(scene, pose, pose, params.kn, params.mu).sensor;

    PegHolePair moved = pair;
    moved.hole = translate_polygon(pair.hole, {120.0, -45.0});
    ContactScene scene2 = make_scene(moved, params);
    RigidPose pose2 = pose;
    pose2.x += 120.0;
    pose2.y += -45.0;
    Wrench w2 = contact_wrench_full(scene2, pose2, pose2, params.kn, params.mu).sensor;
    CHECK(std::abs(w1.fx - w2.fx) < 1e-9);
    CHECK(std::abs(w1.fy - w2.fy) < 1e-9);
    CHECK(std::abs(w1.fz - w2.fz) < 1e-9);
    CHECK(std::abs(w1.tx - w2.tx) < 1e-9);
    CHECK(std::abs(w1.ty - w2.ty) < 1e-9);
    CHECK(std::abs(w1.tz - w2.tz) < 1e-9);
}

TEST_CASE("mirror symmetry across the XZ plane with zero friction") {
    ContactParams params;
    params.mu = 0.0;
    RngStream rng(8);
    PolygonShape peg = generate_polygon(7, rng);
    PegHolePair pair = make_peg_hole_pair(peg, 1.0);
    ContactScene scene = make_scene(pair, params);
    RigidPose pose{3, 2, -0.3, 2, -1, 4};
    Wrench w = contact_wrench_full(scene, pose, pose, params.kn, 0.0).sensor;

    PolygonShape mirrored;
    for (std::size_t i = peg.vertices.size(); i-- > 0;)
        mirrored.vertices.push_back({peg.vertices[i].x, -peg.vertices[i].y});
    PegHolePair mpair = make_peg_hole_pair(mirrored, 1.0);
    ContactScene mscene = make_scene(mpair, params);
    RigidPose mpose{pose.x, -pose.y, pose.z, -pose.ox, pose.oy, -pose.oz};
    Wrench mw = contact_wrench_full(mscene, mpose, mpose, params.kn, 0.0).sensor;

    CHECK(std::abs(mw.fx - w.fx) < 1e-9);
    CHECK(std::abs(mw.fy + w.fy) < 1e-9);
    CHECK(std::abs(mw.fz - w.fz) < 1e-9);
    CHECK(std::abs(mw.tx + w.tx) < 1e-9);
    CHECK(std::abs(mw.ty - w.ty) < 1e-9);
    CHECK(std::abs(mw.tz + w.tz) < 1e-9);
}

TEST_CASE("contact_wrench reports invalid penetration as an error") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    CHECK_THROWS(contact_wrench_full(scene, RigidPose{60, 0, -31, 0, 0, 0},
                                     RigidPose{60, 0, -31, 0, 0, 0}, params.kn, params.mu));
}

TEST_CASE("settle in free space displaces only z by fz_cmd / Kz") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    RngStream noise(0);
    SettleResult s = settle(scene, RigidPose{0, 0, 25, 0, 0, 0}, compliance, DomainConfig::sim(), noise);
    CHECK(s.converged);
    CHECK(std::abs(s.pose.z - (25.0 - compliance.fz_cmd / compliance.stiffness[2])) < 1e-3);
    CHECK(std::abs(s.pose.x) < 1e-9);
    CHECK(std::abs(s.pose.y) < 1e-9);
    CHECK(std::abs(s.wrench.fx) < 1e-12);
    CHECK(std::abs(s.wrench.fy) < 1e-12);
    CHECK(std::abs(s.wrench.tx) < 1e-12);
}

TEST_CASE("settle on flat contact balances press, spring and contact forces") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    compliance.eps = 1e-12;
    compliance.max_iters = 5000;
    RngStream noise(0);
    SettleResult s = settle(scene, RigidPose{40, 0, 0, 0, 0, 0}, compliance, DomainConfig::sim(), noise);
    REQUIRE(s.converged);
    double kn_total = params.kn * static_cast<double>(scene.samples.bottom_count);
    // Analytic equilibrium of kn_total*(-z) - fz_cmd - Kz*z = 0.
    double z_star = -compliance.fz_cmd / (kn_total + compliance.stiffness[2]);
    CHECK(std::abs(s.pose.z - z_star) < 1e-6);
    // Reaction reading: -contact = -(kn_total * depth).
    CHECK(std::abs(s.wrench.fz + kn_total * (-z_star)) < 1e-4);
    // Newton balance: contact fz differs from fz_cmd exactly by the spring term.
    CHECK(std::abs(s.wrench.fz + compliance.fz_cmd + compliance.stiffness[2] * z_star) < 1e-4);
    CHECK(std::abs(s.wrench.fx) < 1e-6);
    CHECK(std::abs(s.wrench.fy) < 1e-6);
    CHECK(std::abs(s.wrench.tz) < 1e-6);
}

TEST_CASE("settle is bit-deterministic across repeated runs") {
    ContactParams params;
    RngStream rng(12);
    PolygonShape peg = generate_polygon(5, rng);
    PegHolePair pair = make_peg_hole_pair(peg, 1.0);
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    DomainConfig domain = DomainConfig::pseudo_real_default();
    RigidPose cmd{4, -3, -0.2, 2, 1, -2};
    RngStream n1(77), n2(77);
    SettleResult a = settle(scene, cmd, compliance, domain, n1);
    SettleResult b = settle(scene, cmd, compliance, domain, n2);
    CHECK(a.pose.x == b.pose.x);
    CHECK(a.pose.y == b.pose.y);
    CHECK(a.pose.z == b.pose.z);
    CHECK(a.pose.ox == b.pose.ox);
    CHECK(a.wrench.fx == b.wrench.fx);
    CHECK(a.wrench.tz == b.wrench.tz);
    CHECK(a.iters == b.iters);
}

TEST_CASE("sensor transform: sim identity, affine bias, torque saturation bound") {
    RngStream noise(5);
    Wrench w{1.5, -2.5, 3.5, 100.0, -200.0, 50.0};
    Wrench id = sensor_transform(w, DomainConfig::sim(), noise);
    CHECK(id.fx == w.fx);
    CHECK(id.fy == w.fy);
    CHECK(id.fz == w.fz);
    CHECK(id.tx == w.tx);
    CHECK(id.ty == w.ty);
    CHECK(id.tz == w.tz);

    DomainConfig d = DomainConfig::pseudo_real_default();
    d.sigma_f = 0.0;
    d.sigma_t = 0.0;
    Wrench zero{};
    Wrench b = sensor_transform(zero, d, noise);
    CHECK(b.fx == d.bias.fx);
    CHECK(b.fy == d.bias.fy);
    CHECK(b.tx == d.bias.tx);
    CHECK(b.tz == d.bias.tz);

    // Saturation: torques (post-gain) are clamped to tau_sat before the bias.
    RngStream sweep(9);
    for (int i = 0; i < 1000; ++i) {
        Wrench big{sweep.uniform(-5, 5), sweep.uniform(-5, 5), sweep.uniform(-5, 5),
                   sweep.uniform(-1e5, 1e5), sweep.uniform(-1e5, 1e5), sweep.uniform(-1e5, 1e5)};
        Wrench out = sensor_transform(big, d, noise);
        CHECK(std::abs(out.tx - d.bias.tx) <= d.tau_sat + 1e-9);
        CHECK(std::abs(out.ty - d.bias.ty) <= d.tau_sat + 1e-9);
        CHECK(std::abs(out.tz - d.bias.tz) <= d.tau_sat + 1e-9);
    }
}

TEST_CASE("multi-point contact produces a 5x5 signature with probe symmetry") {
    ContactParams params;
    params.mu = 0.0;  // exact mirror relation
    PolygonShape diamond = make_star_polygon({15, 15, 15, 15}, {90, 90, 90, 90});
    PegHolePair pair = make_peg_hole_pair(diamond, 1.0);
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    RngStream noise(0);
    // Lateral x offset only: the scene is symmetric across the XZ plane.
    ProbeResult probe = multi_point_contact(scene, RigidPose{3, 0, 0, 0, 0, 0}, compliance,
                                            DomainConfig::sim(), noise);
    const ContactSignature& sig = probe.signature;
    CHECK(sig.k() == 5);
    CHECK(sig.values.size() == 25);
    // +X and -X probes are mirror pairs: Fx, Ty preserved; Fy, Tx, Tz negated.
    double tol = 5e-3;  // settle truncation tolerance
    CHECK(std::abs(sig.at(0, 1) - sig.at(0, 2)) < tol);
    CHECK(std::abs(sig.at(3, 1) - sig.at(3, 2)) < tol);
    CHECK(std::abs(sig.at(1, 1) + sig.at(1, 2)) < tol);
    CHECK(std::abs(sig.at(2, 1) + sig.at(2, 2)) < tol);
    CHECK(std::abs(sig.at(4, 1) + sig.at(4, 2)) < tol);
    // +Y and -Y probes stay on the symmetry plane: odd components vanish.
    for (int col : {3, 4}) {
        CHECK(std::abs(sig.at(1, col)) < tol);
        CHECK(std::abs(sig.at(2, col)) < tol);
        CHECK(std::abs(sig.at(4, col)) < tol);
    }
}

TEST_CASE("multi-point contact requires initial contact") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    RngStream noise(0);
    CHECK_THROWS(multi_point_contact(scene, RigidPose{0, 0, 25, 0, 0, 0}, compliance,
                                     DomainConfig::sim(), noise));
}

TEST_CASE("equal initial wrenches can hide different poses; probing separates them") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    DomainConfig sim = DomainConfig::sim();
    RngStream noise(0);

    // Two X-tilts resting the same bottom edge on the plate far from the
    // hole: the edge torque reads -15*N about the (tilt-invariant) x axis for
    // both, so the initial columns nearly coincide, while the probes swing
    // through opposite contact families.
    auto probe_at_tilt = [&](double ox, int z_step) {
        double z_touch = 15.0 * std::sin(ox * M_PI / 180.0);
        RigidPose cmd{40, 0, z_touch + 0.05 * z_step, ox, 0, 0};
        return multi_point_contact(scene, cmd, compliance, sim, noise);
    };
    ProbeResult pa = probe_at_tilt(10.0, 0);
    ProbeResult pb;
    double best = 1e300;
    for (int i = -4; i <= 0; ++i) {
        ProbeResult cand = probe_at_tilt(6.0, i);
        double d = 0;
        for (int r = 0; r < 5; ++r) {
            double diff = cand.signature.at(r, 0) - pa.signature.at(r, 0);
            d += diff * diff;
        }
        if (d < best) {
            best = d;
            pb = cand;
        }
    }
    double col0_dist = std::sqrt(best);
    double sig_dist = 0;
    for (int i = 0; i < 25; ++i) {
        double diff = pa.signature.values[(std::size_t)i] - pb.signature.values[(std::size_t)i];
        sig_dist += diff * diff;
    }
    sig_dist = std::sqrt(sig_dist);
    CHECK(sig_dist > 20.0 * col0_dist);
}

TEST_CASE("insertion: aligned succeeds, 5 mm offset jams, 0.9 mm offset fits") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    DomainConfig sim = DomainConfig::sim();
    RngStream noise(0);

    InsertionResult aligned = attempt_insertion(scene, RigidPose{0, 0, 1, 0, 0, 0}, compliance, sim, noise);
    CHECK(aligned.success);
    CHECK(aligned.depth >= kInsertDepthMm - kInsertStepMm);

    InsertionResult off5 = attempt_insertion(scene, RigidPose{5, 0, 1, 0, 0, 0}, compliance, sim, noise);
    CHECK_FALSE(off5.success);
    CHECK(off5.depth < 2.0);  // bottoms out on the rim under the bounded press

    InsertionResult off09 = attempt_insertion(scene, RigidPose{0.9, 0, 1, 0, 0, 0}, compliance, sim, noise);
    CHECK(off09.success);
}

TEST_CASE("insertion jams under a 5 degree tilt even when laterally centered") {
    ContactParams params;
    PegHolePair pair = square_pair();
    ContactScene scene = make_scene(pair, params);
    ComplianceConfig compliance;
    RngStream noise(0);
    InsertionResult tilted = attempt_insertion(scene, RigidPose{0, 0, 2, 5, 0, 0}, compliance,
                                               DomainConfig::sim(), noise);
    CHECK_FALSE(tilted.success);
}
