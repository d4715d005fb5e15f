#include "pegfit/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace pegfit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    double v = cross(b - a, c - a);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    int o1 = orientation(a, b, c);
    int o2 = orientation(a, b, d);
    int o3 = orientation(c, d, a);
    int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

double point_segment_dist(Vec2 p, Vec2 a, Vec2 b, Vec2* closest = nullptr) {
    Vec2 ab = b - a;
    double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    Vec2 q = a + t * ab;
    if (closest) *closest = q;
    return norm(p - q);
}

bool point_inside(const PolygonShape& shape, Vec2 p) {
    // Crossing number, half-open edge rule.
    bool inside = false;
    int n = shape.n();
    for (int i = 0, j = n - 1; i < n; j = i++) {
        Vec2 a = shape.vertices[static_cast<std::size_t>(j)];
        Vec2 b = shape.vertices[static_cast<std::size_t>(i)];
        if ((b.y > p.y) != (a.y > p.y)) {
            double xc = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
            if (p.x < xc) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

double PolygonShape::perimeter() const {
    double s = 0.0;
    int m = n();
    for (int i = 0; i < m; ++i)
        s += norm(vertices[static_cast<std::size_t>((i + 1) % m)] - vertices[static_cast<std::size_t>(i)]);
    return s;
}

double PolygonShape::signed_area() const {
    double s = 0.0;
    int m = n();
    for (int i = 0; i < m; ++i) {
        Vec2 a = vertices[static_cast<std::size_t>(i)];
        Vec2 b = vertices[static_cast<std::size_t>((i + 1) % m)];
        s += cross(a, b);
    }
    return 0.5 * s;
}

bool PolygonShape::is_simple() const {
    int m = n();
    if (m < 3) return false;
    for (int i = 0; i < m; ++i) {
        Vec2 a = vertices[static_cast<std::size_t>(i)];
        Vec2 b = vertices[static_cast<std::size_t>((i + 1) % m)];
        for (int j = i + 1; j < m; ++j) {
            // Skip edges sharing a vertex.
            if (j == i || (j + 1) % m == i || (i + 1) % m == j) continue;
            Vec2 c = vertices[static_cast<std::size_t>(j)];
            Vec2 d = vertices[static_cast<std::size_t>((j + 1) % m)];
            if (segments_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

PolygonShape make_star_polygon(const std::vector<double>& radii_mm,
                               const std::vector<double>& angles_deg) {
    if (radii_mm.size() != angles_deg.size() || radii_mm.size() < 3)
        throw std::invalid_argument("make_star_polygon: need matching radii/angles, n >= 3");
    PolygonShape shape;
    shape.radii_mm = radii_mm;
    shape.angles_deg = angles_deg;
    double phi = 0.0;
    for (std::size_t i = 0; i < radii_mm.size(); ++i) {
        double a = deg2rad(phi);
        shape.vertices.push_back({radii_mm[i] * std::cos(a), radii_mm[i] * std::sin(a)});
        phi += angles_deg[i];
    }
    return shape;
}

namespace {

// Interior turn at each vertex must stay clear of straight (180 deg interior
// angle) so contact normals do not degenerate.
bool has_near_straight_vertex(const PolygonShape& shape, double tol_deg) {
    int m = shape.n();
    for (int i = 0; i < m; ++i) {
        Vec2 prev = shape.vertices[static_cast<std::size_t>((i + m - 1) % m)];
        Vec2 cur = shape.vertices[static_cast<std::size_t>(i)];
        Vec2 next = shape.vertices[static_cast<std::size_t>((i + 1) % m)];
        Vec2 a = cur - prev;
        Vec2 b = next - cur;
        double turn = std::atan2(cross(a, b), dot(a, b)) * 180.0 / kPi;
        if (std::abs(turn) < tol_deg) return true;
    }
    return false;
}

}  // namespace

PolygonShape generate_polygon(int n, RngStream& rng) {
    if (n < 4 || n > 10) throw std::invalid_argument("generate_polygon: n must be in [4,10]");
    const int budget = 1000;
    for (int attempt = 0; attempt < budget; ++attempt) {
        std::vector<double> radii(static_cast<std::size_t>(n));
        for (double& r : radii) r = rng.uniform(10.0, 20.0);
        std::vector<double> g(static_cast<std::size_t>(n));
        double gsum = 0.0;
        for (double& v : g) {
            v = rng.gamma(5.0);
            gsum += v;
        }
        std::vector<double> angles(static_cast<std::size_t>(n));
        double acc = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            angles[static_cast<std::size_t>(i)] = 360.0 * g[static_cast<std::size_t>(i)] / gsum;
            acc += angles[static_cast<std::size_t>(i)];
        }
        angles[static_cast<std::size_t>(n - 1)] = 360.0 - acc;  // exact sum

        PolygonShape shape = make_star_polygon(radii, angles);
        if (has_near_straight_vertex(shape, 2.0)) continue;
        if (!shape.is_simple()) continue;
        return shape;
    }
    throw std::runtime_error("generate_polygon: resample budget exhausted");
}

PolygonShape offset_polygon(const PolygonShape& shape, double clearance) {
    if (clearance <= 0.0) throw std::invalid_argument("offset_polygon: clearance must be > 0");
    if (!shape.is_ccw()) throw std::invalid_argument("offset_polygon: polygon must be CCW");
    int m = shape.n();
    PolygonShape out;
    out.vertices.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        Vec2 prev = shape.vertices[static_cast<std::size_t>((i + m - 1) % m)];
        Vec2 cur = shape.vertices[static_cast<std::size_t>(i)];
        Vec2 next = shape.vertices[static_cast<std::size_t>((i + 1) % m)];
        Vec2 d1 = cur - prev;
        Vec2 d2 = next - cur;
        double l1 = norm(d1), l2 = norm(d2);
        Vec2 n1 = {d1.y / l1, -d1.x / l1};  // outward for CCW
        Vec2 n2 = {d2.y / l2, -d2.x / l2};
        // Intersect the two offset lines: prev+c*n1 + t*d1 and cur+c*n2 + s*d2.
        double denom = cross(d1, d2);
        if (std::abs(denom) < 1e-12 * l1 * l2) {
            out.vertices[static_cast<std::size_t>(i)] = cur + clearance * n1;
            continue;
        }
        Vec2 p1 = prev + clearance * n1;
        Vec2 p2 = cur + clearance * n2;
        double t = cross(p2 - p1, d2) / denom;
        out.vertices[static_cast<std::size_t>(i)] = p1 + t * d1;
    }
    if (!out.is_simple())
        throw std::runtime_error("offset_polygon: clearance induces a self-intersecting offset");
    for (const Vec2& v : shape.vertices)
        if (polygon_sdf(out, v) >= 0.0)
            throw std::runtime_error("offset_polygon: offset does not contain the source polygon");
    return out;
}

double polygon_sdf(const PolygonShape& shape, Vec2 p) {
    double d = std::numeric_limits<double>::infinity();
    int m = shape.n();
    for (int i = 0; i < m; ++i) {
        Vec2 a = shape.vertices[static_cast<std::size_t>(i)];
        Vec2 b = shape.vertices[static_cast<std::size_t>((i + 1) % m)];
        d = std::min(d, point_segment_dist(p, a, b));
    }
    return point_inside(shape, p) ? -d : d;
}

double polygon_sdf_grad(const PolygonShape& shape, Vec2 p, Vec2& grad) {
    double best = std::numeric_limits<double>::infinity();
    Vec2 best_q{};
    int m = shape.n();
    for (int i = 0; i < m; ++i) {
        Vec2 a = shape.vertices[static_cast<std::size_t>(i)];
        Vec2 b = shape.vertices[static_cast<std::size_t>((i + 1) % m)];
        Vec2 q;
        double d = point_segment_dist(p, a, b, &q);
        if (d < best) {
            best = d;
            best_q = q;
        }
    }
    bool inside = point_inside(shape, p);
    if (best > 0.0) {
        Vec2 dir = {(p.x - best_q.x) / best, (p.y - best_q.y) / best};
        grad = inside ? Vec2{-dir.x, -dir.y} : dir;
    } else {
        grad = {0.0, 0.0};
    }
    return inside ? -best : best;
}

std::vector<BoundarySample> sample_boundary_points(const PolygonShape& shape, double spacing) {
    if (spacing <= 0.0) throw std::invalid_argument("sample_boundary_points: spacing must be > 0");
    std::vector<BoundarySample> samples;
    int m = shape.n();
    for (int i = 0; i < m; ++i) {
        Vec2 a = shape.vertices[static_cast<std::size_t>(i)];
        Vec2 b = shape.vertices[static_cast<std::size_t>((i + 1) % m)];
        Vec2 d = b - a;
        double len = norm(d);
        Vec2 normal = {d.y / len, -d.x / len};
        int segs = static_cast<int>(std::floor(len / spacing)) + 1;
        for (int j = 0; j <= segs; ++j) {
            double t = static_cast<double>(j) / segs;
            samples.push_back({a + t * d, normal});
        }
    }
    return samples;
}

PolygonShape translate_polygon(const PolygonShape& shape, Vec2 t) {
    PolygonShape out = shape;
    for (Vec2& v : out.vertices) v = v + t;
    return out;
}

PegHolePair make_peg_hole_pair(const PolygonShape& peg, double clearance) {
    PegHolePair pair;
    pair.peg = peg;
    pair.hole = offset_polygon(peg, clearance);
    pair.clearance = clearance;
    return pair;
}

nlohmann::json shape_to_json(const PolygonShape& shape) {
    nlohmann::json j;
    j["n"] = shape.n();
    j["radii_mm"] = shape.radii_mm;
    j["angles_deg"] = shape.angles_deg;
    j["seed"] = shape.seed;
    nlohmann::json verts = nlohmann::json::array();
    for (const Vec2& v : shape.vertices) verts.push_back({v.x, v.y});
    j["vertices"] = verts;
    return j;
}

PolygonShape shape_from_json(const nlohmann::json& j) {
    PolygonShape shape;
    shape.radii_mm = j.at("radii_mm").get<std::vector<double>>();
    shape.angles_deg = j.at("angles_deg").get<std::vector<double>>();
    shape.seed = j.value("seed", 0ULL);
    for (const auto& v : j.at("vertices")) shape.vertices.push_back({v.at(0), v.at(1)});
    if (shape.n() != j.at("n").get<int>())
        throw std::runtime_error("shape_from_json: vertex count mismatch");
    return shape;
}

}  // namespace pegfit
