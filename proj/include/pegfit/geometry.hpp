#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pegfit/rng.hpp"

#include <json.hpp>

namespace pegfit {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }

// Star polygon cross-section, vertices CCW in mm. When produced by the random
// generator, radii/angles provenance is kept so shapes can be re-serialized
// exactly.
struct PolygonShape {
    std::vector<Vec2> vertices;
    std::vector<double> radii_mm;    // empty unless generated
    std::vector<double> angles_deg;  // empty unless generated
    std::uint64_t seed = 0;

    int n() const { return static_cast<int>(vertices.size()); }
    double perimeter() const;
    double signed_area() const;
    bool is_ccw() const { return signed_area() > 0.0; }
    // Brute-force all-pairs segment intersection test (the simplicity oracle).
    bool is_simple() const;
};

struct BoundarySample {
    Vec2 point;
    Vec2 normal;  // outward unit normal of the edge the sample belongs to
};

// Builds the vertex list from (radii, cumulative angles) provenance.
// Vertex i sits at radius r_i and angle sum(theta_0..theta_{i-1}), so equal
// radii r and angles 360/n give the regular n-gon with vertex 0 on +x.
PolygonShape make_star_polygon(const std::vector<double>& radii_mm,
                               const std::vector<double>& angles_deg);

// Random star polygon: n in [4,10], radii uniform in [10,20] mm, angles from
// a symmetric Dirichlet (concentration 5) scaled to 360 degrees. Rejects and
// resamples shapes with a near-straight vertex (interior turn within 2 deg of
// straight) or self-intersection; throws after 1000 rejections.
PolygonShape generate_polygon(int n, RngStream& rng);

// Outward offset: each vertex is moved to the intersection of its two
// adjacent edge lines shifted by `clearance` along their outward normals.
// At convex vertices that is a miter join, at reflex vertices the natural
// trim point. Throws if clearance <= 0 or if the offset curve
// self-intersects.
PolygonShape offset_polygon(const PolygonShape& shape, double clearance);

// Exact signed distance to the polygon boundary, negative inside.
double polygon_sdf(const PolygonShape& shape, Vec2 p);

// Signed distance plus the unit gradient (direction of increasing distance).
// Gradient is the zero vector when p lies exactly on the boundary.
double polygon_sdf_grad(const PolygonShape& shape, Vec2 p, Vec2& grad);

// Arc-length samples per edge including both endpoints, so each vertex
// appears twice carrying the two adjacent edge normals. Consecutive gap along
// an edge is < spacing.
std::vector<BoundarySample> sample_boundary_points(const PolygonShape& shape, double spacing);

PolygonShape translate_polygon(const PolygonShape& shape, Vec2 t);

struct PegHolePair {
    PolygonShape peg;
    PolygonShape hole;
    double clearance = 1.0;
    double extrusion_height = 30.0;
    double plate_top_z = 0.0;
};

PegHolePair make_peg_hole_pair(const PolygonShape& peg, double clearance = 1.0);

nlohmann::json shape_to_json(const PolygonShape& shape);
PolygonShape shape_from_json(const nlohmann::json& j);

}  // namespace pegfit
