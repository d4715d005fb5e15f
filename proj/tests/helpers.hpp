#pragma once

// Test-only oracles, intentionally independent of the library implementations
// they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pegfit/geometry.hpp"

namespace oracle {

inline double point_seg_dist(pegfit::Vec2 p, pegfit::Vec2 a, pegfit::Vec2 b) {
    double abx = b.x - a.x, aby = b.y - a.y;
    double len2 = abx * abx + aby * aby;
    double t = len2 > 0 ? ((p.x - a.x) * abx + (p.y - a.y) * aby) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double dx = p.x - (a.x + t * abx), dy = p.y - (a.y + t * aby);
    return std::sqrt(dx * dx + dy * dy);
}

// Min-over-edges distance to the polygon boundary.
inline double boundary_distance(const pegfit::PolygonShape& shape, pegfit::Vec2 p) {
    double best = 1e300;
    int n = shape.n();
    for (int i = 0; i < n; ++i)
        best = std::min(best, point_seg_dist(p, shape.vertices[(std::size_t)i],
                                             shape.vertices[(std::size_t)((i + 1) % n)]));
    return best;
}

// Crossing-number inside test (independent formulation: upward-edge rule).
inline bool crossing_inside(const pegfit::PolygonShape& shape, pegfit::Vec2 p) {
    int cross = 0;
    int n = shape.n();
    for (int i = 0; i < n; ++i) {
        pegfit::Vec2 a = shape.vertices[(std::size_t)i];
        pegfit::Vec2 b = shape.vertices[(std::size_t)((i + 1) % n)];
        if ((a.y <= p.y) != (b.y <= p.y)) {
            double x_at = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (x_at > p.x) cross++;
        }
    }
    return (cross % 2) == 1;
}

inline double signed_distance(const pegfit::PolygonShape& shape, pegfit::Vec2 p) {
    double d = boundary_distance(shape, p);
    return crossing_inside(shape, p) ? -d : d;
}

// Brute-force simplicity via exact sign-of-area orientation tests.
inline bool simple_polygon(const pegfit::PolygonShape& shape) {
    int n = shape.n();
    auto orient = [](pegfit::Vec2 a, pegfit::Vec2 b, pegfit::Vec2 c) {
        long double v = (long double)(b.x - a.x) * (c.y - a.y) - (long double)(b.y - a.y) * (c.x - a.x);
        return v > 0 ? 1 : (v < 0 ? -1 : 0);
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            pegfit::Vec2 a = shape.vertices[(std::size_t)i], b = shape.vertices[(std::size_t)((i + 1) % n)];
            pegfit::Vec2 c = shape.vertices[(std::size_t)j], d = shape.vertices[(std::size_t)((j + 1) % n)];
            if (orient(a, b, c) != orient(a, b, d) && orient(c, d, a) != orient(c, d, b)) return false;
        }
    }
    return true;
}

// Central finite differences over a scalar function of a parameter vector.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double h = 1e-5) {
    double orig = x[i];
    x[i] = orig + h;
    double fp = f(x);
    x[i] = orig - h;
    double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

inline pegfit::PolygonShape axis_square(double half_width) {
    pegfit::PolygonShape s;
    s.vertices = {{half_width, -half_width},
                  {half_width, half_width},
                  {-half_width, half_width},
                  {-half_width, -half_width}};
    return s;
}

}  // namespace oracle
