#ifndef NERVEPP_TERRITORY_HPP
#define NERVEPP_TERRITORY_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "nervepp/errors.hpp"
#include "nervepp/geometry.hpp"
#include "nervepp/pattern.hpp"

namespace nervepp {

/// Simple polygon, vertices in counterclockwise order.
struct Polygon {
    std::vector<Point> vertices;
};

/// Signed double area of the triangle (a, b, c); positive when counterclockwise.
inline double cross(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Shoelace area (vertices assumed counterclockwise).
inline double polygon_area(const Polygon& poly) {
    const auto& v = poly.vertices;
    if (v.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % v.size()];
        twice += a.x * b.y - a.y * b.x;
    }
    return 0.5 * twice;
}

/// Convex hull result; degenerate (fewer than 3 distinct points, or all
/// collinear) yields no polygon but keeps the input point set.
struct HullResult {
    std::optional<Polygon> polygon;
    std::vector<Point> points;

    bool degenerate() const { return !polygon.has_value(); }
};

/// Andrew monotone chain. Vertices come out counterclockwise; collinear
/// points on hull edges are dropped.
inline HullResult convex_hull(const std::vector<Point>& points) {
    if (points.empty()) throw data_error("convex hull of empty point set");
    std::vector<Point> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    HullResult result;
    result.points = points;
    if (pts.size() < 3) return result;

    const std::size_t n = pts.size();
    std::vector<Point> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) { // lower chain
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) { // upper chain
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) return result; // all collinear
    result.polygon = Polygon{std::move(hull)};
    return result;
}

/// Size of a tree's reactive territory: hull area of {base} union ends when
/// positive, else the distance from the base to its farthest end (trees with
/// a single end, or collinear ones, would otherwise get size zero).
inline double territory_size(const NerveTree& tree) {
    if (tree.ends.empty())
        throw data_error("territory of tree " + std::to_string(tree.tree_id) +
                         " undefined: no end points");
    std::vector<Point> pts;
    pts.reserve(tree.ends.size() + 1);
    pts.push_back(tree.base);
    pts.insert(pts.end(), tree.ends.begin(), tree.ends.end());
    const HullResult hull = convex_hull(pts);
    if (!hull.degenerate()) {
        const double area = polygon_area(*hull.polygon);
        if (area > 0.0) return area;
    }
    double far2 = 0.0;
    for (const Point& e : tree.ends) far2 = std::max(far2, squared_distance(tree.base, e));
    return std::sqrt(far2);
}

/// Even-odd ray casting; boundary points may land on either side, which is
/// immaterial for the grid area estimates below.
inline bool point_in_polygon(const Point& p, const Polygon& poly) {
    const auto& v = poly.vertices;
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            const double xcross = v[j].x + (p.y - v[j].y) / (v[i].y - v[j].y) * (v[i].x - v[j].x);
            if (p.x < xcross) inside = !inside;
        }
    }
    return inside;
}

/// Area of the union of polygons clipped to the window, estimated on a grid
/// of cell midpoints with cells no larger than `resolution` on a side.
inline double union_area(const std::vector<Polygon>& polygons, const Window& window,
                         double resolution = 1.0) {
    if (!(resolution > 0.0)) throw data_error("union_area resolution must be positive");
    if (polygons.empty()) return 0.0;
    const std::size_t nx = static_cast<std::size_t>(std::ceil(window.width() / resolution));
    const std::size_t ny = static_cast<std::size_t>(std::ceil(window.height() / resolution));
    const double cw = window.width() / static_cast<double>(nx);
    const double ch = window.height() / static_cast<double>(ny);
    std::size_t covered = 0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const double y = window.ymin + (static_cast<double>(iy) + 0.5) * ch;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const Point p{window.xmin + (static_cast<double>(ix) + 0.5) * cw, y};
            for (const Polygon& poly : polygons) {
                if (point_in_polygon(p, poly)) {
                    ++covered;
                    break;
                }
            }
        }
    }
    return static_cast<double>(covered) * cw * ch;
}

/// Right-continuous empirical CDF evaluated on the grid.
inline SummaryCurve ecdf_curve(const std::vector<double>& values, const std::vector<double>& grid) {
    if (values.empty()) throw data_error("ECDF of empty value list");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<double> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), grid[g]);
        out[g] = static_cast<double>(it - sorted.begin()) / n;
    }
    return SummaryCurve(grid, std::move(out), CurveKind::ecdf);
}

} // namespace nervepp

#endif // NERVEPP_TERRITORY_HPP
