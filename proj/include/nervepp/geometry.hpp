#ifndef NERVEPP_GEOMETRY_HPP
#define NERVEPP_GEOMETRY_HPP

#include <cmath>
#include <limits>
#include <string>

#include "nervepp/errors.hpp"

namespace nervepp {

/// Planar location in microns.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point& a, const Point& b) {
        return a.x == b.x && a.y == b.y;
    }
};

inline double squared_distance(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline double distance(const Point& a, const Point& b) {
    return std::sqrt(squared_distance(a, b));
}

/// Axis-aligned rectangular observation window, closed on all sides.
struct Window {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    Window() = default;
    Window(double x0, double y0, double x1, double y1)
        : xmin(x0), ymin(y0), xmax(x1), ymax(y1) {
        if (!(std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) && std::isfinite(ymax)))
            throw data_error("window coordinates must be finite");
        if (!(xmax > xmin) || !(ymax > ymin))
            throw data_error("window must have positive width and height");
    }

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }

    /// Closed containment: boundary points count as inside.
    bool contains(const Point& p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }

    /// Distance from p to the window boundary (0 outside the rectangle).
    double boundary_margin(const Point& p) const {
        const double m = std::min(std::min(p.x - xmin, xmax - p.x),
                                  std::min(p.y - ymin, ymax - p.y));
        return m > 0.0 ? m : 0.0;
    }

    /// Rectangle grown by r on every side.
    Window dilated(double r) const {
        return Window(xmin - r, ymin - r, xmax + r, ymax + r);
    }

    friend bool operator==(const Window& a, const Window& b) {
        return a.xmin == b.xmin && a.ymin == b.ymin && a.xmax == b.xmax && a.ymax == b.ymax;
    }
};

/// Area of overlap between the window and a copy of itself shifted by (dx, dy).
/// This is the translation edge-correction denominator for a point pair.
inline double translation_overlap(const Window& w, double dx, double dy) {
    const double ox = w.width() - std::abs(dx);
    const double oy = w.height() - std::abs(dy);
    if (ox <= 0.0 || oy <= 0.0) return 0.0;
    return ox * oy;
}

/// Rectangle shrunk by r on every side. Throws if the result is empty.
inline Window erode_window(const Window& w, double r) {
    if (r < 0.0 || !std::isfinite(r))
        throw data_error("erosion radius must be nonnegative and finite");
    if (2.0 * r >= w.width() || 2.0 * r >= w.height())
        throw data_error("erosion radius " + std::to_string(r) +
                         " too large for window of size " + std::to_string(w.width()) +
                         " x " + std::to_string(w.height()));
    return Window(w.xmin + r, w.ymin + r, w.xmax - r, w.ymax - r);
}

/// Default observation window of a skin biopsy image, in microns.
inline Window default_window() { return Window(0.0, 0.0, 330.0, 432.0); }

} // namespace nervepp

#endif // NERVEPP_GEOMETRY_HPP
