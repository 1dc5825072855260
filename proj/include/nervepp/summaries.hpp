#ifndef NERVEPP_SUMMARIES_HPP
#define NERVEPP_SUMMARIES_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nervepp/errors.hpp"
#include "nervepp/geometry.hpp"
#include "nervepp/pattern.hpp"
#include "nervepp/rng.hpp"

namespace nervepp {

/// Normalized weights for pooling replicated summary curves.
struct PoolingWeights {
    std::vector<double> weights;

    explicit PoolingWeights(std::vector<double> w) : weights(std::move(w)) {
        double sum = 0.0;
        for (double x : weights) {
            if (x < 0.0 || !std::isfinite(x)) throw data_error("pooling weights must be nonnegative");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw data_error("pooling weights must sum to 1, got " + std::to_string(sum));
    }
};

/// Weights proportional to squared point counts, w_i = n_i^2 / sum n_k^2.
inline PoolingWeights square_point_weights(const std::vector<std::size_t>& counts) {
    double denom = 0.0;
    for (std::size_t n : counts) denom += static_cast<double>(n) * static_cast<double>(n);
    if (denom == 0.0) throw data_error("square point weights: all counts are zero");
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        w[i] = static_cast<double>(counts[i]) * static_cast<double>(counts[i]) / denom;
    return PoolingWeights(std::move(w));
}

namespace detail {

inline void check_grid_for_window(const std::vector<double>& grid, const Window& w) {
    if (grid.empty()) throw data_error("empty distance grid");
    if (grid.back() >= std::min(w.width(), w.height()))
        throw data_error("grid maximum " + std::to_string(grid.back()) +
                         " exceeds window size " + std::to_string(std::min(w.width(), w.height())));
    if (grid.front() < 0.0) throw data_error("negative grid value");
}

struct PairTerm {
    double dist;
    double weight; // 1 / |W_xi n W_xj| summed over both ordered pairs
};

/// All unordered pair distances with translation-correction weights, sorted by distance.
inline std::vector<PairTerm> sorted_pair_terms(const PointPattern& p) {
    const std::size_t n = p.size();
    std::vector<PairTerm> terms;
    terms.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = p.points[i].x - p.points[j].x;
            const double dy = p.points[i].y - p.points[j].y;
            const double overlap = translation_overlap(p.window, dx, dy);
            if (overlap <= 0.0)
                throw numeric_error("pair separation exceeds window size; translation weight undefined");
            terms.push_back({std::sqrt(dx * dx + dy * dy), 2.0 / overlap});
        }
    }
    std::sort(terms.begin(), terms.end(),
              [](const PairTerm& a, const PairTerm& b) { return a.dist < b.dist; });
    return terms;
}

} // namespace detail

/// Translation-corrected estimate of the K function on the given grid:
///   K(r) = (1 / lambda^2) * sum_{i != j} 1{ ||x_i - x_j|| <= r } / |W_xi n W_xj|
/// with the intensity plug-in lambda^2 = n^2 / |W|^2. The translation sum is
/// unbiased for lambda^2 K(r), so the |W|^2 factor is what gives K its units
/// of area (on a unit window it is invisible).
inline SummaryCurve estimate_K(const PointPattern& pattern, const std::vector<double>& grid) {
    if (pattern.size() < 2)
        throw data_error("K estimate needs at least 2 points, got " + std::to_string(pattern.size()));
    detail::check_grid_for_window(grid, pattern.window);

    const auto terms = detail::sorted_pair_terms(pattern);
    std::vector<double> prefix(terms.size() + 1, 0.0);
    for (std::size_t i = 0; i < terms.size(); ++i) prefix[i + 1] = prefix[i] + terms[i].weight;

    const double n = static_cast<double>(pattern.size());
    const double area = pattern.window.area();
    const double scale = area * area / (n * n);
    std::vector<double> values(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto it = std::upper_bound(
            terms.begin(), terms.end(), grid[g],
            [](double r, const detail::PairTerm& t) { return r < t.dist; });
        values[g] = scale * prefix[static_cast<std::size_t>(it - terms.begin())];
    }
    return SummaryCurve(grid, std::move(values), CurveKind::K);
}

/// Variance-stabilized, centered transform: L(r) - r = sqrt(K(r)/pi) - r.
inline SummaryCurve centered_L(const SummaryCurve& K_curve) {
    if (K_curve.kind != CurveKind::K) throw data_error("centered_L expects a K curve");
    std::vector<double> values(K_curve.size());
    for (std::size_t i = 0; i < K_curve.size(); ++i) {
        const double k = K_curve.values[i];
        if (is_missing(k)) {
            values[i] = missing_value();
            continue;
        }
        if (k < 0.0) throw data_error("negative K value in centered_L input");
        values[i] = std::sqrt(k / 3.14159265358979323846) - K_curve.grid[i];
    }
    return SummaryCurve(K_curve.grid, std::move(values), CurveKind::L_centered);
}

/// Pointwise weighted sum of curves sharing one grid. Missing values are
/// skipped and the weights of the remaining curves renormalized at that point.
inline SummaryCurve pool_curves(const std::vector<SummaryCurve>& curves,
                                const PoolingWeights& pooling) {
    if (curves.empty()) throw data_error("pool_curves: no curves");
    if (curves.size() != pooling.weights.size())
        throw data_error("pool_curves: curve count does not match weight count");
    for (const SummaryCurve& c : curves) {
        if (!c.same_grid(curves.front())) throw data_error("pool_curves: grid mismatch");
        if (c.kind != curves.front().kind) throw data_error("pool_curves: curve kind mismatch");
    }
    const std::size_t d = curves.front().size();
    std::vector<double> values(d);
    for (std::size_t k = 0; k < d; ++k) {
        double acc = 0.0;
        double wsum = 0.0;
        for (std::size_t i = 0; i < curves.size(); ++i) {
            const double v = curves[i].values[k];
            if (is_missing(v)) continue;
            acc += pooling.weights[i] * v;
            wsum += pooling.weights[i];
        }
        values[k] = wsum > 0.0 ? acc / wsum : missing_value();
    }
    return SummaryCurve(curves.front().grid, std::move(values), curves.front().kind);
}

/// Pools per-sample curves with square point number weights.
inline SummaryCurve pool_with_square_weights(const std::vector<SummaryCurve>& curves,
                                             const std::vector<std::size_t>& counts) {
    return pool_curves(curves, square_point_weights(counts));
}

namespace detail {

/// Linear-interpolation sample quantile (R's default type 7) of an
/// ascending-sorted nonempty vector.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
    const double h = p * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = std::min(static_cast<std::size_t>(h), sorted.size() - 1);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace detail

/// Epanechnikov kernel with bandwidth b.
inline double epanechnikov(double u, double b) {
    const double z = u / b;
    if (std::abs(z) >= 1.0) return 0.0;
    return 0.75 * (1.0 - z * z) / b;
}

/// Silverman rule-of-thumb bandwidth over the pairwise distances below dmax:
/// 0.9 * min(sd, IQR/1.34) * n^(-1/5).
inline double markcorr_bandwidth(const PointPattern& pattern, double dmax) {
    std::vector<double> dists;
    const std::size_t n = pattern.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = distance(pattern.points[i], pattern.points[j]);
            if (d <= dmax) dists.push_back(d);
        }
    if (dists.size() < 2)
        throw numeric_error("too few pairwise distances below grid maximum to pick a bandwidth");
    const double nd = static_cast<double>(dists.size());
    double mean = std::accumulate(dists.begin(), dists.end(), 0.0) / nd;
    double ss = 0.0;
    for (double d : dists) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (nd - 1.0));
    std::sort(dists.begin(), dists.end());
    const double iqr =
        detail::quantile_type7(dists, 0.75) - detail::quantile_type7(dists, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    const double b = 0.9 * spread * std::pow(nd, -0.2);
    if (!(b > 0.0)) throw numeric_error("degenerate pairwise distance distribution; pass a bandwidth");
    return b;
}

/// Kernel estimate of the mark correlation function with test function
/// f(m_i, m_j) = m_i * m_j and translation edge correction:
///   k(r) = [ sum m_i m_j w_ij(r) ] / [ mbar^2 sum w_ij(r) ]
/// Grid points with no kernel mass get the missing-value sentinel.
inline SummaryCurve mark_correlation(const MarkedPointPattern& mpattern,
                                     const std::vector<double>& grid,
                                     std::optional<double> bandwidth = std::nullopt) {
    const PointPattern& pattern = mpattern.pattern;
    const std::size_t n = pattern.size();
    if (n < 2) throw data_error("mark correlation needs at least 2 points");
    detail::check_grid_for_window(grid, pattern.window);

    double mbar = std::accumulate(mpattern.marks.begin(), mpattern.marks.end(), 0.0) /
                  static_cast<double>(n);
    if (mbar == 0.0) throw numeric_error("mark mean is zero; mark correlation undefined");

    if (bandwidth && !(*bandwidth > 0.0)) throw data_error("bandwidth must be positive");
    const double b = bandwidth ? *bandwidth : markcorr_bandwidth(pattern, grid.back());

    struct Pair {
        double dist;
        double inv_overlap;
        double mark_prod;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = pattern.points[i].x - pattern.points[j].x;
            const double dy = pattern.points[i].y - pattern.points[j].y;
            const double overlap = translation_overlap(pattern.window, dx, dy);
            if (overlap <= 0.0) continue;
            pairs.push_back({std::sqrt(dx * dx + dy * dy), 1.0 / overlap,
                             mpattern.marks[i] * mpattern.marks[j]});
        }

    std::vector<double> values(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double r = grid[g];
        double num = 0.0;
        double den = 0.0;
        for (const Pair& p : pairs) {
            const double kern = epanechnikov(r - p.dist, b);
            if (kern <= 0.0) continue;
            const double w = kern * p.inv_overlap;
            num += p.mark_prod * w;
            den += w;
        }
        values[g] = den > 0.0 ? num / (mbar * mbar * den) : missing_value();
    }
    return SummaryCurve(grid, std::move(values), CurveKind::markcorr);
}

/// Configuration for the empty space function estimate.
struct FConfig {
    std::size_t n_test_points = 10000;
    std::vector<double> grid = default_r_grid();
};

namespace detail {

/// One stratified-uniform point per cell of an nx-by-ny partition of the window.
inline void stratified_points(const Window& w, std::size_t target, Rng& rng,
                              std::vector<Point>& out) {
    const double aspect = w.width() / w.height();
    std::size_t nx = static_cast<std::size_t>(
        std::max(1.0, std::round(std::sqrt(static_cast<double>(target) * aspect))));
    std::size_t ny = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::round(static_cast<double>(target) / static_cast<double>(nx))));
    const double cw = w.width() / static_cast<double>(nx);
    const double ch = w.height() / static_cast<double>(ny);
    out.clear();
    out.reserve(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
            out.push_back(Point{w.xmin + (static_cast<double>(ix) + rng.uniform()) * cw,
                                w.ymin + (static_cast<double>(iy) + rng.uniform()) * ch});
}

} // namespace detail

/// Empty space function estimate. A single stratified set of test points is
/// drawn once in W; for each r only the test points inside the eroded window
/// W(-r) are used, and F(r) is the fraction of them whose nearest data point
/// lies within r. Reusing one test set makes the estimate monotone in r.
inline SummaryCurve empty_space_F(const PointPattern& pattern, const FConfig& config, Rng& rng) {
    const std::vector<double>& grid = config.grid;
    if (grid.empty()) throw data_error("empty F grid");
    if (grid.front() < 0.0) throw data_error("negative grid value");
    // every grid r must leave a nonempty eroded window
    erode_window(pattern.window, grid.back());

    std::vector<Point> test_points;
    detail::stratified_points(pattern.window, config.n_test_points, rng, test_points);
    const std::size_t t = test_points.size();

    std::vector<double> margin(t), nnd(t);
    const bool empty_pattern = pattern.size() == 0;
    for (std::size_t i = 0; i < t; ++i) {
        margin[i] = pattern.window.boundary_margin(test_points[i]);
        double best = std::numeric_limits<double>::infinity();
        for (const Point& q : pattern.points)
            best = std::min(best, squared_distance(test_points[i], q));
        nnd[i] = std::sqrt(best);
    }

    std::vector<double> values(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double r = grid[g];
        std::size_t eligible = 0, hits = 0;
        for (std::size_t i = 0; i < t; ++i) {
            if (margin[i] < r) continue;
            ++eligible;
            if (nnd[i] <= r) ++hits;
        }
        values[g] = eligible > 0
                        ? static_cast<double>(hits) / static_cast<double>(eligible)
                        : missing_value();
        if (empty_pattern) values[g] = 0.0;
    }
    SummaryCurve curve(grid, std::move(values), CurveKind::F);
    if (empty_pattern) curve.warning = "empty pattern: F is identically zero";
    return curve;
}

/// Scalar summary statistic: the smallest grid r with F(r) >= threshold.
/// Equivalent to scanning empty_space_F but stops at the first crossing.
inline double abc_summary(const PointPattern& pattern, const FConfig& config, Rng& rng,
                          double threshold = 0.3) {
    const std::vector<double>& grid = config.grid;
    if (grid.empty()) throw data_error("empty F grid");
    if (grid.front() < 0.0) throw data_error("negative grid value");
    erode_window(pattern.window, grid.back());
    if (pattern.size() == 0)
        throw numeric_error("summary undefined: empty pattern");

    std::vector<Point> test_points;
    detail::stratified_points(pattern.window, config.n_test_points, rng, test_points);
    const std::size_t t = test_points.size();

    // Sort test points by boundary margin (descending) so that the points
    // eligible at radius r always form a prefix.
    std::vector<double> margin(t);
    for (std::size_t i = 0; i < t; ++i)
        margin[i] = pattern.window.boundary_margin(test_points[i]);
    std::vector<std::size_t> order(t);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });

    // Same arithmetic as empty_space_F (sqrt'ed distances, ratio compare) so
    // the early exit returns exactly the threshold scan of that curve.
    std::vector<double> sorted_margin(t), nnd(t);
    for (std::size_t i = 0; i < t; ++i) {
        const Point& p = test_points[order[i]];
        sorted_margin[i] = margin[order[i]];
        double best = std::numeric_limits<double>::infinity();
        for (const Point& q : pattern.points)
            best = std::min(best, squared_distance(p, q));
        nnd[i] = std::sqrt(best);
    }

    std::size_t eligible = t;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double r = grid[g];
        while (eligible > 0 && sorted_margin[eligible - 1] < r) --eligible;
        if (eligible == 0) continue;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < eligible; ++i)
            if (nnd[i] <= r) ++hits;
        if (static_cast<double>(hits) / static_cast<double>(eligible) >= threshold) return r;
    }
    throw numeric_error("summary undefined: F never reaches " + std::to_string(threshold) +
                        " on the grid; extend the grid");
}

} // namespace nervepp

#endif // NERVEPP_SUMMARIES_HPP
