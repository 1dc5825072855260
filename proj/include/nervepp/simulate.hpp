#ifndef NERVEPP_SIMULATE_HPP
#define NERVEPP_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nervepp/errors.hpp"
#include "nervepp/geometry.hpp"
#include "nervepp/io.hpp"
#include "nervepp/pattern.hpp"
#include "nervepp/rng.hpp"

namespace nervepp {

// ---------------------------------------------------------------------------
// Homogeneous Poisson process
// ---------------------------------------------------------------------------

inline PointPattern simulate_poisson(double lambda, const Window& window, Rng& rng) {
    if (!(lambda >= 0.0)) throw data_error("Poisson intensity must be nonnegative");
    const std::size_t n = rng.poisson(lambda * window.area());
    std::vector<Point> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({rng.uniform(window.xmin, window.xmax), rng.uniform(window.ymin, window.ymax)});
    return PointPattern(std::move(pts), window);
}

// ---------------------------------------------------------------------------
// Matérn cluster process
// ---------------------------------------------------------------------------

struct MaternParams {
    double kappa = 2.8e-4; // parents per square micron (~40 per 330x432 window)
    double R = 20.0;       // cluster radius, microns
    double mu = 4.6;       // mean daughters per parent

    void validate() const {
        if (!(kappa > 0.0) || !(R > 0.0) || !(mu > 0.0))
            throw data_error("Matern parameters must all be strictly positive");
    }
};

namespace detail {

struct MaternCluster {
    Point parent;
    std::vector<Point> daughters; // anywhere in the disc, not yet clipped
};

/// Parents on the window dilated by R ("plus sampling"), so that daughters
/// inside the window see the full parent population. Daughters uniform in
/// the disc of radius R via rejection from the bounding square.
inline std::vector<MaternCluster> matern_clusters(const MaternParams& params,
                                                  const Window& window, Rng& rng) {
    params.validate();
    const Window outer = window.dilated(params.R);
    const std::size_t n_parents = rng.poisson(params.kappa * outer.area());
    std::vector<MaternCluster> clusters;
    clusters.reserve(n_parents);
    for (std::size_t i = 0; i < n_parents; ++i) {
        MaternCluster c;
        c.parent = {rng.uniform(outer.xmin, outer.xmax), rng.uniform(outer.ymin, outer.ymax)};
        const std::size_t n_d = rng.poisson(params.mu);
        c.daughters.reserve(n_d);
        for (std::size_t j = 0; j < n_d; ++j) {
            double dx, dy;
            do {
                dx = rng.uniform(-params.R, params.R);
                dy = rng.uniform(-params.R, params.R);
            } while (dx * dx + dy * dy > params.R * params.R);
            c.daughters.push_back({c.parent.x + dx, c.parent.y + dy});
        }
        clusters.push_back(std::move(c));
    }
    return clusters;
}

} // namespace detail

/// Daughter pattern restricted to the window, keeping daughters of *all*
/// parents (inside the window or not). This is the exactly stationary Matérn
/// cluster pattern, suitable for comparison with the closed-form K below.
inline PointPattern simulate_matern_pattern(const MaternParams& params, const Window& window,
                                            Rng& rng) {
    std::vector<Point> pts;
    for (const auto& c : detail::matern_clusters(params, window, rng))
        for (const Point& d : c.daughters)
            if (window.contains(d)) pts.push_back(d);
    return PointPattern(std::move(pts), window);
}

/// Tree-structured sample: parents inside the window become bases, their
/// daughters inside the window become ends. Daughters falling outside the
/// window are unobservable and dropped, as are whole clusters whose parent
/// lies outside; trees that end up with zero ends are kept (a base with no
/// ends is observable). The union of all ends is a fair but edge-clipped
/// view of the stationary daughter pattern; use simulate_matern_pattern for
/// the exactly stationary version.
inline NerveSample simulate_matern(const MaternParams& params, const Window& window, Rng& rng,
                                   const std::string& sample_id = "matern",
                                   const std::string& subject_id = "sim",
                                   Group group = Group::healthy) {
    NerveSample sample;
    sample.sample_id = sample_id;
    sample.subject_id = subject_id;
    sample.group = group;
    sample.window = window;
    int next_id = 1;
    for (const auto& c : detail::matern_clusters(params, window, rng)) {
        if (!window.contains(c.parent)) continue;
        NerveTree tree;
        tree.tree_id = next_id++;
        tree.base = c.parent;
        for (const Point& d : c.daughters)
            if (window.contains(d)) tree.ends.push_back(d);
        sample.trees.push_back(std::move(tree));
    }
    sample.validate();
    return sample;
}

// ---------------------------------------------------------------------------
// Closed-form Matérn K and minimum-contrast fitting
// ---------------------------------------------------------------------------

/// Fraction-of-overlap term for two discs of radius R at parent distance
/// 2Rz, integrated over the daughter displacement distribution; h(0)=0,
/// h(z)=1 once the discs no longer overlap (z >= 1).
inline double matern_h(double z) {
    if (z >= 1.0) return 1.0;
    if (z <= 0.0) return 0.0;
    const double z2 = z * z;
    const double s = std::sqrt(1.0 - z2);
    const double inner = (8.0 * z2 - 4.0) * std::acos(z) - 2.0 * std::asin(z) +
                         4.0 * z * s * s * s - 6.0 * z * s;
    constexpr double pi = 3.14159265358979323846;
    return 2.0 + inner / pi;
}

inline double matern_K(const MaternParams& params, double r) {
    params.validate();
    if (!(r >= 0.0)) throw data_error("matern_K requires r >= 0");
    constexpr double pi = 3.14159265358979323846;
    return pi * r * r + matern_h(r / (2.0 * params.R)) / params.kappa;
}

struct MaternFit {
    MaternParams params;
    double objective = 0.0;
};

struct FitConfig {
    double q = 0.25;       // contrast exponent
    double r_min = 1.0;    // fitting range, microns
    double r_max = 100.0;
    double kappa_lo = 1e-7, kappa_hi = 1e-1; // search box (kappa on log scale)
    double R_lo = 0.5, R_hi = 120.0;
    int grid_n = 33;  // points per axis per refinement level
    int levels = 6;   // grid refinement levels
};

namespace detail {

/// Integrated q-th power contrast between an empirical K curve and the
/// Matérn model, trapezoid rule over the grid points inside [r_min, r_max].
inline double matern_contrast(const SummaryCurve& curve, const MaternParams& params,
                              const FitConfig& cfg) {
    double obj = 0.0;
    double prev_r = 0.0, prev_sq = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const double r = curve.grid[i];
        if (r < cfg.r_min || r > cfg.r_max) continue;
        const double diff = std::pow(curve.values[i], cfg.q) - std::pow(matern_K(params, r), cfg.q);
        const double sq = diff * diff;
        if (have_prev) obj += 0.5 * (sq + prev_sq) * (r - prev_r);
        prev_r = r;
        prev_sq = sq;
        have_prev = true;
    }
    return obj;
}

} // namespace detail

/// Minimum-contrast fit of (kappa, R) by nested grid refinement; mu is not
/// identifiable from K alone and is taken from the observed mean ends per
/// tree. A solution pressed against the search box is reported as an error
/// (typically a pattern with no detectable clustering).
inline MaternFit fit_matern_mincontrast(const SummaryCurve& K_curve, double mu_hint,
                                        const FitConfig& cfg = FitConfig{}) {
    if (K_curve.kind != CurveKind::K)
        throw data_error("fit_matern_mincontrast expects a curve of kind K");
    if (!(mu_hint > 0.0)) throw data_error("mu_hint must be strictly positive");
    std::size_t usable = 0;
    for (double r : K_curve.grid)
        if (r >= cfg.r_min && r <= cfg.r_max) ++usable;
    if (usable < 10)
        throw data_error("fit_matern_mincontrast needs >= 10 grid points in the fitting range");
    for (std::size_t i = 0; i < K_curve.grid.size(); ++i) {
        const double r = K_curve.grid[i];
        if (r >= cfg.r_min && r <= cfg.r_max && !(K_curve.values[i] >= 0.0))
            throw data_error("fit_matern_mincontrast: K curve has missing or negative values "
                             "inside the fitting range");
    }

    const auto objective = [&](double log10_kappa, double R) {
        MaternParams p;
        p.kappa = std::pow(10.0, log10_kappa);
        p.R = R;
        p.mu = mu_hint;
        return detail::matern_contrast(K_curve, p, cfg);
    };

    double klo = std::log10(cfg.kappa_lo), khi = std::log10(cfg.kappa_hi);
    double rlo = cfg.R_lo, rhi = cfg.R_hi;
    double best_k = 0.5 * (klo + khi), best_r = 0.5 * (rlo + rhi);
    double best_obj = objective(best_k, best_r);
    const int n = cfg.grid_n;
    for (int level = 0; level < cfg.levels; ++level) {
        const double kstep = (khi - klo) / (n - 1);
        const double rstep = (rhi - rlo) / (n - 1);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double k = klo + kstep * i;
                const double r = rlo + rstep * j;
                const double obj = objective(k, r);
                if (obj < best_obj) {
                    best_obj = obj;
                    best_k = k;
                    best_r = r;
                }
            }
        }
        // zoom to +-2 grid steps around the incumbent, clamped to the box
        klo = std::max(std::log10(cfg.kappa_lo), best_k - 2.0 * kstep);
        khi = std::min(std::log10(cfg.kappa_hi), best_k + 2.0 * kstep);
        rlo = std::max(cfg.R_lo, best_r - 2.0 * rstep);
        rhi = std::min(cfg.R_hi, best_r + 2.0 * rstep);
    }

    // golden-section polish, one axis at a time on the final zoom box
    constexpr double gr = 0.6180339887498949;
    for (int pass = 0; pass < 3; ++pass) {
        {
            double a = klo, b = khi;
            while (b - a > 1e-10) {
                const double c = b - gr * (b - a), d = a + gr * (b - a);
                if (objective(c, best_r) < objective(d, best_r)) b = d; else a = c;
            }
            best_k = 0.5 * (a + b);
        }
        {
            double a = rlo, b = rhi;
            while (b - a > 1e-10) {
                const double c = b - gr * (b - a), d = a + gr * (b - a);
                if (objective(best_k, c) < objective(best_k, d)) b = d; else a = c;
            }
            best_r = 0.5 * (a + b);
        }
    }
    best_obj = objective(best_k, best_r);

    const double kspan = std::log10(cfg.kappa_hi) - std::log10(cfg.kappa_lo);
    const double rspan = cfg.R_hi - cfg.R_lo;
    const bool at_edge = best_k - std::log10(cfg.kappa_lo) < 1e-3 * kspan ||
                         std::log10(cfg.kappa_hi) - best_k < 1e-3 * kspan ||
                         best_r - cfg.R_lo < 1e-3 * rspan || cfg.R_hi - best_r < 1e-3 * rspan;
    if (at_edge) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "minimum contrast hit the search boundary (kappa=%.6g, R=%.6g, "
                      "objective=%.6g); the pattern may lack Matern-type clustering",
                      std::pow(10.0, best_k), best_r, best_obj);
        throw numeric_error(buf);
    }

    MaternFit fit;
    fit.params.kappa = std::pow(10.0, best_k);
    fit.params.R = best_r;
    fit.params.mu = mu_hint;
    fit.objective = best_obj;
    return fit;
}

// ---------------------------------------------------------------------------
// Parameter file I/O
// ---------------------------------------------------------------------------

inline void save_matern_params(const std::string& path, const MaternFit& fit) {
    nlohmann::json j;
    j["kappa"] = fit.params.kappa;
    j["R"] = fit.params.R;
    j["mu"] = fit.params.mu;
    j["objective"] = fit.objective;
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline MaternFit load_matern_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read " + path);
    MaternFit fit;
    try {
        nlohmann::json j;
        in >> j;
        fit.params.kappa = j.at("kappa").get<double>();
        fit.params.R = j.at("R").get<double>();
        fit.params.mu = j.at("mu").get<double>();
        fit.objective = j.value("objective", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path + ": " + e.what());
    }
    fit.params.validate();
    return fit;
}

} // namespace nervepp

#endif // NERVEPP_SIMULATE_HPP
