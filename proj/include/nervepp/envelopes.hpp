#ifndef NERVEPP_ENVELOPES_HPP
#define NERVEPP_ENVELOPES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nervepp/abc.hpp"
#include "nervepp/errors.hpp"
#include "nervepp/io.hpp"
#include "nervepp/parallel.hpp"
#include "nervepp/pattern.hpp"
#include "nervepp/rng.hpp"
#include "nervepp/summaries.hpp"
#include "nervepp/territory.hpp"
#include "nervepp/thinning.hpp"

namespace nervepp {

// ---------------------------------------------------------------------------
// Curve ensembles and extreme-rank-length ordering
// ---------------------------------------------------------------------------

struct CurveEnsemble {
    std::vector<SummaryCurve> curves;

    explicit CurveEnsemble(std::vector<SummaryCurve> c) : curves(std::move(c)) {
        if (curves.size() < 2) throw data_error("curve ensemble needs at least 2 curves");
        for (const SummaryCurve& curve : curves)
            if (curve.grid != curves.front().grid)
                throw data_error("curve ensemble mixes grids");
    }

    const std::vector<double>& grid() const { return curves.front().grid; }

    /// Grid indices where every curve has a finite value; rank-based
    /// machinery is restricted to this common sub-grid.
    std::vector<std::size_t> valid_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < grid().size(); ++k) {
            bool ok = true;
            for (const SummaryCurve& curve : curves)
                if (is_missing(curve.values[k])) { ok = false; break; }
            if (ok) idx.push_back(k);
        }
        return idx;
    }
};

/// Extreme-rank-length ordering keys. At each grid point every curve gets a
/// two-sided pointwise rank: the smaller of its mid-rank from below and from
/// above (rank 1 = most extreme on that side). A curve's key is its vector
/// of pointwise ranks sorted ascending; keys compare lexicographically and a
/// smaller key means a more extreme curve.
inline std::vector<std::vector<double>> erl_rank(const CurveEnsemble& ensemble) {
    const std::size_t s = ensemble.curves.size();
    const std::vector<std::size_t> cols = ensemble.valid_indices();
    std::vector<std::vector<double>> keys(s);
    for (auto& key : keys) key.reserve(cols.size());

    std::vector<std::size_t> order(s);
    for (std::size_t col : cols) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ensemble.curves[a].values[col] < ensemble.curves[b].values[col];
        });
        std::size_t i = 0;
        while (i < s) {
            std::size_t j = i;
            while (j + 1 < s && ensemble.curves[order[j + 1]].values[col] ==
                                    ensemble.curves[order[i]].values[col])
                ++j;
            const double mid = 0.5 * static_cast<double>(i + j) + 1.0; // mid-rank, 1-based
            const double two_sided = std::min(mid, static_cast<double>(s) + 1.0 - mid);
            for (std::size_t t = i; t <= j; ++t) keys[order[t]].push_back(two_sided);
            i = j + 1;
        }
    }
    for (auto& key : keys) std::sort(key.begin(), key.end());
    return keys;
}

// ---------------------------------------------------------------------------
// Global envelope
// ---------------------------------------------------------------------------

struct Envelope {
    std::vector<double> grid;
    std::vector<double> lo;
    std::vector<double> hi;
    double alpha = 0.05;
    std::optional<SummaryCurve> observed;
    std::optional<std::string> warning;
};

/// Global envelope from the least extreme (1 - alpha)-share of the ensemble
/// under the extreme-rank-length ordering: drop the most extreme curves as
/// long as the dropped count stays within alpha * s (key ties at the
/// threshold are all kept, so the test errs conservative), then take the
/// pointwise min and max of the survivors.
inline Envelope global_envelope(const CurveEnsemble& ensemble, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw data_error("alpha must lie in (0,1)");
    const std::size_t s = ensemble.curves.size();
    const std::vector<std::size_t> cols = ensemble.valid_indices();
    if (cols.empty())
        throw numeric_error("global envelope: no grid point is finite in every curve");

    const std::vector<std::vector<double>> keys = erl_rank(ensemble);
    std::vector<std::size_t> order(s);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
    });

    // Most extreme first. Find the largest exclusion count c such that the
    // c most extreme curves form complete key-groups and c <= alpha * s.
    const double budget = alpha * static_cast<double>(s) + 1e-9;
    std::size_t excluded = 0;
    std::size_t i = 0;
    while (i < s) {
        std::size_t j = i;
        while (j + 1 < s && keys[order[j + 1]] == keys[order[i]]) ++j;
        if (static_cast<double>(j + 1) > budget) break;
        excluded = j + 1;
        i = j + 1;
    }
    if (excluded >= s) excluded = s - 1; // never empty the ensemble

    Envelope env;
    env.grid = ensemble.grid();
    env.alpha = alpha;
    env.lo.assign(env.grid.size(), missing_value());
    env.hi.assign(env.grid.size(), missing_value());
    for (std::size_t col : cols) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t t = excluded; t < s; ++t) {
            const double v = ensemble.curves[order[t]].values[col];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        env.lo[col] = lo;
        env.hi[col] = hi;
    }

    std::string warning;
    if (static_cast<double>(s) < 2.0 / alpha)
        warning = "only " + std::to_string(s) + " curves for alpha=" + std::to_string(alpha) +
                  "; envelope is unreliable";
    if (cols.size() < env.grid.size()) {
        if (!warning.empty()) warning += "; ";
        warning += "test restricted to " + std::to_string(cols.size()) + " of " +
                   std::to_string(env.grid.size()) + " grid points (missing values elsewhere)";
    }
    if (!warning.empty()) env.warning = warning;
    return env;
}

/// Grid values where the curve leaves the envelope (strictly outside);
/// points where either side is missing are not compared.
inline std::vector<double> envelope_exits(const Envelope& env, const SummaryCurve& curve) {
    if (curve.grid != env.grid) throw data_error("envelope_exits: grid mismatch");
    std::vector<double> exits;
    for (std::size_t k = 0; k < env.grid.size(); ++k) {
        if (is_missing(env.lo[k]) || is_missing(env.hi[k]) || is_missing(curve.values[k]))
            continue;
        if (curve.values[k] < env.lo[k] || curve.values[k] > env.hi[k])
            exits.push_back(env.grid[k]);
    }
    return exits;
}

struct EnvelopeTest {
    Envelope envelope;
    bool inside = true;
    std::vector<double> exit_r;
};

/// Monte Carlo goodness-of-fit test: the observed curve joins the replicate
/// ensemble as one more exchangeable member, the envelope is built from the
/// combined set, and the verdict is whether the observed curve stays inside.
inline EnvelopeTest erl_test(const std::vector<SummaryCurve>& replicates,
                             const SummaryCurve& observed, double alpha) {
    std::vector<SummaryCurve> all;
    all.reserve(replicates.size() + 1);
    all.push_back(observed);
    all.insert(all.end(), replicates.begin(), replicates.end());
    EnvelopeTest test;
    test.envelope = global_envelope(CurveEnsemble(std::move(all)), alpha);
    test.envelope.observed = observed;
    test.exit_r = envelope_exits(test.envelope, observed);
    test.inside = test.exit_r.empty();
    return test;
}

// ---------------------------------------------------------------------------
// Pointwise bootstrap envelope over subjects
// ---------------------------------------------------------------------------

struct SubjectCurve {
    std::string subject_id;
    SummaryCurve curve;
    std::size_t point_count = 0;
};

/// Resample subjects with replacement B times, rebuild the group curve with
/// square point number weights each time, and take pointwise percentiles.
inline Envelope bootstrap_pointwise_envelope(const std::vector<SubjectCurve>& subjects,
                                             double alpha, std::size_t B, Rng& rng) {
    if (subjects.size() < 2)
        throw data_error("bootstrap needs at least 2 subjects");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw data_error("alpha must lie in (0,1]");
    if (B < 1) throw data_error("bootstrap needs at least 1 replicate");
    for (const SubjectCurve& s : subjects)
        if (s.curve.grid != subjects.front().curve.grid)
            throw data_error("bootstrap subjects mix grids");

    const std::vector<double>& grid = subjects.front().curve.grid;
    std::vector<SummaryCurve> pooled;
    pooled.reserve(B);
    std::vector<SummaryCurve> draw_curves;
    std::vector<std::size_t> draw_counts;
    for (std::size_t b = 0; b < B; ++b) {
        draw_curves.clear();
        draw_counts.clear();
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            const SubjectCurve& pick = subjects[rng.uniform_index(subjects.size())];
            draw_curves.push_back(pick.curve);
            draw_counts.push_back(pick.point_count);
        }
        pooled.push_back(pool_with_square_weights(draw_curves, draw_counts));
    }

    Envelope env;
    env.grid = grid;
    env.alpha = alpha;
    env.lo.assign(grid.size(), missing_value());
    env.hi.assign(grid.size(), missing_value());
    std::vector<double> column;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        column.clear();
        for (const SummaryCurve& curve : pooled)
            if (!is_missing(curve.values[k])) column.push_back(curve.values[k]);
        if (column.empty()) continue;
        std::sort(column.begin(), column.end());
        env.lo[k] = detail::quantile_type7(column, alpha / 2.0);
        env.hi[k] = detail::quantile_type7(column, 1.0 - alpha / 2.0);
    }
    return env;
}

// ---------------------------------------------------------------------------
// Curve-valued statistics of a sample group
// ---------------------------------------------------------------------------

enum class Statistic {
    L_ends,            // centered L of the end-point pattern
    L_bases,           // centered L of the base-point pattern
    markcorr_territory, // mark correlation, bases marked by territory size
    ecdf_cluster_size, // ECDF of end points per tree, trees pooled over the group
    ecdf_territory_area // ECDF of per-sample totals of territory size
};

inline const std::vector<std::pair<Statistic, std::string>>& statistic_names() {
    static const std::vector<std::pair<Statistic, std::string>> table = {
        {Statistic::L_ends, "L-ends"},
        {Statistic::L_bases, "L-bases"},
        {Statistic::markcorr_territory, "markcorr-territory"},
        {Statistic::ecdf_cluster_size, "ecdf-cluster-size"},
        {Statistic::ecdf_territory_area, "ecdf-territory-area"},
    };
    return table;
}

inline std::string to_string(Statistic stat) {
    for (const auto& [s, name] : statistic_names())
        if (s == stat) return name;
    throw data_error("unknown statistic");
}

inline Statistic statistic_from_string(const std::string& name) {
    std::string valid;
    for (const auto& [s, n] : statistic_names()) {
        if (n == name) return s;
        valid += valid.empty() ? n : ", " + n;
    }
    throw data_error("unknown statistic '" + name + "'; valid names: " + valid);
}

inline std::vector<double> default_grid_for(Statistic stat) {
    switch (stat) {
        case Statistic::ecdf_cluster_size: return linear_grid(0.0, 40.0, 41);
        case Statistic::ecdf_territory_area: return linear_grid(0.0, 20000.0, 201);
        default: return default_r_grid();
    }
}

namespace detail {

inline SummaryCurve missing_curve(const std::vector<double>& grid, CurveKind kind,
                                  const std::string& why) {
    SummaryCurve curve(grid, std::vector<double>(grid.size(), missing_value()), kind);
    curve.warning = why;
    return curve;
}

/// Bases of trees with at least one end, marked by territory size.
inline MarkedPointPattern territory_marked_bases(const NerveSample& sample) {
    std::vector<Point> bases;
    std::vector<double> marks;
    for (const NerveTree& tree : sample.trees) {
        if (tree.ends.empty()) continue;
        bases.push_back(tree.base);
        marks.push_back(territory_size(tree));
    }
    return MarkedPointPattern(PointPattern(std::move(bases), sample.window), std::move(marks));
}

} // namespace detail

/// Per-sample curve for the pooled statistics; failures (too few points for
/// the estimator) yield an all-missing curve that pooling then skips.
inline SummaryCurve sample_statistic_curve(const NerveSample& sample, Statistic stat,
                                           const std::vector<double>& grid) {
    try {
        switch (stat) {
            case Statistic::L_ends:
                return centered_L(estimate_K(sample.end_pattern(), grid));
            case Statistic::L_bases:
                return centered_L(estimate_K(sample.base_pattern(), grid));
            case Statistic::markcorr_territory:
                return mark_correlation(detail::territory_marked_bases(sample), grid);
            default:
                throw data_error("sample_statistic_curve only handles the pooled statistics");
        }
    } catch (const data_error& e) {
        const CurveKind kind =
            stat == Statistic::markcorr_territory ? CurveKind::markcorr : CurveKind::L_centered;
        return detail::missing_curve(grid, kind, e.what());
    } catch (const numeric_error& e) {
        const CurveKind kind =
            stat == Statistic::markcorr_territory ? CurveKind::markcorr : CurveKind::L_centered;
        return detail::missing_curve(grid, kind, e.what());
    }
}

/// Point count that weights a sample inside the pooled statistics.
inline std::size_t statistic_point_count(const NerveSample& sample, Statistic stat) {
    switch (stat) {
        case Statistic::L_ends: return sample.end_count();
        case Statistic::L_bases: return sample.tree_count();
        case Statistic::markcorr_territory: {
            std::size_t n = 0;
            for (const NerveTree& tree : sample.trees)
                if (!tree.ends.empty()) ++n;
            return n;
        }
        default: throw data_error("statistic_point_count only handles the pooled statistics");
    }
}

/// Group-level curve. The three pooled statistics aggregate per-sample
/// curves in two stages (samples within subject, then subjects) with square
/// point number weights; the two ECDF statistics are direct empirical CDFs
/// over the whole group (end counts per tree, and per-sample territory
/// totals, respectively).
inline SummaryCurve group_statistic_curve(const std::vector<const NerveSample*>& samples,
                                          Statistic stat, const std::vector<double>& grid) {
    if (samples.empty()) throw data_error("group_statistic_curve: empty group");
    switch (stat) {
        case Statistic::ecdf_cluster_size: {
            std::vector<double> sizes;
            for (const NerveSample* s : samples)
                for (const NerveTree& tree : s->trees)
                    sizes.push_back(static_cast<double>(tree.ends.size()));
            if (sizes.empty())
                return detail::missing_curve(grid, CurveKind::ecdf, "group has no trees");
            return ecdf_curve(sizes, grid);
        }
        case Statistic::ecdf_territory_area: {
            std::vector<double> totals;
            for (const NerveSample* s : samples) {
                double total = 0.0;
                for (const NerveTree& tree : s->trees)
                    if (!tree.ends.empty()) total += territory_size(tree);
                totals.push_back(total);
            }
            return ecdf_curve(totals, grid);
        }
        default: break;
    }

    // subject stage, in first-appearance order
    std::vector<std::string> subject_order;
    std::map<std::string, std::vector<const NerveSample*>> by_subject;
    for (const NerveSample* s : samples) {
        auto [it, inserted] = by_subject.try_emplace(s->subject_id);
        if (inserted) subject_order.push_back(s->subject_id);
        it->second.push_back(s);
    }
    std::vector<SummaryCurve> subject_curves;
    std::vector<std::size_t> subject_counts;
    for (const std::string& id : subject_order) {
        std::vector<SummaryCurve> curves;
        std::vector<std::size_t> counts;
        std::size_t total = 0;
        for (const NerveSample* s : by_subject[id]) {
            curves.push_back(sample_statistic_curve(*s, stat, grid));
            counts.push_back(statistic_point_count(*s, stat));
            total += counts.back();
        }
        if (total == 0) continue; // subject contributes nothing to this statistic
        subject_curves.push_back(pool_with_square_weights(curves, counts));
        subject_counts.push_back(total);
    }
    if (subject_curves.empty()) {
        const CurveKind kind =
            stat == Statistic::markcorr_territory ? CurveKind::markcorr : CurveKind::L_centered;
        return detail::missing_curve(grid, kind, "no subject has points for this statistic");
    }
    if (subject_curves.size() == 1) return subject_curves.front();
    return pool_with_square_weights(subject_curves, subject_counts);
}

// ---------------------------------------------------------------------------
// Posterior predictive band
// ---------------------------------------------------------------------------

struct PredictiveTarget {
    std::string target_id;
    std::size_t n_B = 0;
    PosteriorDraws posterior;
};

/// Replicate group curves from the posterior predictive distribution: each
/// replicate redraws, per target, a theta from that target's posterior and a
/// uniformly chosen eligible healthy sample, thins it to the target's base
/// count, and assembles the group curve; the global envelope of the
/// replicates is returned. Pass replicates_out to keep the curves (for the
/// goodness-of-fit verdict against observed data).
inline Envelope posterior_predictive_band(const SampleSet& healthy,
                                          const std::vector<PredictiveTarget>& targets,
                                          Statistic stat, std::size_t n_sim, double alpha,
                                          const RngSpec& rng_spec,
                                          const std::vector<double>& grid,
                                          unsigned threads = 0,
                                          std::vector<SummaryCurve>* replicates_out = nullptr) {
    if (targets.empty()) throw data_error("posterior_predictive_band: no targets");
    if (n_sim < 2) throw data_error("posterior_predictive_band: n_sim must be >= 2");

    struct Pool {
        const PredictiveTarget* target;
        std::vector<const NerveSample*> eligible;
    };
    std::vector<Pool> pools;
    for (const PredictiveTarget& t : targets) {
        if (t.posterior.thetas.empty())
            throw data_error("target " + t.target_id + ": empty posterior");
        if (t.n_B < 1) throw data_error("target " + t.target_id + ": n_B must be >= 1");
        Pool pool;
        pool.target = &t;
        for (const std::string& id : eligible_healthy(healthy, t.n_B))
            pool.eligible.push_back(&healthy.by_sample_id(id));
        if (pool.eligible.empty())
            throw data_error("target " + t.target_id + ": no healthy sample has at least " +
                             std::to_string(t.n_B + 5) + " trees");
        pools.push_back(std::move(pool));
    }

    std::vector<SummaryCurve> replicates(
        n_sim, SummaryCurve(grid, std::vector<double>(grid.size(), 0.0), CurveKind::ecdf));
    parallel_for(n_sim, threads, [&](std::size_t rep) {
        Rng rng(derive_seed(rng_spec.base_seed, rep));
        std::vector<NerveSample> simulated;
        simulated.reserve(pools.size());
        for (const Pool& pool : pools) {
            const double theta =
                pool.target->posterior.thetas[rng.uniform_index(pool.target->posterior.thetas.size())];
            const NerveSample& source = *pool.eligible[rng.uniform_index(pool.eligible.size())];
            NerveSample thinned = dependent_thin(source, theta, pool.target->n_B, rng);
            thinned.sample_id = pool.target->target_id;
            thinned.subject_id = pool.target->target_id;
            simulated.push_back(std::move(thinned));
        }
        std::vector<const NerveSample*> group;
        group.reserve(simulated.size());
        for (const NerveSample& s : simulated) group.push_back(&s);
        replicates[rep] = group_statistic_curve(group, stat, grid);
    });

    Envelope env = global_envelope(CurveEnsemble(replicates), alpha);
    if (replicates_out) *replicates_out = std::move(replicates);
    return env;
}

// ---------------------------------------------------------------------------
// Envelope file I/O
// ---------------------------------------------------------------------------

inline void save_envelope(const std::string& path, const Envelope& env) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << "r,lo,hi,observed\n";
    for (std::size_t k = 0; k < env.grid.size(); ++k) {
        out << format_double(env.grid[k]) << ',' << format_double(env.lo[k]) << ','
            << format_double(env.hi[k]) << ',';
        if (env.observed) out << format_double(env.observed->values[k]);
        out << '\n';
    }
}

inline Envelope load_envelope(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"r", "lo", "hi", "observed"})
        throw data_error(path + ": expected header r,lo,hi,observed");
    Envelope env;
    std::vector<double> observed;
    bool any_observed = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 4)
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 4 fields");
        auto value = [&](const std::string& f) {
            return f.empty() ? missing_value() : parse_double_field(f, path, line_no);
        };
        env.grid.push_back(parse_double_field(fields[0], path, line_no));
        env.lo.push_back(value(fields[1]));
        env.hi.push_back(value(fields[2]));
        observed.push_back(value(fields[3]));
        if (!fields[3].empty()) any_observed = true;
    }
    if (any_observed)
        env.observed = SummaryCurve(env.grid, std::move(observed), CurveKind::ecdf);
    return env;
}

/// JSON verdict for a goodness-of-fit run.
inline void save_envelope_report(const std::string& path, const EnvelopeTest& test,
                                 std::size_t n_sim, const std::string& statistic_name) {
    nlohmann::json j;
    j["statistic"] = statistic_name;
    j["alpha"] = test.envelope.alpha;
    j["n_sim"] = n_sim;
    j["inside"] = test.inside;
    j["exit_r"] = test.exit_r;
    if (test.envelope.warning) j["warning"] = *test.envelope.warning;
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

} // namespace nervepp

#endif // NERVEPP_ENVELOPES_HPP
