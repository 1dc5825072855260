#ifndef NERVEPP_ABC_HPP
#define NERVEPP_ABC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nervepp/errors.hpp"
#include "nervepp/io.hpp"
#include "nervepp/parallel.hpp"
#include "nervepp/pattern.hpp"
#include "nervepp/rng.hpp"
#include "nervepp/summaries.hpp"
#include "nervepp/thinning.hpp"

namespace nervepp {

// ---------------------------------------------------------------------------
// Prior
// ---------------------------------------------------------------------------

enum class PriorFamily { exponential };

struct PriorSpec {
    PriorFamily family = PriorFamily::exponential;
    double rate = 10.0;
    double trunc_low = 0.01; // condition on theta > trunc_low

    void validate() const {
        if (!(rate > 0.0)) throw data_error("prior rate must be > 0");
        if (!(trunc_low >= 0.0)) throw data_error("prior truncation must be >= 0");
    }
};

/// One draw from Exponential(rate) conditioned on exceeding trunc_low;
/// by memorylessness this is trunc_low plus a fresh exponential.
inline double draw_prior(const PriorSpec& prior, Rng& rng) {
    return prior.trunc_low + rng.exponential(prior.rate);
}

inline std::vector<double> sample_prior(const PriorSpec& prior, std::size_t n, Rng& rng) {
    prior.validate();
    if (n < 1) throw data_error("sample_prior needs n >= 1");
    std::vector<double> out(n);
    for (double& x : out) x = draw_prior(prior, rng);
    return out;
}

// ---------------------------------------------------------------------------
// Reference table
// ---------------------------------------------------------------------------

struct TargetSpec {
    std::string target_id;
    std::size_t n_B = 0;
};

struct ReferenceRow {
    double theta = 0.0;
    std::string target_id;
    std::string healthy_id;
    double summary = missing_value(); // NaN when invalid
    std::uint64_t seed = 0;
    bool valid = false;
};

struct ReferenceTable {
    std::vector<ReferenceRow> rows;

    /// Rows belonging to one target, in table order.
    ReferenceTable for_target(const std::string& target_id) const {
        ReferenceTable out;
        for (const ReferenceRow& row : rows)
            if (row.target_id == target_id) out.rows.push_back(row);
        return out;
    }
};

struct ABCConfig {
    std::size_t n_sims = 100000;        // rows per target
    double accept_quantile = 0.001;     // used when epsilon is not set
    double f_threshold = 0.3;           // F level defining the scalar summary
    std::optional<double> epsilon;      // fixed tolerance mode
    FConfig f_config;                   // test points and r grid for the summary
    unsigned threads = 0;               // 0 = all hardware threads

    void validate() const {
        if (n_sims < 1) throw data_error("n_sims must be >= 1");
        if (!(accept_quantile > 0.0 && accept_quantile < 1.0))
            throw data_error("accept_quantile must lie in (0,1)");
        if (epsilon && !(*epsilon > 0.0)) throw data_error("epsilon must be > 0");
        if (!(f_threshold > 0.0 && f_threshold < 1.0))
            throw data_error("f_threshold must lie in (0,1)");
    }
};

/// Scalar summary of a sample's base-point pattern: smallest grid r with
/// F(r) >= threshold. The same definition must be applied to observed
/// targets and to simulated patterns.
inline double observed_summary_of(const NerveSample& sample, const ABCConfig& config, Rng& rng) {
    return abc_summary(sample.base_pattern(), config.f_config, rng, config.f_threshold);
}

/// Prior-predictive reference table: for every target, n_sims rows, each
/// built from an independent per-row seed (theta from the prior, a uniformly
/// chosen eligible healthy sample, dependent thinning to the target's base
/// count, then the scalar summary). Rows whose summary never reaches the
/// threshold are kept but flagged invalid. Output is identical for every
/// thread count.
inline ReferenceTable build_reference_table(const SampleSet& healthy,
                                            const std::vector<TargetSpec>& targets,
                                            const PriorSpec& prior, const ABCConfig& config,
                                            const RngSpec& rng_spec) {
    prior.validate();
    config.validate();
    if (targets.empty()) throw data_error("build_reference_table: no targets");

    struct TargetPool {
        const TargetSpec* spec;
        std::vector<const NerveSample*> eligible;
    };
    std::vector<TargetPool> pools;
    pools.reserve(targets.size());
    for (const TargetSpec& t : targets) {
        if (t.n_B < 1) throw data_error("target " + t.target_id + ": n_B must be >= 1");
        TargetPool pool;
        pool.spec = &t;
        for (const std::string& id : eligible_healthy(healthy, t.n_B))
            pool.eligible.push_back(&healthy.by_sample_id(id));
        if (pool.eligible.empty())
            throw data_error("target " + t.target_id + ": no healthy sample has at least " +
                             std::to_string(t.n_B + 5) + " trees");
        pools.push_back(std::move(pool));
    }

    ReferenceTable table;
    table.rows.resize(targets.size() * config.n_sims);
    parallel_for(table.rows.size(), config.threads, [&](std::size_t row_index) {
        const TargetPool& pool = pools[row_index / config.n_sims];
        ReferenceRow& row = table.rows[row_index];
        row.target_id = pool.spec->target_id;
        row.seed = derive_seed(rng_spec.base_seed, row_index);
        Rng rng(row.seed);
        row.theta = draw_prior(prior, rng);
        const NerveSample& source = *pool.eligible[rng.uniform_index(pool.eligible.size())];
        row.healthy_id = source.sample_id;
        const NerveSample thinned = dependent_thin(source, row.theta, pool.spec->n_B, rng);
        try {
            row.summary = abc_summary(thinned.base_pattern(), config.f_config, rng,
                                      config.f_threshold);
            row.valid = true;
        } catch (const numeric_error&) {
            row.summary = missing_value();
            row.valid = false;
        }
    });
    return table;
}

// ---------------------------------------------------------------------------
// Acceptance and posterior summaries
// ---------------------------------------------------------------------------

struct PosteriorDraws {
    std::string target_id;
    std::vector<double> thetas;
    std::size_t n_invalid = 0; // rows excluded from the distance quantile
    std::size_t n_total = 0;   // all rows seen
};

/// Rejection step on a single-target table: distances |summary - observed|
/// over the valid rows; accept those at or below the accept_quantile sample
/// quantile (ties included, so enlarging the quantile enlarges the accepted
/// set), or strictly below epsilon in fixed-tolerance mode.
inline PosteriorDraws abc_accept(const ReferenceTable& table, double observed_summary,
                                 const ABCConfig& config) {
    config.validate();
    if (table.rows.empty()) throw data_error("abc_accept: empty reference table");
    if (!std::isfinite(observed_summary))
        throw data_error("abc_accept: observed summary is not finite");
    for (const ReferenceRow& row : table.rows)
        if (row.target_id != table.rows.front().target_id)
            throw data_error("abc_accept: table mixes targets; slice with for_target first");

    PosteriorDraws draws;
    draws.target_id = table.rows.front().target_id;
    draws.n_total = table.rows.size();

    std::vector<double> dists;
    dists.reserve(table.rows.size());
    for (const ReferenceRow& row : table.rows) {
        if (!row.valid) {
            ++draws.n_invalid;
            continue;
        }
        dists.push_back(std::abs(row.summary - observed_summary));
    }
    if (dists.empty())
        throw data_error("abc_accept: no valid rows (all summaries undefined)");

    double cutoff;
    bool strict;
    if (config.epsilon) {
        cutoff = *config.epsilon;
        strict = true;
    } else {
        const std::size_t k = std::min<std::size_t>(
            dists.size(),
            std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::ceil(config.accept_quantile * static_cast<double>(dists.size())))));
        std::vector<double> sorted = dists;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1),
                         sorted.end());
        cutoff = sorted[k - 1];
        strict = false;
    }
    for (const ReferenceRow& row : table.rows) {
        if (!row.valid) continue;
        const double d = std::abs(row.summary - observed_summary);
        if (strict ? d < cutoff : d <= cutoff) draws.thetas.push_back(row.theta);
    }
    if (draws.thetas.empty())
        throw data_error("abc_accept: nothing accepted under epsilon=" +
                         std::to_string(cutoff) + "; consider quantile mode");
    return draws;
}

struct PosteriorSummary {
    double median = 0.0;
    double ci_lo = 0.0; // central 95% interval
    double ci_hi = 0.0;
};

inline PosteriorSummary posterior_summary(const PosteriorDraws& draws,
                                          std::size_t min_draws = 20) {
    if (draws.thetas.size() < std::max<std::size_t>(1, min_draws))
        throw data_error("posterior_summary: only " + std::to_string(draws.thetas.size()) +
                         " draws, need at least " + std::to_string(min_draws));
    std::vector<double> sorted = draws.thetas;
    std::sort(sorted.begin(), sorted.end());
    PosteriorSummary s;
    s.median = detail::quantile_type7(sorted, 0.5);
    s.ci_lo = detail::quantile_type7(sorted, 0.025);
    s.ci_hi = detail::quantile_type7(sorted, 0.975);
    return s;
}

// ---------------------------------------------------------------------------
// CSV interfaces
// ---------------------------------------------------------------------------

inline void save_reference_table(const std::string& path, const ReferenceTable& table) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << "theta,target_id,healthy_id,summary,seed,valid\n";
    for (const ReferenceRow& row : table.rows)
        out << format_double(row.theta) << ',' << row.target_id << ',' << row.healthy_id << ','
            << format_double(row.summary) << ',' << row.seed << ',' << (row.valid ? 1 : 0)
            << '\n';
}

inline ReferenceTable load_reference_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) !=
        std::vector<std::string>{"theta", "target_id", "healthy_id", "summary", "seed", "valid"})
        throw data_error(path + ": expected header theta,target_id,healthy_id,summary,seed,valid");
    ReferenceTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 6)
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 6 fields");
        ReferenceRow row;
        row.theta = parse_double_field(fields[0], path, line_no);
        row.target_id = fields[1];
        row.healthy_id = fields[2];
        row.summary = fields[3].empty() ? missing_value()
                                        : parse_double_field(fields[3], path, line_no);
        row.seed = parse_uint_field(fields[4], path, line_no);
        const long long v = parse_int_field(fields[5], path, line_no);
        if (v != 0 && v != 1)
            throw data_error(path + ":" + std::to_string(line_no) + ": valid must be 0 or 1");
        row.valid = v == 1;
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline void save_posteriors(const std::string& path, const std::vector<PosteriorDraws>& all) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << "target_id,theta\n";
    for (const PosteriorDraws& draws : all)
        for (double theta : draws.thetas)
            out << draws.target_id << ',' << format_double(theta) << '\n';
}

inline std::vector<PosteriorDraws> load_posteriors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"target_id", "theta"})
        throw data_error(path + ": expected header target_id,theta");
    std::vector<PosteriorDraws> all;
    std::map<std::string, std::size_t> index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 2)
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 2 fields");
        auto [it, inserted] = index.try_emplace(fields[0], all.size());
        if (inserted) {
            PosteriorDraws d;
            d.target_id = fields[0];
            all.push_back(std::move(d));
        }
        all[it->second].thetas.push_back(parse_double_field(fields[1], path, line_no));
    }
    for (PosteriorDraws& d : all) d.n_total = d.thetas.size();
    return all;
}

} // namespace nervepp

#endif // NERVEPP_ABC_HPP
