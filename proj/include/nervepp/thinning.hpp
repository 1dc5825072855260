#ifndef NERVEPP_THINNING_HPP
#define NERVEPP_THINNING_HPP

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "nervepp/errors.hpp"
#include "nervepp/pattern.hpp"
#include "nervepp/rng.hpp"

namespace nervepp {

/// Ratio of mean intensities, target over source, each computed as total
/// point count (bases plus ends) divided by total window area of the group.
/// Clamped to 1 so the result is always usable as a retention probability.
inline double estimate_retention_p(const SampleSet& target_group, const SampleSet& source_group) {
    if (target_group.samples.empty() || source_group.samples.empty())
        throw data_error("estimate_retention_p: both groups must be nonempty");
    const auto group_intensity = [](const SampleSet& set, bool& any_points) {
        double points = 0.0, area = 0.0;
        for (const NerveSample& s : set.samples) {
            points += static_cast<double>(s.tree_count() + s.end_count());
            area += s.window.area();
        }
        any_points = points > 0.0;
        return points / area;
    };
    bool source_nonzero = false, ignored = false;
    const double lam_source = group_intensity(source_group, source_nonzero);
    const double lam_target = group_intensity(target_group, ignored);
    if (!source_nonzero) throw data_error("estimate_retention_p: source group has zero points");
    return std::min(lam_target / lam_source, 1.0);
}

/// Keep each end point independently with probability p; bases untouched.
inline NerveSample p_thin_endpoints(const NerveSample& sample, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw data_error("retention probability must be in [0,1]");
    NerveSample out = sample;
    for (NerveTree& tree : out.trees) {
        std::vector<Point> kept;
        kept.reserve(tree.ends.size());
        for (const Point& e : tree.ends)
            if (rng.bernoulli(p)) kept.push_back(e);
        tree.ends = std::move(kept);
    }
    return out;
}

/// Keep each tree (base plus all its ends) independently with probability p.
inline NerveSample p_thin_trees(const NerveSample& sample, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw data_error("retention probability must be in [0,1]");
    NerveSample out = sample;
    out.trees.clear();
    for (const NerveTree& tree : sample.trees)
        if (rng.bernoulli(p)) out.trees.push_back(tree);
    return out;
}

/// Retain a uniformly random subset of exactly n_B trees (partial
/// Fisher-Yates over tree indices), each with all its end points.
inline NerveSample thin_trees_to_count(const NerveSample& sample, std::size_t n_B, Rng& rng) {
    if (n_B > sample.trees.size())
        throw data_error("thin_trees_to_count: requested " + std::to_string(n_B) +
                         " trees but sample has " + std::to_string(sample.trees.size()));
    std::vector<std::size_t> idx(sample.trees.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < n_B; ++i) {
        const std::size_t j = i + rng.uniform_index(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n_B);
    std::sort(idx.begin(), idx.end()); // keep input tree order
    NerveSample out = sample;
    out.trees.clear();
    out.trees.reserve(n_B);
    for (std::size_t i : idx) out.trees.push_back(sample.trees[i]);
    return out;
}

/// Removal weights for one iteration of the dependent thinning model:
/// w_j proportional to 1 - exp(-theta^2 m_j^2), where m_j is the base's
/// nearest-neighbor distance. Isolated bases (large m) are removed first.
/// If every weight underflows to zero the limit is uniform removal.
inline std::vector<double> dependent_removal_weights(const std::vector<double>& marks,
                                                     double theta, bool* underflowed = nullptr) {
    if (!(theta > 0.0)) throw data_error("dependent thinning requires theta > 0");
    std::vector<double> w(marks.size());
    double total = 0.0;
    for (std::size_t j = 0; j < marks.size(); ++j) {
        w[j] = -std::expm1(-theta * theta * marks[j] * marks[j]);
        total += w[j];
    }
    if (underflowed) *underflowed = !(total > 0.0);
    if (!(total > 0.0)) {
        const double u = 1.0 / static_cast<double>(marks.size());
        for (double& x : w) x = u;
        return w;
    }
    for (double& x : w) x /= total;
    return w;
}

/// Iteratively remove whole trees, one per iteration, sampling the victim
/// with probability proportional to 1 - exp(-theta^2 m^2) of its base's
/// current nearest-neighbor distance, until exactly n_B trees remain.
inline NerveSample dependent_thin(const NerveSample& sample, double theta, std::size_t n_B,
                                  Rng& rng) {
    if (!(theta > 0.0)) throw data_error("dependent thinning requires theta > 0");
    if (n_B < 1)
        throw data_error("dependent_thin: n_B must be >= 1 (nearest-neighbor marks need "
                         "at least two remaining bases at every iteration)");
    if (n_B >= sample.trees.size())
        throw data_error("dependent_thin: n_B = " + std::to_string(n_B) +
                         " must be below the tree count " + std::to_string(sample.trees.size()));
    NerveSample out = sample;
    bool warned = false;
    while (out.trees.size() > n_B) {
        std::vector<Point> bases(out.trees.size());
        for (std::size_t j = 0; j < out.trees.size(); ++j) bases[j] = out.trees[j].base;
        const std::vector<double> marks = nn_distance_marks(bases);
        bool underflow = false;
        const std::vector<double> w = dependent_removal_weights(marks, theta, &underflow);
        if (underflow && !warned) {
            std::fprintf(stderr,
                         "dependent_thin: all removal weights underflowed (theta=%g); "
                         "falling back to uniform removal\n", theta);
            warned = true;
        }
        const std::size_t victim = rng.weighted_index(w, 1.0);
        out.trees.erase(out.trees.begin() + static_cast<std::ptrdiff_t>(victim));
    }
    return out;
}

/// Sample ids with at least n_B + 5 trees, in the set's order.
inline std::vector<std::string> eligible_healthy(const SampleSet& healthy, std::size_t n_B) {
    std::vector<std::string> ids;
    for (const NerveSample& s : healthy.samples)
        if (s.tree_count() >= n_B + 5) ids.push_back(s.sample_id);
    return ids;
}

} // namespace nervepp

#endif // NERVEPP_THINNING_HPP
