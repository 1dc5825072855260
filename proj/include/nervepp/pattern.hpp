#ifndef NERVEPP_PATTERN_HPP
#define NERVEPP_PATTERN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nervepp/errors.hpp"
#include "nervepp/geometry.hpp"

namespace nervepp {

/// Simple point pattern: every point inside the (closed) window, no duplicates.
struct PointPattern {
    std::vector<Point> points;
    Window window;

    PointPattern() : window(default_window()) {}

    PointPattern(std::vector<Point> pts, Window win)
        : points(std::move(pts)), window(win) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const Point& p = points[i];
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw data_error("point " + std::to_string(i) + " has non-finite coordinates");
            if (!window.contains(p))
                throw data_error("point " + std::to_string(i) + " (" + std::to_string(p.x) +
                                 ", " + std::to_string(p.y) + ") lies outside the window");
        }
        auto sorted = points;
        std::sort(sorted.begin(), sorted.end(), [](const Point& a, const Point& b) {
            return a.x < b.x || (a.x == b.x && a.y < b.y);
        });
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i] == sorted[i - 1])
                throw data_error("duplicate point (" + std::to_string(sorted[i].x) + ", " +
                                 std::to_string(sorted[i].y) + ") in pattern");
    }

    std::size_t size() const { return points.size(); }
    double intensity() const { return static_cast<double>(points.size()) / window.area(); }
};

/// Point pattern with one real-valued mark per point.
struct MarkedPointPattern {
    PointPattern pattern;
    std::vector<double> marks;

    MarkedPointPattern() = default;

    MarkedPointPattern(PointPattern pat, std::vector<double> mk)
        : pattern(std::move(pat)), marks(std::move(mk)) {
        if (marks.size() != pattern.size())
            throw data_error("mark count does not match point count");
        for (double m : marks)
            if (!std::isfinite(m)) throw data_error("non-finite mark");
    }
};

/// Distance from each point to its nearest distinct neighbor.
inline std::vector<double> nn_distance_marks(const std::vector<Point>& points) {
    const std::size_t n = points.size();
    if (n < 2)
        throw data_error("nearest-neighbor marks need at least 2 points, got " + std::to_string(n));
    std::vector<double> marks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            best = std::min(best, squared_distance(points[i], points[j]));
        }
        marks[i] = std::sqrt(best);
    }
    return marks;
}

/// Marks each point with the Euclidean distance to its nearest distinct neighbor.
inline MarkedPointPattern nn_distance_marks(const PointPattern& pattern) {
    return MarkedPointPattern(pattern, nn_distance_marks(pattern.points));
}

/// One nerve tree: an entry (base) point and the end points connected to it.
struct NerveTree {
    std::int64_t tree_id = 0;
    Point base;
    std::vector<Point> ends;
};

enum class Group { healthy, mild, moderate };

inline std::string to_string(Group g) {
    switch (g) {
        case Group::healthy: return "healthy";
        case Group::mild: return "mild";
        case Group::moderate: return "moderate";
    }
    return "healthy";
}

inline Group group_from_string(const std::string& s) {
    if (s == "healthy") return Group::healthy;
    if (s == "mild") return Group::mild;
    if (s == "moderate") return Group::moderate;
    throw data_error("unknown group '" + s + "' (expected healthy, mild or moderate)");
}

/// One skin sample: a collection of nerve trees observed in a window.
struct NerveSample {
    std::string sample_id;
    std::string subject_id;
    Group group = Group::healthy;
    std::vector<NerveTree> trees;
    Window window;

    NerveSample() : window(default_window()) {}

    NerveSample(std::string sample, std::string subject, Group grp,
                std::vector<NerveTree> trs, Window win)
        : sample_id(std::move(sample)), subject_id(std::move(subject)), group(grp),
          trees(std::move(trs)), window(win) {
        validate();
    }

    void validate() const {
        std::vector<std::int64_t> ids;
        std::vector<Point> bases;
        for (const NerveTree& t : trees) {
            ids.push_back(t.tree_id);
            bases.push_back(t.base);
            if (!window.contains(t.base))
                throw data_error("sample " + sample_id + ": base of tree " +
                                 std::to_string(t.tree_id) + " outside window");
            for (const Point& e : t.ends)
                if (!window.contains(e))
                    throw data_error("sample " + sample_id + ": end point of tree " +
                                     std::to_string(t.tree_id) + " outside window");
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw data_error("sample " + sample_id + ": duplicate tree_id");
        std::sort(bases.begin(), bases.end(), [](const Point& a, const Point& b) {
            return a.x < b.x || (a.x == b.x && a.y < b.y);
        });
        for (std::size_t i = 1; i < bases.size(); ++i)
            if (bases[i] == bases[i - 1])
                throw data_error("sample " + sample_id + ": duplicate base point");
    }

    std::size_t tree_count() const { return trees.size(); }

    std::size_t end_count() const {
        std::size_t n = 0;
        for (const NerveTree& t : trees) n += t.ends.size();
        return n;
    }

    PointPattern base_pattern() const {
        std::vector<Point> pts;
        pts.reserve(trees.size());
        for (const NerveTree& t : trees) pts.push_back(t.base);
        return PointPattern(std::move(pts), window);
    }

    PointPattern end_pattern() const {
        std::vector<Point> pts;
        pts.reserve(end_count());
        for (const NerveTree& t : trees)
            pts.insert(pts.end(), t.ends.begin(), t.ends.end());
        return PointPattern(std::move(pts), window);
    }
};

/// Replicated samples, hierarchically grouped by subject within a group.
struct SampleSet {
    std::vector<NerveSample> samples;

    SampleSet() = default;

    explicit SampleSet(std::vector<NerveSample> smp) : samples(std::move(smp)) {
        std::vector<std::pair<std::string, std::string>> keys;
        for (const NerveSample& s : samples) keys.emplace_back(s.subject_id, s.sample_id);
        std::sort(keys.begin(), keys.end());
        auto dup = std::adjacent_find(keys.begin(), keys.end());
        if (dup != keys.end())
            throw data_error("duplicate (subject_id, sample_id) pair: (" + dup->first + ", " +
                             dup->second + ")");
    }

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    std::vector<std::string> subject_ids() const {
        std::vector<std::string> ids;
        for (const NerveSample& s : samples)
            if (std::find(ids.begin(), ids.end(), s.subject_id) == ids.end())
                ids.push_back(s.subject_id);
        return ids;
    }

    SampleSet group_subset(Group g) const {
        std::vector<NerveSample> out;
        for (const NerveSample& s : samples)
            if (s.group == g) out.push_back(s);
        return SampleSet(std::move(out));
    }

    const NerveSample& by_sample_id(const std::string& id) const {
        for (const NerveSample& s : samples)
            if (s.sample_id == id) return s;
        throw data_error("no sample with id '" + id + "'");
    }
};

enum class CurveKind { K, L_centered, F, markcorr, ecdf };

inline std::string to_string(CurveKind k) {
    switch (k) {
        case CurveKind::K: return "K";
        case CurveKind::L_centered: return "L_centered";
        case CurveKind::F: return "F";
        case CurveKind::markcorr: return "markcorr";
        case CurveKind::ecdf: return "ecdf";
    }
    return "K";
}

/// Function estimate on a fixed grid of distances (or sizes, for ECDFs).
/// Missing values are stored as NaN and skipped when pooling.
struct SummaryCurve {
    std::vector<double> grid;
    std::vector<double> values;
    CurveKind kind = CurveKind::K;
    std::optional<std::string> warning;

    SummaryCurve() = default;

    SummaryCurve(std::vector<double> g, std::vector<double> v, CurveKind k)
        : grid(std::move(g)), values(std::move(v)), kind(k) {
        if (grid.size() != values.size())
            throw data_error("curve grid and value lengths differ");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw data_error("curve grid must be strictly increasing");
    }

    std::size_t size() const { return grid.size(); }

    bool same_grid(const SummaryCurve& other) const {
        return grid == other.grid;
    }
};

inline bool is_missing(double v) { return std::isnan(v); }

inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

/// Evenly spaced grid from lo to hi inclusive (count points).
inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
    if (count < 2 || !(hi > lo)) throw data_error("bad grid specification");
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return g;
}

/// Default distance grid: 0, 1, ..., 100 microns.
inline std::vector<double> default_r_grid() {
    std::vector<double> g(101);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i);
    return g;
}

/// Reproducibility contract: every simulation consumes an explicit base seed.
struct RngSpec {
    std::uint64_t base_seed = 0;
};

} // namespace nervepp

#endif // NERVEPP_PATTERN_HPP
