#ifndef NERVEPP_IO_HPP
#define NERVEPP_IO_HPP

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nervepp/errors.hpp"
#include "nervepp/pattern.hpp"

namespace nervepp {

/// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double_field(const std::string& s, const std::string& what, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw data_error("line " + std::to_string(line_no) + ": bad " + what + " value '" + s + "'");
    return v;
}

inline std::int64_t parse_int_field(const std::string& s, const std::string& what, std::size_t line_no) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size())
        throw data_error("line " + std::to_string(line_no) + ": bad " + what + " value '" + s + "'");
    return v;
}

// Full-range uint64 (strtoll would saturate RNG seeds above INT64_MAX).
inline std::uint64_t parse_uint_field(const std::string& s, const std::string& what,
                                      std::size_t line_no) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || s[0] == '-' || end != s.c_str() + s.size())
        throw data_error("line " + std::to_string(line_no) + ": bad " + what + " value '" + s + "'");
    return v;
}

inline Window window_from_json(const nlohmann::json& j) {
    const auto& w = j.at("window");
    return Window(w.at("xmin").get<double>(), w.at("ymin").get<double>(),
                  w.at("xmax").get<double>(), w.at("ymax").get<double>());
}

inline nlohmann::json window_to_json(const Window& w) {
    return nlohmann::json{{"window",
            {{"xmin", w.xmin}, {"ymin", w.ymin}, {"xmax", w.xmax}, {"ymax", w.ymax}}}};
}

inline Window load_window(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open window file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        return window_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad window JSON in " + path + ": " + e.what());
    }
}

inline void save_window(const Window& w, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write window file: " + path);
    out << window_to_json(w).dump(2) << "\n";
}

/// Sidecar path for a pattern CSV: foo.csv -> foo.window.json
inline std::string window_sidecar_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".window.json");
    return p.string();
}

namespace detail {

struct TreeRows {
    std::optional<Point> base;
    std::vector<Point> ends;
    std::size_t first_line = 0;
};

} // namespace detail

/// Reads a pattern CSV (header: subject_id,sample_id,group,tree_id,point_type,x,y).
/// The window comes from `window` if given, then from the sidecar JSON, then the
/// default biopsy window.
inline SampleSet load_sample_set(const std::string& path,
                                 std::optional<Window> window = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open pattern file: " + path);

    Window win = default_window();
    if (window) {
        win = *window;
    } else {
        const std::string sidecar = window_sidecar_path(path);
        if (std::filesystem::exists(sidecar)) win = load_window(sidecar);
    }

    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty file (header expected)");
    {
        const auto header = split_csv_line(line);
        const std::vector<std::string> expected = {"subject_id", "sample_id", "group",
                                                   "tree_id",    "point_type", "x", "y"};
        if (header != expected)
            throw data_error(path + ": bad header, expected subject_id,sample_id,group,"
                             "tree_id,point_type,x,y");
    }

    // sample key -> (tree_id -> rows), insertion order preserved
    using SampleKey = std::pair<std::string, std::string>; // subject, sample
    std::vector<std::pair<SampleKey, Group>> order;
    std::map<SampleKey, std::map<std::int64_t, detail::TreeRows>> rows;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7)
            throw data_error(path + " line " + std::to_string(line_no) + ": expected 7 fields, got " +
                             std::to_string(f.size()));
        const SampleKey key{f[0], f[1]};
        const Group grp = group_from_string(f[2]);
        const std::int64_t tree_id = parse_int_field(f[3], "tree_id", line_no);
        const std::string& type = f[4];
        const Point p{parse_double_field(f[5], "x", line_no), parse_double_field(f[6], "y", line_no)};

        if (!win.contains(p))
            throw data_error(path + " line " + std::to_string(line_no) + ": point (" + f[5] + ", " +
                             f[6] + ") outside window [" + std::to_string(win.xmin) + ", " +
                             std::to_string(win.xmax) + "] x [" + std::to_string(win.ymin) + ", " +
                             std::to_string(win.ymax) + "]");

        if (rows.find(key) == rows.end()) order.emplace_back(key, grp);
        auto& tree = rows[key][tree_id];
        if (tree.first_line == 0) tree.first_line = line_no;
        if (type == "base") {
            if (tree.base)
                throw data_error(path + " line " + std::to_string(line_no) + ": second base row for tree " +
                                 std::to_string(tree_id) + " in sample " + f[1]);
            tree.base = p;
        } else if (type == "end") {
            tree.ends.push_back(p);
        } else if (type == "branch") {
            throw data_error(path + " line " + std::to_string(line_no) +
                             ": branch points are not supported");
        } else {
            throw data_error(path + " line " + std::to_string(line_no) + ": unknown point_type '" +
                             type + "'");
        }
    }

    std::vector<NerveSample> samples;
    for (const auto& [key, grp] : order) {
        std::vector<NerveTree> trees;
        for (const auto& [tree_id, tr] : rows[key]) {
            if (!tr.base)
                throw data_error(path + ": tree " + std::to_string(tree_id) + " in sample " +
                                 key.second + " has no base row (first row at line " +
                                 std::to_string(tr.first_line) + ")");
            trees.push_back(NerveTree{tree_id, *tr.base, tr.ends});
        }
        samples.emplace_back(key.second, key.first, grp, std::move(trees), win);
    }
    return SampleSet(std::move(samples));
}

/// Writes a SampleSet as a pattern CSV plus a window sidecar JSON.
/// Coordinates round-trip bit-exactly through load_sample_set.
inline void save_sample_set(const SampleSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write pattern file: " + path);
    out << "subject_id,sample_id,group,tree_id,point_type,x,y\n";
    for (const NerveSample& s : set.samples) {
        for (const NerveTree& t : s.trees) {
            out << s.subject_id << ',' << s.sample_id << ',' << to_string(s.group) << ','
                << t.tree_id << ",base," << format_double(t.base.x) << ','
                << format_double(t.base.y) << '\n';
            for (const Point& e : t.ends)
                out << s.subject_id << ',' << s.sample_id << ',' << to_string(s.group) << ','
                    << t.tree_id << ",end," << format_double(e.x) << ',' << format_double(e.y)
                    << '\n';
        }
    }
    if (!set.samples.empty())
        save_window(set.samples.front().window, window_sidecar_path(path));
}

/// Loads every *.csv in a directory as one combined SampleSet.
inline SampleSet load_sample_dir(const std::string& dir,
                                 std::optional<Window> window = std::nullopt) {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw data_error("no .csv pattern files in " + dir);
    std::vector<NerveSample> all;
    for (const std::string& f : files) {
        SampleSet part = load_sample_set(f, window);
        all.insert(all.end(), part.samples.begin(), part.samples.end());
    }
    return SampleSet(std::move(all));
}

/// Curve CSV: header r,value; missing values serialized as an empty field.
inline void save_curve(const SummaryCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write curve file: " + path);
    out << "r,value\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        out << format_double(curve.grid[i]) << ',' << format_double(curve.values[i]) << '\n';
}

inline SummaryCurve load_curve(const std::string& path, CurveKind kind) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open curve file: " + path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"r", "value"})
        throw data_error(path + ": bad curve header, expected r,value");
    std::vector<double> grid, values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 2)
            throw data_error(path + " line " + std::to_string(line_no) + ": expected 2 fields");
        grid.push_back(parse_double_field(f[0], "r", line_no));
        values.push_back(f[1].empty() ? missing_value() : parse_double_field(f[1], "value", line_no));
    }
    return SummaryCurve(std::move(grid), std::move(values), kind);
}

} // namespace nervepp

#endif // NERVEPP_IO_HPP
