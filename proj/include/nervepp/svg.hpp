#ifndef NERVEPP_SVG_HPP
#define NERVEPP_SVG_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nervepp/envelopes.hpp"
#include "nervepp/errors.hpp"
#include "nervepp/pattern.hpp"

namespace nervepp {

namespace detail {

inline void svg_polyline(std::ostringstream& out, const std::vector<double>& xs,
                         const std::vector<double>& ys, const std::string& stroke,
                         const std::string& dash, double width) {
    out << "  <polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width
        << "\"";
    if (!dash.empty()) out << " stroke-dasharray=\"" << dash << "\"";
    out << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (is_missing(ys[i])) continue;
        if (!first) out << ' ';
        out << xs[i] << ',' << ys[i];
        first = false;
    }
    out << "\"/>\n";
}

} // namespace detail

/// Minimal self-contained figure of an envelope: four polyline layers (lower
/// bound, upper bound, observed curve, zero reference line) in a fixed
/// 640x400 viewport. Numeric CSVs remain the authoritative output; this is a
/// quick look, not a plotting system.
inline std::string envelope_svg(const Envelope& env, const std::string& title = "") {
    const double W = 640.0, H = 400.0, ml = 50.0, mr = 15.0, mt = 30.0, mb = 35.0;
    double xmin = env.grid.front(), xmax = env.grid.back();
    double ymin = 0.0, ymax = 0.0;
    bool any = false;
    auto widen = [&](double v) {
        if (is_missing(v)) return;
        if (!any) { ymin = ymax = v; any = true; return; }
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    };
    for (std::size_t k = 0; k < env.grid.size(); ++k) {
        widen(env.lo[k]);
        widen(env.hi[k]);
        if (env.observed) widen(env.observed->values[k]);
    }
    widen(0.0); // keep the zero line in view
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ostringstream out;
    out.precision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
        << "\" fill=\"white\"/>\n";
    if (!title.empty())
        out << "  <text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

    std::vector<double> xs(env.grid.size());
    for (std::size_t k = 0; k < env.grid.size(); ++k) xs[k] = X(env.grid[k]);
    auto mapped = [&](const std::vector<double>& raw) {
        std::vector<double> out_y(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k)
            out_y[k] = is_missing(raw[k]) ? missing_value() : Y(raw[k]);
        return out_y;
    };

    detail::svg_polyline(out, xs, mapped(env.lo), "#777777", "", 1.2);
    detail::svg_polyline(out, xs, mapped(env.hi), "#777777", "", 1.2);
    std::vector<double> observed(env.grid.size(), missing_value());
    if (env.observed) observed = env.observed->values;
    detail::svg_polyline(out, xs, mapped(observed), "#cc3333", "", 1.8);
    const std::vector<double> zero{Y(0.0), Y(0.0)};
    detail::svg_polyline(out, std::vector<double>{X(xmin), X(xmax)}, zero, "#bbbbbb", "4,4", 1.0);

    out << "  <line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << ml << "\" y=\"" << H - mb + 18
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xmin << "</text>\n";
    out << "  <text x=\"" << W - mr << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"end\" "
        << "font-family=\"sans-serif\" font-size=\"11\">" << xmax << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

inline void save_envelope_svg(const std::string& path, const Envelope& env,
                              const std::string& title = "") {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << envelope_svg(env, title);
}

} // namespace nervepp

#endif // NERVEPP_SVG_HPP
