#include "csb/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace csb {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

template <class T>
T parse_number(const std::string& text, std::size_t line_no) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw std::runtime_error("aggregate csv line " + std::to_string(line_no) + ": bad number '" + text + "'");
    }
    return value;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

std::vector<RegretCurve> read_aggregate_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("aggregate csv: empty input");
    const auto header = split_fields(line);
    if (header.size() < 3 || header[0] != "policy" || header[1] != "t" || header[2] != "mean") {
        throw std::runtime_error("aggregate csv: header must start with policy,t,mean");
    }
    std::vector<RegretCurve> curves;
    std::map<std::string, std::size_t> index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_fields(line);
        if (f.size() != header.size()) {
            throw std::runtime_error("aggregate csv line " + std::to_string(line_no) + ": wrong field count");
        }
        auto [it, fresh] = index.emplace(f[0], curves.size());
        if (fresh) curves.push_back({f[0], {}, {}});
        auto& c = curves[it->second];
        const int t = parse_number<int>(f[1], line_no);
        const double mean = parse_number<double>(f[2], line_no);
        if (!c.t.empty() && t <= c.t.back()) {
            throw std::runtime_error("aggregate csv line " + std::to_string(line_no) + ": rounds not increasing");
        }
        if (!std::isfinite(mean)) throw std::runtime_error("aggregate csv line " + std::to_string(line_no) + ": non-finite mean");
        c.t.push_back(t);
        c.mean.push_back(mean);
    }
    if (curves.empty()) throw std::runtime_error("aggregate csv: no data rows");
    return curves;
}

std::string render_regret_svg(const std::vector<RegretCurve>& curves, const PlotMarkers& markers,
                              std::size_t max_points) {
    int t_max = 1;
    double y_max = 0.0;
    for (const auto& c : curves) {
        if (!c.t.empty()) t_max = std::max(t_max, c.t.back());
        for (double v : c.mean) y_max = std::max(y_max, v);
    }
    if (y_max <= 0.0) y_max = 1.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double t) { return kLeft + plot_w * t / t_max; };
    auto py = [&](double v) { return kTop + plot_h * (1.0 - v / y_max); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";

    // Axes and ticks.
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
       << kTop + plot_h << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = t_max * i / 5.0;
        const double v = y_max * i / 5.0;
        os << "<text x=\"" << fmt(px(t)) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
           << fmt(std::round(t)) << "</text>\n";
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(py(v) + 4) << "\" text-anchor=\"end\">" << fmt(v)
           << "</text>\n";
    }
    os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">round</text>\n";
    os << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << kTop + plot_h / 2 << ")\">cumulative expected regret</text>\n";

    for (int t : markers.dist_changes) {
        os << "<line class=\"dist-change\" x1=\"" << fmt(px(t)) << "\" y1=\"" << kTop << "\" x2=\"" << fmt(px(t))
           << "\" y2=\"" << kTop + plot_h << "\" stroke=\"green\" stroke-width=\"1\"/>\n";
    }
    for (int t : markers.graph_changes) {
        os << "<line class=\"graph-change\" x1=\"" << fmt(px(t)) << "\" y1=\"" << kTop << "\" x2=\"" << fmt(px(t))
           << "\" y2=\"" << kTop + plot_h << "\" stroke=\"red\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
    }

    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const char* color = kPalette[k % std::size(kPalette)];
        const std::size_t n = c.t.size();
        const std::size_t step = max_points > 1 && n > max_points ? (n + max_points - 2) / (max_points - 1) : 1;
        os << "<polyline class=\"curve\" data-policy=\"" << c.policy << "\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < n; i += step) os << fmt(px(c.t[i])) << ',' << fmt(py(c.mean[i])) << ' ';
        if (n > 0 && (n - 1) % step != 0) os << fmt(px(c.t[n - 1])) << ',' << fmt(py(c.mean[n - 1]));
        os << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << kWidth - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 40
           << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kWidth - kRight + 46 << "\" y=\"" << ly + 4 << "\">" << c.policy << "</text>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

}  // namespace csb
