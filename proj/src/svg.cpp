#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "reprbench/errors.hpp"
#include "reprbench/format.hpp"
#include "reprbench/report.hpp"

namespace reprbench {

namespace {

constexpr double kWidth = 680.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 170.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 56.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Frame {
    double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
};

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "  <text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << xml_escape(title) << "</text>\n";
}

void legend(std::ostringstream& out, const std::vector<std::string>& names) {
    const Frame f;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = f.y1 + 16.0 + 20.0 * static_cast<double>(i);
        out << "  <rect x=\"" << num(f.x1 + 16) << "\" y=\"" << num(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
            << color(i) << "\"/>\n"
            << "  <text x=\"" << num(f.x1 + 34) << "\" y=\"" << num(y + 1) << "\">" << xml_escape(names[i])
            << "</text>\n";
    }
}

void y_axis(std::ostringstream& out, double lo, double hi, const std::string& label,
            const std::function<double(double)>& to_y) {
    const Frame f;
    out << "  <line x1=\"" << num(f.x0) << "\" y1=\"" << num(f.y0) << "\" x2=\"" << num(f.x0) << "\" y2=\""
        << num(f.y1) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = lo + (hi - lo) * i / 5.0;
        const double y = to_y(v);
        out << "  <line x1=\"" << num(f.x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(f.x0) << "\" y2=\""
            << num(y) << "\" stroke=\"black\"/>\n"
            << "  <text x=\"" << num(f.x0 - 7) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << num(v)
            << "</text>\n";
    }
    out << "  <text transform=\"translate(16," << num((f.y0 + f.y1) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << xml_escape(label) << "</text>\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
}

std::string file_stem(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

}  // namespace

std::string render_curve_svg(const std::string& title, const std::vector<EfficiencyCurve>& curves) {
    if (curves.empty()) throw ValidationError("plot: no curves");
    double n_min = std::numeric_limits<double>::infinity();
    double n_max = 0.0;
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            n_min = std::min(n_min, static_cast<double>(p.n_per_class));
            n_max = std::max(n_max, static_cast<double>(p.n_per_class));
        }
    double lx0 = std::log10(n_min);
    double lx1 = std::log10(n_max);
    if (lx1 - lx0 < 1e-9) {
        lx0 -= 0.5;
        lx1 += 0.5;
    }
    const Frame f;
    const auto to_x = [&](double n) { return f.x0 + (std::log10(n) - lx0) / (lx1 - lx0) * (f.x1 - f.x0); };
    const auto to_y = [&](double s) { return f.y0 - std::clamp(s, 0.0, 1.0) * (f.y0 - f.y1); };

    std::ostringstream out;
    open_svg(out, title);
    y_axis(out, 0.0, 1.0, "macro F1", to_y);
    out << "  <line x1=\"" << num(f.x0) << "\" y1=\"" << num(f.y0) << "\" x2=\"" << num(f.x1) << "\" y2=\""
        << num(f.y0) << "\" stroke=\"black\"/>\n";
    std::set<std::size_t> ticks;
    for (const auto& c : curves)
        for (const auto& p : c.points) ticks.insert(p.n_per_class);
    for (std::size_t n : ticks) {
        const double x = to_x(static_cast<double>(n));
        out << "  <line x1=\"" << num(x) << "\" y1=\"" << num(f.y0) << "\" x2=\"" << num(x) << "\" y2=\""
            << num(f.y0 + 4) << "\" stroke=\"black\"/>\n"
            << "  <text x=\"" << num(x) << "\" y=\"" << num(f.y0 + 17) << "\" text-anchor=\"middle\">" << n
            << "</text>\n";
    }
    out << "  <text x=\"" << num((f.x0 + f.x1) / 2) << "\" y=\"" << num(kHeight - 14)
        << "\" text-anchor=\"middle\">labels per class (log scale)</text>\n";

    std::vector<std::string> names;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        names.push_back(c.model.empty() ? "curve " + std::to_string(i) : c.model);
        out << "  <g class=\"curve\" data-model=\"" << xml_escape(names.back()) << "\">\n";
        for (const auto& p : c.points) {
            out << "    <!-- data: n_per_class=" << p.n_per_class << " mean=" << format_real(p.mean)
                << " stderr=" << format_real(p.standard_error) << " repeats=" << p.repeats << " -->\n";
        }
        if (c.points.size() > 1) {
            std::string band = "M";
            for (std::size_t j = 0; j < c.points.size(); ++j) {
                const auto& p = c.points[j];
                band += (j ? " L" : "") + num(to_x(static_cast<double>(p.n_per_class))) + "," +
                        num(to_y(p.mean + p.standard_error));
            }
            for (std::size_t j = c.points.size(); j-- > 0;) {
                const auto& p = c.points[j];
                band += " L" + num(to_x(static_cast<double>(p.n_per_class))) + "," +
                        num(to_y(p.mean - p.standard_error));
            }
            out << "    <path class=\"band\" d=\"" << band << " Z\" fill=\"" << color(i)
                << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
            std::string line;
            for (const auto& p : c.points)
                line += num(to_x(static_cast<double>(p.n_per_class))) + "," + num(to_y(p.mean)) + " ";
            line.pop_back();
            out << "    <polyline class=\"line\" points=\"" << line << "\" fill=\"none\" stroke=\"" << color(i)
                << "\" stroke-width=\"2\"/>\n";
        }
        for (const auto& p : c.points) {
            out << "    <circle class=\"marker\" cx=\"" << num(to_x(static_cast<double>(p.n_per_class)))
                << "\" cy=\"" << num(to_y(p.mean)) << "\" r=\"3.5\" fill=\"" << color(i) << "\"/>\n";
        }
        out << "  </g>\n";
    }
    legend(out, names);
    out << "</svg>\n";
    return out.str();
}

std::string render_utility_svg(const std::string& title, const std::vector<UtilityRow>& rows) {
    if (rows.empty()) throw ValidationError("plot: no utility rows");
    std::set<double> grid;
    double lo = 0.0;
    double hi = 1.0;
    for (const auto& r : rows)
        for (const auto& p : r.result.per_n) {
            grid.insert(p.n);
            if (std::isfinite(p.utility)) {
                lo = std::min(lo, p.utility);
                hi = std::max(hi, p.utility);
            }
        }
    hi *= 1.2;  // headroom; INFINITE bars are capped here
    const Frame f;
    const auto to_y = [&](double u) { return f.y0 - (std::clamp(u, lo, hi) - lo) / (hi - lo) * (f.y0 - f.y1); };
    const std::vector<double> categories(grid.begin(), grid.end());
    const double slot = (f.x1 - f.x0) / static_cast<double>(categories.size());
    const double bar = 0.8 * slot / static_cast<double>(rows.size());

    std::ostringstream out;
    open_svg(out, title);
    out << "  <defs>\n"
        << "    <pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
           "patternTransform=\"rotate(45)\">\n"
        << "      <line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"black\" stroke-width=\"2\"/>\n"
        << "    </pattern>\n"
        << "  </defs>\n";
    y_axis(out, lo, hi, "utility", to_y);
    out << "  <line class=\"zero\" x1=\"" << num(f.x0) << "\" y1=\"" << num(to_y(0.0)) << "\" x2=\"" << num(f.x1)
        << "\" y2=\"" << num(to_y(0.0)) << "\" stroke=\"black\"/>\n";
    for (std::size_t c = 0; c < categories.size(); ++c) {
        out << "  <text x=\"" << num(f.x0 + slot * (static_cast<double>(c) + 0.5)) << "\" y=\"" << num(f.y0 + 17)
            << "\" text-anchor=\"middle\">" << format_real(categories[c]) << "</text>\n";
    }
    out << "  <text x=\"" << num((f.x0 + f.x1) / 2) << "\" y=\"" << num(kHeight - 14)
        << "\" text-anchor=\"middle\">labels per class</text>\n";

    std::vector<std::string> names;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        names.push_back(r.model + " vs " + r.baseline);
        out << "  <g class=\"utility\" data-model=\"" << xml_escape(r.model) << "\">\n";
        for (const auto& p : r.result.per_n) {
            out << "    <!-- data: n=" << format_real(p.n) << " target=" << format_real(p.target)
                << " needed=" << format_real(p.needed) << " utility=" << format_real(p.utility) << " -->\n";
            const auto c = static_cast<double>(std::lower_bound(categories.begin(), categories.end(), p.n) -
                                               categories.begin());
            const double x = f.x0 + slot * c + 0.1 * slot + bar * static_cast<double>(i);
            const double base = to_y(0.0);
            if (std::isinf(p.utility)) {
                const double top = to_y(hi);
                out << "    <rect class=\"infinite\" x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\""
                    << num(bar) << "\" height=\"" << num(base - top) << "\" fill=\"url(#hatch)\" stroke=\""
                    << color(i) << "\"/>\n"
                    << "    <line class=\"cap\" x1=\"" << num(x) << "\" y1=\"" << num(top) << "\" x2=\""
                    << num(x + bar) << "\" y2=\"" << num(top) << "\" stroke=\"" << color(i)
                    << "\" stroke-width=\"3\"/>\n"
                    << "    <text x=\"" << num(x + bar / 2) << "\" y=\"" << num(top - 4)
                    << "\" text-anchor=\"middle\">∞</text>\n";
            } else {
                const double y = to_y(p.utility);
                out << "    <rect class=\"bar\" x=\"" << num(x) << "\" y=\"" << num(std::min(y, base))
                    << "\" width=\"" << num(bar) << "\" height=\"" << num(std::abs(base - y)) << "\" fill=\""
                    << color(i) << "\"/>\n";
            }
        }
        out << "  </g>\n";
    }
    legend(out, names);
    out << "</svg>\n";
    return out.str();
}

std::vector<std::filesystem::path> emit_plots(const std::vector<EfficiencyCurve>& curves,
                                              const std::vector<UtilityRow>& utilities,
                                              const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    std::map<std::pair<std::string, ClassifierKind>, std::vector<EfficiencyCurve>> curve_groups;
    for (const auto& c : curves) curve_groups[{c.task, c.classifier_kind}].push_back(c);
    for (const auto& [key, group] : curve_groups) {
        const auto path = out_dir / (file_stem(key.first) + "__fewshot_" + std::string(to_string(key.second)) + ".svg");
        write_file(path, render_curve_svg(key.first + " (" + std::string(to_string(key.second)) + ")", group));
        written.push_back(path);
    }

    std::map<std::pair<std::string, ClassifierKind>, std::vector<UtilityRow>> utility_groups;
    for (const auto& u : utilities) utility_groups[{u.task, u.kind}].push_back(u);
    for (const auto& [key, group] : utility_groups) {
        const auto path = out_dir / (file_stem(key.first) + "__utility_" + std::string(to_string(key.second)) + ".svg");
        write_file(path, render_utility_svg(key.first + " utility (" + std::string(to_string(key.second)) + ")", group));
        written.push_back(path);
    }
    return written;
}

}  // namespace reprbench
