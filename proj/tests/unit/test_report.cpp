#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "reprbench/report.hpp"

using namespace reprbench;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

// Minimal XML well-formedness: balanced, properly nested elements, quoted
// attributes, closed comments.
bool well_formed(const std::string& xml) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    bool saw_root = false;
    while ((i = xml.find('<', i)) != std::string::npos) {
        if (xml.compare(i, 4, "<!--") == 0) {
            const auto end = xml.find("-->", i + 4);
            if (end == std::string::npos) return false;
            if (xml.substr(i + 4, end - i - 4).find("--") != std::string::npos) return false;
            i = end + 3;
            continue;
        }
        if (xml.compare(i, 2, "<?") == 0) {
            const auto end = xml.find("?>", i);
            if (end == std::string::npos) return false;
            i = end + 2;
            continue;
        }
        std::size_t j = i + 1;
        bool in_quote = false;
        while (j < xml.size() && (in_quote || xml[j] != '>')) {
            if (xml[j] == '"') in_quote = !in_quote;
            if (!in_quote && xml[j] == '<') return false;
            ++j;
        }
        if (j >= xml.size()) return false;
        std::string tag = xml.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.empty()) return false;
        if (tag[0] == '/') {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        const std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
        if (stack.empty()) {
            if (saw_root) return false;
            saw_root = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    return saw_root && stack.empty();
}

EfficiencyCurve make_curve(std::string model, std::vector<std::pair<std::size_t, double>> pts) {
    EfficiencyCurve c;
    c.task = "derm <A&B>";
    c.model = std::move(model);
    c.test_fingerprint = "fp";
    for (auto [n, m] : pts) {
        CurvePoint p;
        p.n_per_class = n;
        p.mean = m;
        p.standard_error = 0.02;
        p.repeats = 5;
        c.points.push_back(p);
    }
    return c;
}

ScoreSummary s(double mean, double std) {
    ScoreSummary out;
    out.mean = mean;
    out.std = std;
    return out;
}

}  // namespace

TEST_CASE("cell formatting") {
    CHECK(format_cell(s(0.845, 0.029)) == "84.5 ± 2.9");
    CHECK(format_cell(s(1.0, 0.0)) == "100.0 ± 0.0");
    CHECK(format_cell(s(0.6455, 0.0005)) == "64.6 ± 0.1");
    CHECK(format_cell(s(0.845, 0.029), true) == "84.5 ± 2.9*");
}

TEST_CASE("the checker itself rejects malformed markup") {
    CHECK(well_formed("<a><b/></a>"));
    CHECK_FALSE(well_formed("<a><b></a>"));
    CHECK_FALSE(well_formed("<a>"));
    CHECK_FALSE(well_formed("<a><!-- x -- y --></a>"));
}

TEST_CASE("curve SVG") {
    SUBCASE("single-point curve has one marker and no band") {
        const auto svg = render_curve_svg("one", {make_curve("m", {{5, 0.6}})});
        CHECK(well_formed(svg));
        CHECK(count(svg, "class=\"marker\"") == 1);
        CHECK(count(svg, "class=\"band\"") == 0);
    }
    SUBCASE("multi-point curves get a band each and escape text") {
        const auto svg = render_curve_svg("t <&>", {make_curve("a&b", {{1, 0.4}, {2, 0.5}, {5, 0.6}}),
                                                    make_curve("c", {{1, 0.3}, {2, 0.35}, {5, 0.5}})});
        CHECK(well_formed(svg));
        CHECK(count(svg, "class=\"band\"") == 2);
        CHECK(count(svg, "class=\"marker\"") == 6);
        CHECK(svg.find("a&amp;b") != std::string::npos);
        CHECK(svg.find("data: n_per_class=2") != std::string::npos);
    }
}

TEST_CASE("utility SVG draws INFINITE entries as hatched capped bars") {
    UtilityRow row;
    row.task = "t";
    row.model = "strong";
    row.baseline = "weak";
    row.result = utility_score(make_curve("strong", {{1, 0.5}, {2, 0.9}}), make_curve("weak", {{1, 0.4}, {2, 0.6}}));
    REQUIRE(row.result.infinite_count == 1);
    const auto svg = render_utility_svg("u", {row});
    CHECK(well_formed(svg));
    CHECK(count(svg, "class=\"infinite\"") == 1);
    CHECK(count(svg, "class=\"cap\"") == 1);
    CHECK(count(svg, "class=\"bar\"") == 1);
    CHECK(svg.find("fill=\"url(#hatch)\"") != std::string::npos);
}

TEST_CASE("best marking and tables") {
    EvalReport r;
    r.tasks = {"t"};
    r.models = {"a", "b"};
    r.cells = {{"t", ClassifierKind::linear, "a", s(0.8, 0.01), false, false},
               {"t", ClassifierKind::linear, "b", s(0.7, 0.01), false, false},
               {"t", ClassifierKind::knn, "a", s(0.6, 0.01), false, false},
               {"t", ClassifierKind::knn, "b", s(0.6, 0.02), false, false}};
    mark_best(r.cells);
    CHECK(r.cells[0].best);
    CHECK_FALSE(r.cells[1].best);
    CHECK(r.cells[2].best);
    CHECK(r.cells[3].best);
    r.cells[0].starred = true;

    std::ostringstream md;
    write_report_markdown(r, md);
    CHECK(md.str().find("**80.0 ± 1.0***") != std::string::npos);
    std::ostringstream csv;
    write_report_csv(r, csv);
    CHECK(csv.str().find("t,linear,a") != std::string::npos);

    r.provenance.started_at = "x";
    const auto body = report_to_json(r, true);
    r.provenance.started_at = "y";
    CHECK(report_to_json(r, true) == body);
    CHECK(report_to_json(r).find("\"provenance\"") != std::string::npos);
    CHECK(r.find("t", ClassifierKind::knn, "b") == &r.cells[3]);
}

TEST_CASE("emit_plots writes one file per task and figure") {
    const auto dir = std::filesystem::temp_directory_path() / "reprbench_plot_test";
    std::filesystem::remove_all(dir);
    const auto curves = std::vector<EfficiencyCurve>{make_curve("a", {{1, 0.4}, {2, 0.5}}),
                                                     make_curve("b", {{1, 0.3}, {2, 0.45}})};
    UtilityRow row;
    row.task = curves[0].task;
    row.model = "a";
    row.baseline = "b";
    row.result = utility_score(curves[0], curves[1]);
    const auto paths = emit_plots(curves, {row}, dir);
    CHECK(paths.size() == 2);
    for (const auto& p : paths) {
        REQUIRE(std::filesystem::exists(p));
        std::ifstream in(p);
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(well_formed(buf.str()));
    }
}
