#include "painpipe/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "painpipe/error.hpp"
#include "painpipe/io_util.hpp"

namespace painpipe::evaluation {

namespace {

std::string number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Colour per bar index.
constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1"};

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "csv") return ReportFormat::csv;
    throw ValidationError("unknown report format '" + name + "' (expected json or csv)");
}

std::string to_csv(const MetricsReport& r) {
    std::ostringstream out;
    out << "model,fold,mae,mse,accuracy\n";
    const std::string model = csv_field(r.model_name);
    for (const auto& f : r.per_fold) {
        out << model << ',' << f.fold_id << ',' << number(f.mae) << ',' << number(f.mse) << ',' << number(f.accuracy)
            << '\n';
    }
    out << model << ",AGGREGATE," << number(r.aggregate.mae) << ',' << number(r.aggregate.mse) << ','
        << number(r.aggregate.accuracy) << '\n';
    return out.str();
}

void emit_report(const MetricsReport& report, ReportFormat format, const std::filesystem::path& path) {
    report.validate();
    write_file_atomic(path, format == ReportFormat::json ? to_json(report).dump(2) + "\n" : to_csv(report));
}

MetricsReport read_report(const std::filesystem::path& path) {
    try {
        return report_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string comparison_svg(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw ValidationError("comparison plot needs at least one report");
    struct Panel {
        const char* key;
        const char* title;
        double (*value)(const Metrics&);
    };
    const Panel panels[] = {
        {"mae", "MAE", [](const Metrics& m) { return m.mae; }},
        {"mse", "MSE", [](const Metrics& m) { return m.mse; }},
        {"accuracy", "Accuracy (%)", [](const Metrics& m) { return m.accuracy; }},
    };
    const int bar_w = 48;
    const int gap = 16;
    const int panel_w = std::max(160, static_cast<int>(reports.size()) * (bar_w + gap) + gap);
    const int panel_h = 260;
    const int top = 50;
    const int plot_h = 180;
    const int width = 3 * panel_w + 4 * 30;
    const int height = top + panel_h + 30 + 24 * static_cast<int>(reports.size());

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << "MAE, MSE and Accuracy comparison</text>\n";
    for (int p = 0; p < 3; ++p) {
        const int x0 = 30 + p * (panel_w + 30);
        double peak = 0.0;
        for (const auto& r : reports) peak = std::max(peak, panels[p].value(r.aggregate));
        const double scale = peak > 0.0 ? plot_h / (peak * 1.15) : 0.0;
        const int base_y = top + 20 + plot_h;
        svg << "<g class=\"panel\" data-metric=\"" << panels[p].key << "\">\n";
        svg << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"" << top << "\" text-anchor=\"middle\" font-size=\"14\">"
            << panels[p].title << "</text>\n";
        svg << "<line x1=\"" << x0 << "\" y1=\"" << base_y << "\" x2=\"" << x0 + panel_w << "\" y2=\"" << base_y
            << "\" stroke=\"black\"/>\n";
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const double v = panels[p].value(reports[i].aggregate);
            const int bx = x0 + gap + static_cast<int>(i) * (bar_w + gap);
            const double bh = v * scale;
            const std::string name = xml_escape(reports[i].model_name);
            svg << "<rect class=\"bar\" data-model=\"" << name << "\" x=\"" << bx << "\" y=\"" << fixed4(base_y - bh)
                << "\" width=\"" << bar_w << "\" height=\"" << fixed4(bh) << "\" fill=\""
                << kPalette[i % std::size(kPalette)] << "\"/>\n";
            svg << "<text class=\"bar-label\" data-model=\"" << name << "\" data-metric=\"" << panels[p].key
                << "\" x=\"" << bx + bar_w / 2 << "\" y=\"" << fixed4(base_y - bh - 4)
                << "\" text-anchor=\"middle\">" << fixed4(v) << "</text>\n";
        }
        svg << "</g>\n";
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const int y = top + panel_h + 10 + 24 * static_cast<int>(i);
        svg << "<rect x=\"30\" y=\"" << y << "\" width=\"14\" height=\"14\" fill=\"" << kPalette[i % std::size(kPalette)]
            << "\"/>\n";
        svg << "<text class=\"legend\" x=\"50\" y=\"" << y + 12 << "\">" << xml_escape(reports[i].model_name)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void emit_comparison_plot(std::span<const MetricsReport> reports, const std::filesystem::path& path) {
    write_file_atomic(path, comparison_svg(reports));
}

}  // namespace painpipe::evaluation
