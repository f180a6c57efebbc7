#include "pacrr/introspection.hpp"

#include <cstdio>
#include <string>

namespace pacrr {

namespace {

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            case '\'':
                out += "&#39;";
                break;
            default:
                out.push_back(c);
        }
    }
    return out;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string render_html(std::span<const MarkupReport> reports) {
    std::string html =
        "<!DOCTYPE html>\n"
        "<html lang=\"en\">\n"
        "<head>\n"
        "<meta charset=\"utf-8\">\n"
        "<title>Signal markup</title>\n"
        "<style>\n"
        "body { font-family: Georgia, serif; max-width: 50em; margin: 2em auto; line-height: 1.7; color: #000; }\n"
        "h2 { font: bold 0.9em sans-serif; margin-bottom: 0.3em; }\n"
        "p.doc span { padding: 0 0.1em; }\n"
        "</style>\n"
        "</head>\n"
        "<body>\n";
    for (const auto& r : reports) {
        html += "<section class=\"report\" data-doc=\"" + escape(r.doc_id) + "\" data-kernel=\"" +
                std::to_string(r.kernel_size) + "\" data-stage=\"" + std::string(stage_name(r.stage)) +
                "\" data-normalizer=\"" + exact(r.normalizer) + "\">\n";
        html += "<h2>" + escape(r.doc_id) + " | " + std::to_string(r.kernel_size) + "x" +
                std::to_string(r.kernel_size) + " kernel | " + std::string(stage_name(r.stage)) + "</h2>\n";
        html += "<p class=\"doc\">";
        for (std::size_t j = 0; j < r.tokens.size(); ++j) {
            if (j > 0) html += ' ';
            const double o = j < r.opacities.size() ? r.opacities[j] : 0.0;
            html += "<span style=\"opacity:" + fixed(o, 2) + "\">" + escape(r.tokens[j]) + "</span>";
        }
        html += "</p>\n</section>\n";
    }
    html += "</body>\n</html>\n";
    return html;
}

std::string render_curves_csv(std::span<const BinnedCurve> curves) {
    std::string csv = "kernel,position,bin_index,signal_low,signal_high,median_score,count\n";
    for (const auto& c : curves) {
        for (std::size_t b = 0; b < c.bins.size(); ++b) {
            const auto& bin = c.bins[b];
            csv += std::to_string(c.kernel_size) + ',' + std::to_string(c.position) + ',' + std::to_string(b) + ',' +
                   exact(bin.signal_low) + ',' + exact(bin.signal_high) + ',' + exact(bin.median_score) + ',' +
                   std::to_string(bin.count) + '\n';
        }
    }
    return csv;
}

std::string render_grid_svg(const SignalGrid& grid) {
    constexpr double kCellW = 80.0;
    constexpr double kCellH = 50.0;
    constexpr double kLeft = 60.0;
    constexpr double kTop = 30.0;
    constexpr double kGap = 6.0;
    const std::size_t terms = grid.query_terms.size();
    const double width = kLeft + kCellW * static_cast<double>(terms) + kGap;
    const double height = kTop + kCellH * static_cast<double>(grid.kernel_count) + kGap;

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
           fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    for (std::size_t i = 0; i < terms; ++i) {
        const double x = kLeft + kCellW * static_cast<double>(i) + kCellW / 2.0;
        svg += "<text x=\"" + fixed(x, 2) + "\" y=\"18\" text-anchor=\"middle\">" + escape(grid.query_terms[i]) +
               "</text>\n";
    }
    for (std::size_t l = 1; l <= grid.kernel_count; ++l) {
        const double y = kTop + kCellH * static_cast<double>(l - 1) + kCellH / 2.0;
        svg += "<text x=\"" + fixed(kLeft - 8.0, 2) + "\" y=\"" + fixed(y, 2) + "\" text-anchor=\"end\">" +
               std::to_string(l) + "x" + std::to_string(l) + "</text>\n";
    }
    const double inner_w = kCellW - kGap;
    const double inner_h = kCellH - kGap;
    const double bar_w = grid.n_s > 0 ? inner_w / static_cast<double>(grid.n_s) : 0.0;
    for (std::size_t i = 0; i < terms; ++i) {
        for (std::size_t l = 1; l <= grid.kernel_count; ++l) {
            const double x0 = kLeft + kCellW * static_cast<double>(i) + kGap / 2.0;
            const double y0 = kTop + kCellH * static_cast<double>(l - 1) + kGap / 2.0;
            svg += "<g class=\"cell\" data-term=\"" + escape(grid.query_terms[i]) + "\" data-kernel=\"" +
                   std::to_string(l) + "\">\n";
            svg += "<rect x=\"" + fixed(x0, 2) + "\" y=\"" + fixed(y0, 2) + "\" width=\"" + fixed(inner_w, 2) +
                   "\" height=\"" + fixed(inner_h, 2) + "\" fill=\"#f4f4f4\" stroke=\"#cccccc\"/>\n";
            for (std::size_t s = 0; s < grid.n_s; ++s) {
                const double v = grid.at(i, l, s);
                const double h = inner_h * v;
                svg += "<rect class=\"bar\" x=\"" + fixed(x0 + bar_w * static_cast<double>(s), 2) + "\" y=\"" +
                       fixed(y0 + inner_h - h, 2) + "\" width=\"" + fixed(bar_w * 0.8, 2) + "\" height=\"" +
                       fixed(h, 2) + "\" fill=\"#2b5c8a\" data-value=\"" + exact(v) + "\"/>\n";
            }
            svg += "</g>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace pacrr
