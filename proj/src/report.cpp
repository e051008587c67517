#include "lmkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace lmkit::report {

double co2_kg(double energy_kwh, const CarbonConfig& cfg) {
    if (energy_kwh < 0.0) throw std::invalid_argument("carbon: negative energy");
    if (cfg.pue < 1.0) throw std::invalid_argument("carbon: PUE below 1");
    if (cfg.intensity_g_per_kwh < 0.0) throw std::invalid_argument("carbon: negative intensity");
    return energy_kwh * cfg.pue * cfg.intensity_g_per_kwh / 1000.0;
}

double energy_kwh_from_co2(double co2, const CarbonConfig& cfg) {
    if (co2 < 0.0) throw std::invalid_argument("carbon: negative footprint");
    if (cfg.pue < 1.0) throw std::invalid_argument("carbon: PUE below 1");
    if (cfg.intensity_g_per_kwh <= 0.0) throw std::invalid_argument("carbon: non-positive intensity");
    return co2 * 1000.0 / (cfg.pue * cfg.intensity_g_per_kwh);
}

double implied_device_power_w(double co2, int devices, double days, const CarbonConfig& cfg) {
    if (devices < 1) throw std::invalid_argument("carbon: device count must be positive");
    if (days <= 0.0) throw std::invalid_argument("carbon: duration must be positive");
    double kwh = energy_kwh_from_co2(co2, cfg);
    double device_hours = static_cast<double>(devices) * days * 24.0;
    return kwh / device_hours * 1000.0;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

}  // namespace

std::string bar_chart_svg(const std::vector<Bar>& bars, const std::string& title,
                          const std::string& value_label) {
    if (bars.empty()) throw std::invalid_argument("chart: no bars");
    double max_value = 0.0;
    for (const auto& b : bars) {
        if (b.value < 0.0) throw std::invalid_argument("chart: negative bar value");
        max_value = std::max(max_value, b.value);
    }
    if (max_value == 0.0) max_value = 1.0;

    const int label_w = 150, plot_w = 420, bar_h = 22, gap = 8, top = 48, bottom = 28;
    int height = top + static_cast<int>(bars.size()) * (bar_h + gap) + bottom;
    int width = label_w + plot_w + 90;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "  <style>text{font-family:monospace;font-size:12px;fill:#222}"
           ".t{font-size:14px;font-weight:bold}.v{fill:#555}</style>\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
    svg << "  <text class=\"t\" x=\"12\" y=\"24\">" << xml_escape(title) << "</text>\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        int y = top + static_cast<int>(i) * (bar_h + gap);
        int w = static_cast<int>(std::lround(bars[i].value / max_value * plot_w));
        svg << "  <text x=\"12\" y=\"" << y + bar_h - 6 << "\">" << xml_escape(bars[i].label)
            << "</text>\n";
        svg << "  <rect x=\"" << label_w << "\" y=\"" << y << "\" width=\"" << w
            << "\" height=\"" << bar_h << "\" fill=\"#4878a8\"/>\n";
        svg << "  <text class=\"v\" x=\"" << label_w + w + 6 << "\" y=\"" << y + bar_h - 6
            << "\">" << fmt(bars[i].value) << "</text>\n";
    }
    svg << "  <text class=\"v\" x=\"12\" y=\"" << height - 10 << "\">" << xml_escape(value_label)
        << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace lmkit::report
