#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lmkit::report {

struct CarbonConfig {
    double pue = 1.3;                    // datacenter power usage effectiveness
    double intensity_g_per_kwh = 400.0;  // grid carbon intensity
};

// kg CO2 = kWh consumed * PUE * grid intensity.
double co2_kg(double energy_kwh, const CarbonConfig& cfg = {});

// Inverse problems for published totals: the energy a reported footprint
// implies, and the average per-device power a training run must have drawn.
double energy_kwh_from_co2(double co2, const CarbonConfig& cfg = {});
double implied_device_power_w(double co2, int devices, double days,
                              const CarbonConfig& cfg = {});

struct Bar {
    std::string label;
    double value = 0.0;
};

// Self-contained SVG, byte-identical for identical input.
std::string bar_chart_svg(const std::vector<Bar>& bars, const std::string& title,
                          const std::string& value_label);

}  // namespace lmkit::report
