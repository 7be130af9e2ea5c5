#pragma once

#include <string>

#include "smartregion/error.hpp"

namespace smartregion::nr2 {

// Broadband-reservation feasibility for a node on a moving vehicle. All
// quantities are SI: m/s, bits/s, bytes. Decimal units throughout
// (1 MB = 1e6 bytes, 1 Mbps = 1e6 bit/s).
struct Scenario {
    double speed_mps{};
    double stream_rate_bps{};
    double segment_size_bytes{};
    double access_rate_bps{};
};

struct Report {
    double survivable_gap_m{};
    double access_window_s{};
    double cell_diameter_m{};
    double coverage_fraction{};  // cell_diameter / survivable_gap
};

void validate(const Scenario& s);

// Distance covered while playing one buffered segment.
double survivable_gap_m(const Scenario& s);
// Time to re-buffer one segment at the access rate.
double access_window_s(const Scenario& s);
// Cell footprint passed during one access window.
double cell_diameter_m(const Scenario& s);
double coverage_fraction(const Scenario& s);

Report evaluate(const Scenario& s);
// Same chain with the access window forced to a given value (used where a
// published window does not follow from the rate).
Report evaluate_with_window(const Scenario& s, double window_s);

struct Comparison {
    double window_ratio{};     // a / b
    double diameter_ratio{};
    double fraction_ratio{};
    // Area-model power saving of a relative to b: 1 - (d_a/d_b)^2.
    double power_saving{};
};

Comparison compare_scenarios(const Report& a, const Report& b);

std::string format_report(const Report& r);

}  // namespace smartregion::nr2
