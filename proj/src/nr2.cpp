#include "smartregion/nr2.hpp"

#include <sstream>

namespace smartregion::nr2 {

void validate(const Scenario& s) {
    if (s.speed_mps <= 0 || s.stream_rate_bps <= 0 || s.segment_size_bytes <= 0 ||
        s.access_rate_bps <= 0)
        throw Error(Errc::config_error, "all scenario quantities must be strictly positive");
}

double survivable_gap_m(const Scenario& s) {
    validate(s);
    return s.speed_mps * (s.segment_size_bytes * 8.0 / s.stream_rate_bps);
}

double access_window_s(const Scenario& s) {
    validate(s);
    return s.segment_size_bytes * 8.0 / s.access_rate_bps;
}

double cell_diameter_m(const Scenario& s) { return s.speed_mps * access_window_s(s); }

double coverage_fraction(const Scenario& s) { return cell_diameter_m(s) / survivable_gap_m(s); }

Report evaluate(const Scenario& s) {
    return evaluate_with_window(s, access_window_s(s));
}

Report evaluate_with_window(const Scenario& s, double window_s) {
    validate(s);
    Report r;
    r.survivable_gap_m = survivable_gap_m(s);
    r.access_window_s = window_s;
    r.cell_diameter_m = s.speed_mps * window_s;
    r.coverage_fraction = r.cell_diameter_m / r.survivable_gap_m;
    return r;
}

Comparison compare_scenarios(const Report& a, const Report& b) {
    Comparison c;
    c.window_ratio = a.access_window_s / b.access_window_s;
    c.diameter_ratio = a.cell_diameter_m / b.cell_diameter_m;
    c.fraction_ratio = a.coverage_fraction / b.coverage_fraction;
    double d = a.cell_diameter_m / b.cell_diameter_m;
    c.power_saving = 1.0 - d * d;
    return c;
}

std::string format_report(const Report& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "survivable_gap_m=" << r.survivable_gap_m << "\n";
    os << "access_window_s=" << r.access_window_s << "\n";
    os << "cell_diameter_m=" << r.cell_diameter_m << "\n";
    os.precision(4);
    os << "coverage_fraction=" << r.coverage_fraction << "\n";
    return os.str();
}

}  // namespace smartregion::nr2
