#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlsim/error.hpp"
#include "mvlsim/waveform.hpp"

namespace mvlsim {

namespace detail {

inline double crossing_time(const Waveform& wf, std::size_t j, double threshold) {
    const auto& t = wf.time();
    const auto& v = wf.values();
    return t[j - 1] + (threshold - v[j - 1]) / (v[j] - v[j - 1]) * (t[j] - t[j - 1]);
}

// 10%-to-90% time of the first complete transition in direction `sign`
// (+1 rising, -1 falling). The 10% point is the last entry into the band
// before the first exit through the far threshold.
inline double transition_time(const Waveform& wf, double v_lo, double v_hi, double sign,
                              const char* what) {
    if (!(v_hi > v_lo)) throw MeasurementError(std::string(what) + ": need v_hi > v_lo");
    const double swing = v_hi - v_lo;
    // Work in a frame where the transition is always rising.
    const double near = sign > 0 ? v_lo + 0.1 * swing : v_lo + 0.9 * swing;
    const double far = sign > 0 ? v_lo + 0.9 * swing : v_lo + 0.1 * swing;
    const auto& v = wf.values();
    auto s = [&](std::size_t j) { return sign * v[j]; };
    const double a = sign * near;
    const double b = sign * far;
    double t_near = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 1; j < v.size(); ++j) {
        if (s(j - 1) < a && s(j) >= a) t_near = crossing_time(wf, j, near);
        if (!std::isnan(t_near) && s(j - 1) < b && s(j) >= b) return crossing_time(wf, j, far) - t_near;
        if (s(j) < a) t_near = std::numeric_limits<double>::quiet_NaN();
    }
    throw MeasurementError(std::string(what) + ": no complete transition found");
}

inline std::vector<double> crossings(const Waveform& wf, double threshold) {
    std::vector<double> out;
    const auto& v = wf.values();
    for (std::size_t j = 1; j < v.size(); ++j) {
        const bool before = v[j - 1] >= threshold;
        const bool after = v[j] >= threshold;
        if (before != after) out.push_back(crossing_time(wf, j, threshold));
    }
    return out;
}

}  // namespace detail

/// 10%-90% rise time of the first complete rising edge of the swing [v_lo, v_hi].
inline double rise_time(const Waveform& wf, double v_lo, double v_hi) {
    return detail::transition_time(wf, v_lo, v_hi, +1.0, "rise_time");
}

/// 90%-10% fall time of the first complete falling edge.
inline double fall_time(const Waveform& wf, double v_lo, double v_hi) {
    return detail::transition_time(wf, v_lo, v_hi, -1.0, "fall_time");
}

/// Worst-case delay: every input crossing of v_mid_in is paired with the first
/// output crossing of v_mid_out at or after it.
inline double prop_delay(const Waveform& input, const Waveform& output, double v_mid_in,
                         double v_mid_out) {
    const auto in = detail::crossings(input, v_mid_in);
    const auto out = detail::crossings(output, v_mid_out);
    if (in.empty()) throw MeasurementError("prop_delay: input never crosses its threshold");
    double worst = 0.0;
    for (double t : in) {
        auto it = std::lower_bound(out.begin(), out.end(), t);
        if (it == out.end()) throw MeasurementError("prop_delay: unmatched input crossing");
        worst = std::max(worst, *it - t);
    }
    return worst;
}

struct PowerFigures {
    double avg = 0.0;   // W
    double peak = 0.0;  // W
};

/// Power delivered by a source, p(t) = -v(t) i(t) with i flowing into the +
/// terminal. Average is the trapezoidal integral over the run divided by its length.
inline PowerFigures supply_power(const Waveform& voltage, const Waveform& current) {
    if (voltage.time() != current.time()) throw MeasurementError("supply_power: mismatched time axes");
    const auto& t = voltage.time();
    const auto& v = voltage.values();
    const auto& i = current.values();
    double energy = 0.0;
    double peak = -std::numeric_limits<double>::infinity();
    double p_prev = -v[0] * i[0];
    peak = p_prev;
    for (std::size_t j = 1; j < t.size(); ++j) {
        const double p = -v[j] * i[j];
        energy += 0.5 * (p + p_prev) * (t[j] - t[j - 1]);
        peak = std::max(peak, p);
        p_prev = p;
    }
    return {energy / (t.back() - t.front()), peak};
}

struct MeasureReport {
    std::string technology;
    double max_power = 0.0;   // W
    double avg_power = 0.0;   // W
    double rise_time = 0.0;   // s
    double fall_time = 0.0;   // s
    double prop_delay = 0.0;  // s
    double pdp = 0.0;         // J
    double edp = 0.0;         // J*s

    bool operator==(const MeasureReport&) const = default;
};

inline MeasureReport figures(std::string technology, const PowerFigures& power, double rise,
                             double fall, double delay) {
    MeasureReport r;
    r.technology = std::move(technology);
    r.max_power = power.peak;
    r.avg_power = power.avg;
    r.rise_time = rise;
    r.fall_time = fall;
    r.prop_delay = delay;
    r.pdp = r.avg_power * r.prop_delay;
    r.edp = r.pdp * r.prop_delay;
    return r;
}

inline nlohmann::json to_json(const MeasureReport& r) {
    return {{"technology", r.technology}, {"max_power", r.max_power}, {"avg_power", r.avg_power},
            {"rise_time", r.rise_time},   {"fall_time", r.fall_time}, {"prop_delay", r.prop_delay},
            {"pdp", r.pdp},               {"edp", r.edp}};
}

/// Aligned text table, one row per report.
inline std::string report_table(const std::vector<MeasureReport>& reports) {
    const std::vector<std::string> header{"Technology", "Max power (nW)", "Avg power (nW)",
                                          "Rise (ps)",  "Fall (ps)",      "Delay (ps)",
                                          "PDP (fJ)",   "EDP (fJ*ps)"};
    std::vector<std::vector<std::string>> rows{header};
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    for (const auto& r : reports)
        rows.push_back({r.technology, num(r.max_power * 1e9), num(r.avg_power * 1e9),
                        num(r.rise_time * 1e12), num(r.fall_time * 1e12), num(r.prop_delay * 1e12),
                        num(r.pdp * 1e15), num(r.edp * 1e27)});
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += " | ";
            out += row[c];
            if (c + 1 < row.size()) out.append(width[c] - row[c].size(), ' ');
        }
        out += '\n';
    }
    return out;
}

}  // namespace mvlsim
