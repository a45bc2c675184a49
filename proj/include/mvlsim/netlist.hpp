#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mvlsim/device_models.hpp"
#include "mvlsim/error.hpp"

namespace mvlsim {

enum class DeviceKind { Fet, Resistor, Capacitor, VoltageSource };

struct DcStimulus {
    double level = 0.0;
    bool operator==(const DcStimulus&) const = default;
};

/// Piecewise-linear source: (time, volts) corners with strictly increasing time.
struct PwlStimulus {
    std::vector<std::pair<double, double>> points;
    bool operator==(const PwlStimulus&) const = default;
};

struct PulseStimulus {
    double v1 = 0.0;
    double v2 = 0.0;
    double delay = 0.0;
    double rise = 0.0;
    double fall = 0.0;
    double width = 0.0;
    double period = 0.0;
    bool operator==(const PulseStimulus&) const = default;
};

using Stimulus = std::variant<DcStimulus, PwlStimulus, PulseStimulus>;

inline double stimulus_value(const Stimulus& stimulus, double t) {
    struct Visitor {
        double t;
        double operator()(const DcStimulus& s) const { return s.level; }
        double operator()(const PwlStimulus& s) const {
            const auto& p = s.points;
            if (t <= p.front().first) return p.front().second;
            if (t >= p.back().first) return p.back().second;
            auto hi = std::upper_bound(p.begin(), p.end(), t,
                                       [](double x, const auto& pt) { return x < pt.first; });
            auto lo = hi - 1;
            const double frac = (t - lo->first) / (hi->first - lo->first);
            return lo->second + frac * (hi->second - lo->second);
        }
        double operator()(const PulseStimulus& s) const {
            if (t < s.delay) return s.v1;
            const double cycles = std::floor((t - s.delay) / s.period);
            const double tau = t - s.delay - cycles * s.period;
            if (tau < s.rise) return s.v1 + (s.v2 - s.v1) * tau / s.rise;
            if (tau < s.rise + s.width) return s.v2;
            if (tau < s.rise + s.width + s.fall)
                return s.v2 + (s.v1 - s.v2) * (tau - s.rise - s.width) / s.fall;
            return s.v1;
        }
    };
    return std::visit(Visitor{t}, stimulus);
}

/// Corner times of the stimulus inside [0, tstop].
inline std::vector<double> stimulus_breakpoints(const Stimulus& stimulus, double tstop) {
    std::vector<double> out;
    if (const auto* pwl = std::get_if<PwlStimulus>(&stimulus)) {
        for (const auto& [t, v] : pwl->points)
            if (t <= tstop) out.push_back(t);
    } else if (const auto* pulse = std::get_if<PulseStimulus>(&stimulus)) {
        for (long n = 0;; ++n) {
            const double start = pulse->delay + static_cast<double>(n) * pulse->period;
            if (start > tstop) break;
            for (double offset : {0.0, pulse->rise, pulse->rise + pulse->width,
                                  pulse->rise + pulse->width + pulse->fall})
                if (start + offset <= tstop) out.push_back(start + offset);
            if (out.size() > 1'000'000) break;
        }
    }
    return out;
}

/// Duration of the fastest voltage transition; infinity for DC.
inline double shortest_edge(const Stimulus& stimulus) {
    double best = std::numeric_limits<double>::infinity();
    if (const auto* pwl = std::get_if<PwlStimulus>(&stimulus)) {
        for (std::size_t j = 1; j < pwl->points.size(); ++j)
            if (pwl->points[j].second != pwl->points[j - 1].second)
                best = std::min(best, pwl->points[j].first - pwl->points[j - 1].first);
    } else if (const auto* pulse = std::get_if<PulseStimulus>(&stimulus)) {
        if (pulse->v1 != pulse->v2) best = std::min(pulse->rise, pulse->fall);
    }
    return best;
}

/// One element line. Terminals: FET drain, gate, source, bulk; two nodes otherwise
/// (sources: positive then negative). Parameters: "r" ohms, "c" farads, "m" FET
/// width/length multiplier.
struct Device {
    std::string name;
    DeviceKind kind = DeviceKind::Resistor;
    std::vector<std::string> terminals;
    std::map<std::string, double> params;
    std::optional<std::string> model;
    std::optional<Stimulus> stimulus;

    bool operator==(const Device&) const = default;

    [[nodiscard]] double param(const std::string& key, double fallback = 0.0) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

struct OperatingPointAnalysis {
    bool operator==(const OperatingPointAnalysis&) const = default;
};

struct TransientAnalysis {
    double dt = 0.0;
    double tstop = 0.0;
    std::optional<double> dtmax;
    bool operator==(const TransientAnalysis&) const = default;
};

using Analysis = std::variant<OperatingPointAnalysis, TransientAnalysis>;

enum class MeasureKind { Rise, Fall, Delay, Power };

/// `.measure` card. Targets/levels by kind:
///   RISE/FALL: node, v_lo v_hi
///   DELAY:     input node, output node, v_mid_in v_mid_out
///   POWER:     voltage source name
struct MeasureDirective {
    std::string name;
    MeasureKind kind = MeasureKind::Rise;
    std::vector<std::string> targets;
    std::vector<double> levels;
    bool operator==(const MeasureDirective&) const = default;
};

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Node names are case-insensitive and "gnd" is ground.
inline std::string canonical_node(std::string_view name) {
    auto lower = to_lower(name);
    return lower == "gnd" ? std::string("0") : lower;
}

struct Netlist {
    std::string title;
    std::vector<std::string> nodes{"0"};
    std::vector<Device> devices;
    std::map<std::string, FetModelCard> models;
    std::vector<Analysis> analyses;
    std::vector<MeasureDirective> measures;

    bool operator==(const Netlist&) const = default;

    [[nodiscard]] std::optional<std::size_t> node_index(std::string_view name) const {
        const auto key = canonical_node(name);
        auto it = std::find(nodes.begin(), nodes.end(), key);
        if (it == nodes.end()) return std::nullopt;
        return static_cast<std::size_t>(it - nodes.begin());
    }

    [[nodiscard]] const Device* find_device(std::string_view name) const {
        const auto key = to_lower(name);
        for (const auto& d : devices)
            if (to_lower(d.name) == key) return &d;
        return nullptr;
    }

    /// Appends a device, canonicalizing its terminals and registering new nodes in
    /// order of first appearance.
    void add_device(Device device) {
        for (auto& t : device.terminals) {
            t = canonical_node(t);
            if (!node_index(t)) nodes.push_back(t);
        }
        devices.push_back(std::move(device));
    }

    [[nodiscard]] const TransientAnalysis* transient() const {
        for (const auto& a : analyses)
            if (const auto* tr = std::get_if<TransientAnalysis>(&a)) return tr;
        return nullptr;
    }
};

inline std::size_t terminal_count(DeviceKind kind) { return kind == DeviceKind::Fet ? 4 : 2; }

inline void validate(const Stimulus& stimulus) {
    if (const auto* pwl = std::get_if<PwlStimulus>(&stimulus)) {
        if (pwl->points.empty()) throw InvalidArgument("PWL needs at least one point");
        if (pwl->points.front().first < 0.0) throw InvalidArgument("PWL first time must be >= 0");
        for (std::size_t j = 1; j < pwl->points.size(); ++j)
            if (!(pwl->points[j].first > pwl->points[j - 1].first))
                throw InvalidArgument("PWL times must be strictly increasing");
    } else if (const auto* p = std::get_if<PulseStimulus>(&stimulus)) {
        if (!(p->rise > 0.0) || !(p->fall > 0.0) || !(p->width > 0.0) || !(p->period > 0.0))
            throw InvalidArgument("PULSE rise, fall, width and period must be > 0");
        if (p->delay < 0.0) throw InvalidArgument("PULSE delay must be >= 0");
    }
}

inline void validate(const TransientAnalysis& tran) {
    if (!(tran.tstop > 0.0)) throw InvalidArgument(".tran tstop must be > 0");
    if (!(tran.dt > 0.0) || tran.dt > tran.tstop)
        throw InvalidArgument(".tran dt must satisfy 0 < dt <= tstop");
    if (tran.dtmax && !(*tran.dtmax > 0.0)) throw InvalidArgument(".tran dtmax must be > 0");
}

/// Checks every Netlist invariant; throws InvalidArgument naming the first violation.
inline void validate(const Netlist& netlist) {
    if (netlist.nodes.empty() || netlist.nodes.front() != "0")
        throw InvalidArgument("node 0 must be the first node");
    std::vector<std::string> seen;
    for (const auto& d : netlist.devices) {
        const auto key = to_lower(d.name);
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw InvalidArgument("duplicate device name '" + d.name + "'");
        seen.push_back(key);
        if (d.terminals.size() != terminal_count(d.kind))
            throw InvalidArgument(d.name + ": wrong terminal count");
        for (const auto& t : d.terminals)
            if (!netlist.node_index(t)) throw InvalidArgument(d.name + ": undeclared node " + t);
        switch (d.kind) {
            case DeviceKind::Resistor:
                if (!(d.param("r") > 0.0)) throw InvalidArgument(d.name + ": resistance must be > 0");
                break;
            case DeviceKind::Capacitor:
                if (!(d.param("c", -1.0) >= 0.0))
                    throw InvalidArgument(d.name + ": capacitance must be >= 0");
                break;
            case DeviceKind::Fet:
                if (!d.model || !netlist.models.count(*d.model))
                    throw InvalidArgument(d.name + ": undeclared model");
                if (!(d.param("m", 1.0) > 0.0))
                    throw InvalidArgument(d.name + ": multiplier must be > 0");
                break;
            case DeviceKind::VoltageSource:
                if (!d.stimulus) throw InvalidArgument(d.name + ": source without stimulus");
                validate(*d.stimulus);
                break;
        }
    }
    for (const auto& [name, card] : netlist.models) validate(card);
    for (const auto& a : netlist.analyses)
        if (const auto* tr = std::get_if<TransientAnalysis>(&a)) validate(*tr);
}

}  // namespace mvlsim
