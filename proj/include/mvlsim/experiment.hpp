#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlsim/circuit_library.hpp"
#include "mvlsim/measurement.hpp"
#include "mvlsim/mvl.hpp"
#include "mvlsim/parser.hpp"
#include "mvlsim/sim_engine.hpp"

namespace mvlsim {

/// Value of one `.measure` card: a single number, or avg/peak for POWER.
struct MeasureValue {
    double value = 0.0;
    std::optional<PowerFigures> power;
};

/// Evaluates every `.measure` card of `netlist` on `waves`. Cards that cannot be
/// measured map to nullopt with the reason in `errors`.
inline std::map<std::string, std::optional<MeasureValue>> evaluate_measures(
    const Netlist& netlist, const WaveformSet& waves, std::map<std::string, std::string>* errors = nullptr) {
    std::map<std::string, std::optional<MeasureValue>> out;
    for (const auto& m : netlist.measures) {
        try {
            MeasureValue mv;
            switch (m.kind) {
                case MeasureKind::Rise:
                    mv.value = rise_time(waves.voltage(m.targets[0]), m.levels[0], m.levels[1]);
                    break;
                case MeasureKind::Fall:
                    mv.value = fall_time(waves.voltage(m.targets[0]), m.levels[0], m.levels[1]);
                    break;
                case MeasureKind::Delay:
                    mv.value = prop_delay(waves.voltage(m.targets[0]), waves.voltage(m.targets[1]),
                                          m.levels[0], m.levels[1]);
                    break;
                case MeasureKind::Power: {
                    const auto* dev = netlist.find_device(m.targets[0]);
                    const auto vp = waves.voltage(dev->terminals[0]).values();
                    const auto vn = waves.voltage(dev->terminals[1]).values();
                    std::vector<double> across(vp.size());
                    for (std::size_t k = 0; k < vp.size(); ++k) across[k] = vp[k] - vn[k];
                    mv.power = supply_power(Waveform(waves.time, across), waves.current(dev->name));
                    mv.value = mv.power->avg;
                    break;
                }
            }
            out[m.name] = mv;
        } catch (const Error& e) {
            out[m.name] = std::nullopt;
            if (errors) (*errors)[m.name] = e.what();
        }
    }
    return out;
}

/// Folds measure values into a report: worst rise, fall and delay over the
/// respective cards, power from the first POWER card. Needs at least one
/// successful card of each kind.
inline std::optional<MeasureReport> report_from_measures(
    const std::string& technology, const Netlist& netlist,
    const std::map<std::string, std::optional<MeasureValue>>& values) {
    std::optional<double> rise, fall, delay;
    std::optional<PowerFigures> power;
    for (const auto& m : netlist.measures) {
        const auto it = values.find(m.name);
        if (it == values.end() || !it->second) continue;
        const double v = it->second->value;
        auto worst = [&](std::optional<double>& slot) { slot = slot ? std::max(*slot, v) : v; };
        switch (m.kind) {
            case MeasureKind::Rise: worst(rise); break;
            case MeasureKind::Fall: worst(fall); break;
            case MeasureKind::Delay: worst(delay); break;
            case MeasureKind::Power:
                if (!power) power = it->second->power;
                break;
        }
    }
    if (!rise || !fall || !delay || !power) return std::nullopt;
    return figures(technology, *power, *rise, *fall, *delay);
}

inline nlohmann::json to_json(const std::map<std::string, std::optional<MeasureValue>>& values) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, v] : values) {
        if (!v) j[name] = nullptr;
        else if (v->power) j[name] = {{"avg", v->power->avg}, {"peak", v->power->peak}};
        else j[name] = v->value;
    }
    return j;
}

inline nlohmann::json to_json(const FetModelCard& card) {
    return {{"polarity", card.polarity == Polarity::N ? "N" : "P"}, {"vth", card.vth}, {"k", card.k},
            {"lambda", card.lambda}, {"cg", card.cg}, {"cd", card.cd}};
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fingerprint(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string stimulus_text(const PwlStimulus& pwl) {
    std::string s;
    for (const auto& [t, v] : pwl.points) s += format_number(t) + " " + format_number(v) + ";";
    return s;
}

struct DecoderRun {
    CellSpec spec;
    StaircaseTiming timing;
    Netlist testbench;
    WaveformSet waves;
    std::vector<double> sample_times;
    std::vector<std::optional<DecodedBits>> sampled;  // nullopt: an output was out of band
    bool logic_ok = false;
    std::map<std::string, std::optional<MeasureValue>> measures;
    std::map<std::string, std::string> measure_errors;
    std::optional<MeasureReport> report;
    std::string stimulus_fingerprint;
};

/// A digit sampled on a binary output: 0 -> bit 0, r-1 -> bit 1, anything else invalid.
inline std::optional<int> as_bit(const std::optional<Digit>& d) {
    if (!d) return std::nullopt;
    if (d->value() == 0) return 0;
    if (d->value() == d->radix() - 1) return 1;
    return std::nullopt;
}

/// Builds the staircase testbench, simulates it, samples b1/b0 at 90% of each
/// hold, checks them against ideal_decode and computes the report.
inline DecoderRun run_decoder(const CellSpec& spec, const StaircaseTiming& timing = {},
                              const SolveOptions& opts = {}) {
    DecoderRun run;
    run.spec = spec;
    run.timing = timing;
    run.testbench = build_staircase_testbench(spec, timing);
    const auto* vin = run.testbench.find_device("Vin");
    run.stimulus_fingerprint = fingerprint(stimulus_text(std::get<PwlStimulus>(*vin->stimulus)));
    run.waves = transient(run.testbench, *run.testbench.transient(), opts);
    run.sample_times = staircase_sample_times(spec.map, timing.hold);
    const auto b1 = quantize(run.waves.voltage(kDecoderB1), spec.map, run.sample_times);
    const auto b0 = quantize(run.waves.voltage(kDecoderB0), spec.map, run.sample_times);
    run.logic_ok = true;
    for (std::size_t x = 0; x < run.sample_times.size(); ++x) {
        const auto hi = as_bit(b1[x]);
        const auto lo = as_bit(b0[x]);
        if (hi && lo) run.sampled.push_back(DecodedBits{*hi, *lo});
        else run.sampled.push_back(std::nullopt);
        const auto expected = ideal_decode(Digit(static_cast<int>(x), 4));
        if (!run.sampled.back() || !(*run.sampled.back() == expected)) run.logic_ok = false;
    }
    run.measures = evaluate_measures(run.testbench, run.waves, &run.measure_errors);
    run.report = report_from_measures(spec.tech.name, run.testbench, run.measures);
    return run;
}

inline nlohmann::json to_json(const DecoderRun& run) {
    nlohmann::json j;
    j["config"] = {{"tech", run.spec.tech.name},      {"vdd", run.spec.map.vdd()},
                   {"radix", run.spec.map.radix()},   {"guard", run.spec.map.guard()},
                   {"hold", run.timing.hold},         {"slew", run.timing.slew},
                   {"dt", run.waves.stats.step},      {"load", run.spec.load},
                   {"vth_scale", run.spec.vth_scale}};
    j["technology"] = {{"name", run.spec.tech.name},
                       {"note", run.spec.tech.note},
                       {"nfet", to_json(run.spec.tech.nfet)},
                       {"pfet", to_json(run.spec.tech.pfet)}};
    const auto& pwl = std::get<PwlStimulus>(*run.testbench.find_device("Vin")->stimulus);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& [t, v] : pwl.points) points.push_back({t, v});
    j["stimulus"] = {{"fingerprint", run.stimulus_fingerprint}, {"pwl", points}};
    nlohmann::json expected = nlohmann::json::array(), measured = nlohmann::json::array();
    for (std::size_t x = 0; x < run.sampled.size(); ++x) {
        const auto e = ideal_decode(Digit(static_cast<int>(x), 4));
        expected.push_back({e.b1, e.b0});
        if (run.sampled[x]) measured.push_back({run.sampled[x]->b1, run.sampled[x]->b0});
        else measured.push_back(nullptr);
    }
    j["digits"] = {{"sample_times", run.sample_times}, {"expected", expected}, {"measured", measured}};
    j["logic_ok"] = run.logic_ok;
    j["measures"] = to_json(run.measures);
    j["report"] = run.report ? to_json(*run.report) : nlohmann::json(nullptr);
    j["newton_iterations"] = run.waves.stats.newton_iterations;
    return j;
}

struct InverterEdges {
    double rise = 0.0;
    double fall = 0.0;
};

/// 10-90% output edges of a stand-alone minimum inverter driving `load`, with its
/// input pulsed 0 -> vdd -> 0 using `slew` edges.
inline InverterEdges inverter_edges(const TechnologyCard& tech, double load, double vdd = 1.2,
                                    double slew = 0.1e-9, const SolveOptions& opts = {}) {
    CellSpec spec;
    spec.kind = CellKind::Inverter;
    spec.tech = tech;
    spec.map = LevelMap(4, vdd);
    spec.load = load;
    PwlStimulus input{{{0.0, 0.0}, {1e-9, 0.0}, {1e-9 + slew, vdd}, {3e-9, vdd}, {3e-9 + slew, 0.0}, {5e-9, 0.0}}};
    auto n = cell_netlist(build_inverter(spec), "inverter characterization", spec.map, {{"in", input}});
    TransientAnalysis tran;
    tran.tstop = 5e-9;
    tran.dt = slew / 200.0;
    const auto waves = transient(n, tran, opts);
    const auto out = waves.voltage("out");
    return {rise_time(out, 0.0, vdd), fall_time(out, 0.0, vdd)};
}

}  // namespace mvlsim
