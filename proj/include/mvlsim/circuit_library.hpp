#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mvlsim/device_models.hpp"
#include "mvlsim/error.hpp"
#include "mvlsim/mvl.hpp"
#include "mvlsim/netlist.hpp"

namespace mvlsim {

enum class CellKind { Vlc, Inverter, Xor2, Decoder };

struct CellSpec {
    CellKind kind = CellKind::Decoder;
    int vlc_index = 0;
    TechnologyCard tech = preset("cmos32");
    LevelMap map{};
    double load = 1e-15;    // F per output
    double vth_scale = 1.0;  // multiplies every threshold (nominal and VLC)
};

inline void validate(const CellSpec& spec) {
    if (spec.kind == CellKind::Vlc && (spec.vlc_index < 0 || spec.vlc_index > spec.map.radix() - 2))
        throw InvalidArgument("VLC index out of range");
    if (!(spec.load >= 0.0)) throw InvalidArgument("load capacitance must be >= 0");
    if (!(spec.vth_scale > 0.0)) throw InvalidArgument("vth scale must be > 0");
    validate(spec.tech.nfet);
    validate(spec.tech.pfet);
    if (spec.tech.nfet.polarity != Polarity::N || spec.tech.pfet.polarity != Polarity::P)
        throw InvalidArgument("technology card templates have the wrong polarity");
}

struct VlcThresholds {
    double vth_n = 0.0;
    double vth_p = 0.0;
};

/// Per-converter thresholds. Written against the level spacing s = vdd / (r - 1):
/// vth_n = (0.2 + i) s, vth_p = -(r - 1.8 - i) s. For r = 4, vdd = 3 this gives
/// (0.2, -2.2), (1.2, -1.2), (2.2, -0.2); other supplies scale linearly.
inline VlcThresholds vlc_thresholds(int i, const LevelMap& map) {
    if (i < 0 || i > map.radix() - 2) throw InvalidArgument("VLC index out of range");
    const double s = map.spacing();
    return {(0.2 + i) * s, -(map.radix() - 1.8 - i) * s};
}

/// A cell: devices on port and internal node names, plus the model cards it uses.
struct Fragment {
    std::vector<std::string> ports;
    std::vector<Device> devices;
    std::map<std::string, FetModelCard> models;

    bool operator==(const Fragment&) const = default;
};

namespace detail {

inline Device fet(std::string name, std::string d, std::string g, std::string s, std::string b,
                  std::string model) {
    Device dev;
    dev.name = std::move(name);
    dev.kind = DeviceKind::Fet;
    dev.terminals = {std::move(d), std::move(g), std::move(s), std::move(b)};
    dev.model = std::move(model);
    dev.params["m"] = 1.0;
    return dev;
}

inline Device capacitor(std::string name, std::string a, std::string b, double c) {
    Device dev;
    dev.name = std::move(name);
    dev.kind = DeviceKind::Capacitor;
    dev.terminals = {std::move(a), std::move(b)};
    dev.params["c"] = c;
    return dev;
}

inline Device source(std::string name, std::string p, std::string n, Stimulus stimulus) {
    Device dev;
    dev.name = std::move(name);
    dev.kind = DeviceKind::VoltageSource;
    dev.terminals = {std::move(p), std::move(n)};
    dev.stimulus = std::move(stimulus);
    return dev;
}

inline FetModelCard scaled_threshold(FetModelCard card, double vth, double scale) {
    card.vth = vth * scale;
    return card;
}

inline void add_load(Fragment& f, const std::string& node, double load) {
    if (load > 0.0) f.devices.push_back(capacitor("cload", node, "0", load));
}

}  // namespace detail

/// Threshold-shifted complementary pair: PFET from vdd, NFET to ground, gates
/// on `in`, drains on `out`.
inline Fragment build_vlc(int i, const CellSpec& spec) {
    validate(spec);
    const auto th = vlc_thresholds(i, spec.map);
    Fragment f;
    f.ports = {"in", "out", "vdd"};
    f.models["vlcn"] = detail::scaled_threshold(spec.tech.nfet, th.vth_n, spec.vth_scale);
    f.models["vlcp"] = detail::scaled_threshold(spec.tech.pfet, th.vth_p, spec.vth_scale);
    f.devices.push_back(detail::fet("mp", "out", "in", "vdd", "vdd", "vlcp"));
    f.devices.push_back(detail::fet("mn", "out", "in", "0", "0", "vlcn"));
    detail::add_load(f, "out", spec.load);
    return f;
}

inline void add_nominal_models(Fragment& f, const CellSpec& spec) {
    f.models["nch"] = detail::scaled_threshold(spec.tech.nfet, spec.tech.nfet.vth, spec.vth_scale);
    f.models["pch"] = detail::scaled_threshold(spec.tech.pfet, spec.tech.pfet.vth, spec.vth_scale);
}

inline Fragment build_inverter(const CellSpec& spec) {
    validate(spec);
    Fragment f;
    f.ports = {"in", "out", "vdd"};
    add_nominal_models(f, spec);
    f.devices.push_back(detail::fet("mp", "out", "in", "vdd", "vdd", "pch"));
    f.devices.push_back(detail::fet("mn", "out", "in", "0", "0", "nch"));
    detail::add_load(f, "out", spec.load);
    return f;
}

/// Static complementary XOR: local inverters make an/bn, then
///   pull-up   (a, bn) in series  ||  (an, b) in series
///   pull-down (a, b)  in series  ||  (an, bn) in series
inline Fragment build_xor2(const CellSpec& spec) {
    validate(spec);
    using detail::fet;
    Fragment f;
    f.ports = {"a", "b", "out", "vdd"};
    add_nominal_models(f, spec);
    f.devices = {
        fet("mpa", "an", "a", "vdd", "vdd", "pch"), fet("mna", "an", "a", "0", "0", "nch"),
        fet("mpb", "bn", "b", "vdd", "vdd", "pch"), fet("mnb", "bn", "b", "0", "0", "nch"),
        fet("mp1", "pu1", "a", "vdd", "vdd", "pch"), fet("mp2", "out", "bn", "pu1", "vdd", "pch"),
        fet("mp3", "pu2", "an", "vdd", "vdd", "pch"), fet("mp4", "out", "b", "pu2", "vdd", "pch"),
        fet("mn1", "out", "a", "pd1", "0", "nch"),   fet("mn2", "pd1", "b", "0", "0", "nch"),
        fet("mn3", "out", "an", "pd2", "0", "nch"),  fet("mn4", "pd2", "bn", "0", "0", "nch"),
    };
    detail::add_load(f, "out", spec.load);
    return f;
}

/// Flattens a fragment into `netlist`. Device names get a `_<prefix>` suffix (the
/// leading letter keeps the element type), internal nodes a `<prefix>_` prefix,
/// and with `local_models` the model names a `_<prefix>` suffix. Ports map
/// through `ports`; ground stays ground.
inline void instantiate(Netlist& netlist, const Fragment& frag, const std::string& prefix,
                        const std::map<std::string, std::string>& ports, bool local_models) {
    auto node = [&](const std::string& n) {
        if (n == "0") return n;
        auto it = ports.find(n);
        if (it != ports.end()) return it->second;
        if (std::find(frag.ports.begin(), frag.ports.end(), n) != frag.ports.end())
            throw InvalidArgument("instantiate: unconnected port '" + n + "'");
        return prefix + "_" + n;
    };
    auto model_name = [&](const std::string& m) { return local_models ? m + "_" + prefix : m; };
    for (const auto& [name, card] : frag.models) {
        const auto key = model_name(name);
        auto it = netlist.models.find(key);
        if (it != netlist.models.end() && !(it->second == card))
            throw InvalidArgument("instantiate: conflicting model '" + key + "'");
        netlist.models[key] = card;
    }
    for (auto dev : frag.devices) {
        dev.name += "_" + prefix;
        for (auto& t : dev.terminals) t = node(t);
        if (dev.model) dev.model = model_name(*dev.model);
        netlist.add_device(std::move(dev));
    }
}

/// Output nodes of the decoder netlist.
inline constexpr const char* kDecoderInput = "in";
inline constexpr const char* kDecoderB1 = "b1";
inline constexpr const char* kDecoderB0 = "b0";
inline constexpr const char* kSupplySource = "vdd";

/// Quaternary-to-binary decoder: VLC1..3 on `in`, an inverter on each VLC output,
/// b1 = inverter of VLC2, b0 = XOR(XOR(inv1, b1), inv3). Loads sit on b1 and b0
/// only; `in` is left for the testbench to drive.
inline Netlist build_decoder(const CellSpec& spec) {
    validate(spec);
    if (spec.map.radix() != 4) throw InvalidArgument("decoder requires radix 4");
    CellSpec internal = spec;
    internal.load = 0.0;
    Netlist n;
    n.title = "quaternary to binary decoder (" + spec.tech.name + ")";
    n.add_device(detail::source("Vdd", "vdd", "0", DcStimulus{spec.map.vdd()}));
    const char* vlc_out[] = {"vlc1", "vlc2", "vlc3"};
    const char* inv_out[] = {"inv1", kDecoderB1, "inv3"};
    for (int i = 0; i < 3; ++i) {
        const auto tag = "vlc" + std::to_string(i + 1);
        instantiate(n, build_vlc(i, internal), tag, {{"in", kDecoderInput}, {"out", vlc_out[i]}, {"vdd", "vdd"}},
                    true);
    }
    const auto inverter = build_inverter(internal);
    for (int i = 0; i < 3; ++i)
        instantiate(n, inverter, "inv" + std::to_string(i + 1),
                    {{"in", vlc_out[i]}, {"out", inv_out[i]}, {"vdd", "vdd"}}, false);
    const auto xor2 = build_xor2(internal);
    instantiate(n, xor2, "xor1", {{"a", "inv1"}, {"b", kDecoderB1}, {"out", "x1"}, {"vdd", "vdd"}}, false);
    instantiate(n, xor2, "xor2", {{"a", "x1"}, {"b", "inv3"}, {"out", kDecoderB0}, {"vdd", "vdd"}}, false);
    if (spec.load > 0.0) {
        n.add_device(detail::capacitor("Cload_b1", kDecoderB1, "0", spec.load));
        n.add_device(detail::capacitor("Cload_b0", kDecoderB0, "0", spec.load));
    }
    return n;
}

struct StaircaseTiming {
    double hold = 5e-9;   // s per input level
    double slew = 0.1e-9; // s per edge
    double dt = 0.0;      // transient step; 0 picks slew / 200
};

/// PWL staircase level(0) -> level(r-1): each level held `hold`, edges `slew` long.
inline PwlStimulus staircase(const LevelMap& map, double hold, double slew) {
    if (!(hold > slew) || !(slew > 0.0)) throw InvalidArgument("staircase needs hold > slew > 0");
    PwlStimulus pwl;
    for (int d = 0; d < map.radix(); ++d) {
        const double start = d == 0 ? 0.0 : d * hold + slew;
        pwl.points.emplace_back(start, map.level(d));
        pwl.points.emplace_back((d + 1) * hold, map.level(d));
    }
    return pwl;
}

/// Sample instants 90% of the way through each held level.
inline std::vector<double> staircase_sample_times(const LevelMap& map, double hold) {
    std::vector<double> out;
    for (int d = 0; d < map.radix(); ++d) out.push_back(d * hold + 0.9 * hold);
    return out;
}

/// Decoder plus a staircase input source, a `.tran` card spanning every level and
/// measure cards for the b0/b1 edges, delays and supply power.
inline Netlist build_staircase_testbench(const CellSpec& spec, const StaircaseTiming& timing = {}) {
    Netlist n = build_decoder(spec);
    n.title = "decoder staircase testbench (" + spec.tech.name + ")";
    n.add_device(detail::source("Vin", kDecoderInput, "0", staircase(spec.map, timing.hold, timing.slew)));
    TransientAnalysis tran;
    tran.tstop = spec.map.radix() * timing.hold;
    tran.dt = timing.dt > 0.0 ? timing.dt : timing.slew / 200.0;
    n.analyses.emplace_back(tran);
    const double vdd = spec.map.vdd();
    auto measure = [&](std::string name, MeasureKind kind, std::vector<std::string> targets,
                       std::vector<double> levels) {
        n.measures.push_back({std::move(name), kind, std::move(targets), std::move(levels)});
    };
    measure("rise_b0", MeasureKind::Rise, {kDecoderB0}, {0.0, vdd});
    measure("fall_b0", MeasureKind::Fall, {kDecoderB0}, {0.0, vdd});
    measure("rise_b1", MeasureKind::Rise, {kDecoderB1}, {0.0, vdd});
    measure("delay_b1", MeasureKind::Delay, {kDecoderInput, kDecoderB1}, {vdd / 2, vdd / 2});
    measure("delay_b0", MeasureKind::Delay, {kDecoderInput, kDecoderB0}, {vdd / 2, vdd / 2});
    measure("power", MeasureKind::Power, {"Vdd"}, {});
    return n;
}

/// Stand-alone netlist for a cell: supply `Vdd` on node vdd and one source per
/// entry of `inputs` (port -> stimulus), named `Vin_<port>`.
inline Netlist cell_netlist(const Fragment& frag, std::string title, const LevelMap& map,
                            const std::map<std::string, Stimulus>& inputs) {
    Netlist n;
    n.title = std::move(title);
    n.add_device(detail::source("Vdd", "vdd", "0", DcStimulus{map.vdd()}));
    for (const auto& [port, stim] : inputs) n.add_device(detail::source("Vin_" + port, port, "0", stim));
    n.models = frag.models;
    for (const auto& d : frag.devices) n.add_device(d);
    return n;
}

}  // namespace mvlsim
