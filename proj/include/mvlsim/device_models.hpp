#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "mvlsim/error.hpp"

namespace mvlsim {

enum class Polarity { N, P };

/// Level-1 square-law FET parameters. `vth` is signed: non-negative for N,
/// non-positive for P. Capacitances are lumped: `cg` gate-to-source and `cd`
/// drain-to-ground.
struct FetModelCard {
    Polarity polarity = Polarity::N;
    double vth = 0.0;     // V
    double k = 1e-4;      // A/V^2
    double lambda = 0.0;  // 1/V
    double cg = 0.0;      // F
    double cd = 0.0;      // F

    bool operator==(const FetModelCard&) const = default;
};

/// Throws InvalidArgument when the card breaks its invariants.
inline void validate(const FetModelCard& card) {
    auto fail = [](const char* msg) { throw InvalidArgument(msg); };
    if (!std::isfinite(card.vth) || !std::isfinite(card.k) || !std::isfinite(card.lambda) ||
        !std::isfinite(card.cg) || !std::isfinite(card.cd))
        fail("model card: non-finite parameter");
    if (!(card.k > 0.0)) fail("model card: k must be > 0");
    if (card.lambda < 0.0) fail("model card: lambda must be >= 0");
    if (card.cg < 0.0) fail("model card: cg must be >= 0");
    if (card.cd < 0.0) fail("model card: cd must be >= 0");
    if (card.polarity == Polarity::N && card.vth < 0.0) fail("model card: NFET vth must be >= 0");
    if (card.polarity == Polarity::P && card.vth > 0.0) fail("model card: PFET vth must be <= 0");
}

/// Drain current (into the drain terminal) and its partial derivatives.
struct FetOperatingPoint {
    double id = 0.0;   // A
    double gm = 0.0;   // d id / d vgs
    double gds = 0.0;  // d id / d vds
};

namespace detail {

// N-type square law for vds >= 0 with threshold `vt`; returns id and the
// partials with respect to vgs and vds.
inline FetOperatingPoint square_law_forward(double k, double vt, double lambda, double vgs,
                                            double vds) {
    const double vov = vgs - vt;
    if (vov <= 0.0) return {};
    const double clm = 1.0 + lambda * vds;
    if (vds < vov) {
        const double core = vov * vds - 0.5 * vds * vds;
        return {k * core * clm, k * vds * clm, k * (vov - vds) * clm + k * core * lambda};
    }
    const double core = 0.5 * vov * vov;
    return {k * core * clm, k * vov * clm, k * core * lambda};
}

// Symmetric extension: for vds < 0 the roles of drain and source swap.
inline FetOperatingPoint square_law_n(double k, double vt, double lambda, double vgs,
                                      double vds) {
    if (vds >= 0.0) return square_law_forward(k, vt, lambda, vgs, vds);
    const auto rev = square_law_forward(k, vt, lambda, vgs - vds, -vds);
    return {-rev.id, -rev.gm, rev.gm + rev.gds};
}

}  // namespace detail

/// Evaluates the square-law model at the given terminal voltage differences.
/// P devices use the N equations on negated voltages with the current negated
/// back, so fet_eval(P, -vgs, -vds).id == -fet_eval(N twin, vgs, vds).id.
inline FetOperatingPoint fet_eval(const FetModelCard& card, double vgs, double vds) {
    if (card.polarity == Polarity::N)
        return detail::square_law_n(card.k, card.vth, card.lambda, vgs, vds);
    const auto mirrored = detail::square_law_n(card.k, -card.vth, card.lambda, -vgs, -vds);
    // id_p(vgs, vds) = -id_n(-vgs, -vds); the chain rule flips the sign twice.
    return {-mirrored.id, mirrored.gm, mirrored.gds};
}

enum class IntegrationRule { BackwardEuler, Trapezoidal };

/// Discretized capacitor: i = geq * v + ieq, v being the branch voltage at the
/// new time point.
struct Companion {
    double geq = 0.0;
    double ieq = 0.0;

    [[nodiscard]] double current(double v) const { return geq * v + ieq; }
};

/// Companion model of a linear capacitor over a step of length h, given the
/// branch voltage and current at the previous accepted point.
inline Companion capacitor_companion(double c, double h, double v_prev, double i_prev,
                                     IntegrationRule rule) {
    if (c == 0.0) return {};
    if (rule == IntegrationRule::BackwardEuler) {
        const double g = c / h;
        return {g, -g * v_prev};
    }
    const double g = 2.0 * c / h;
    return {g, -g * v_prev - i_prev};
}

/// Terminal voltages of a FET (bulk does not enter the model).
struct FetTerminalVoltages {
    double vd = 0.0;
    double vg = 0.0;
    double vs = 0.0;
};

/// Previous-point currents through the two lumped capacitors.
struct FetChargeHistory {
    double i_gate_source = 0.0;
    double i_drain_ground = 0.0;
};

struct FetCompanions {
    Companion gate_source;   // branch voltage vg - vs
    Companion drain_ground;  // branch voltage vd
};

/// Companion pairs for the lumped gate-source and drain-ground capacitors.
inline FetCompanions fet_charge_currents(const FetModelCard& card,
                                         const FetTerminalVoltages& previous,
                                         const FetChargeHistory& history, double h,
                                         IntegrationRule rule) {
    if (!(h > 0.0)) throw InvalidArgument("fet_charge_currents: step must be > 0");
    return {capacitor_companion(card.cg, h, previous.vg - previous.vs, history.i_gate_source, rule),
            capacitor_companion(card.cd, h, previous.vd, history.i_drain_ground, rule)};
}

/// A named pair of N/P templates standing in for a process.
struct TechnologyCard {
    std::string name;
    FetModelCard nfet;
    FetModelCard pfet;
    std::string note;
};

inline constexpr std::array<std::string_view, 2> kPresetNames{"cmos32", "gnrfet32"};

// Calibrated by tools/calibrate_presets.cpp: cmos32 k is bisected until the
// geometric mean of the decoder rise time and the minimum-inverter rise time
// (vdd = 1.2 V, 1 fF loads) is 174.38 ps; that run gave 308 ps and 99 ps.
// gnrfet32 then takes 30x the drive and a quarter of the capacitance.
inline constexpr double kCmosK = 5.03e-5;
inline constexpr double kCmosCg = 0.4e-15;
inline constexpr double kCmosCd = 0.2e-15;
inline constexpr double kNominalVth = 0.3;
inline constexpr double kCmosLambda = 0.05;
inline constexpr double kGnrDriveRatio = 30.0;
inline constexpr double kGnrCapRatio = 4.0;

/// Symmetric N/P pair (equal k, mirrored thresholds) with the shared lambda.
inline TechnologyCard square_law_technology(std::string name, double k, double cg, double cd,
                                            std::string note, double vth = kNominalVth,
                                            double lambda = kCmosLambda) {
    TechnologyCard tech;
    tech.name = std::move(name);
    tech.nfet = {Polarity::N, vth, k, lambda, cg, cd};
    tech.pfet = {Polarity::P, -vth, k, lambda, cg, cd};
    tech.note = std::move(note);
    return tech;
}

/// Built-in technology cards. Throws InvalidArgument for unknown names.
inline TechnologyCard preset(std::string_view name) {
    if (name == "cmos32")
        return square_law_technology(
            "cmos32", kCmosK, kCmosCg, kCmosCd,
            "square-law surrogate; k=5.03e-5 bisected by tools/calibrate_presets.cpp so the "
            "geometric mean of decoder (308 ps) and minimum-inverter (99 ps) rise times at "
            "vdd=1.2 V, 1 fF load is 174.38 ps");
    if (name == "gnrfet32")
        return square_law_technology("gnrfet32", kGnrDriveRatio * kCmosK, kCmosCg / kGnrCapRatio,
                                     kCmosCd / kGnrCapRatio,
                                     "square-law surrogate; 30x cmos32 k, 1/4 of cmos32 cg and cd "
                                     "(tools/calibrate_presets.cpp)");
    throw InvalidArgument("unknown technology preset '" + std::string(name) + "'");
}

}  // namespace mvlsim
