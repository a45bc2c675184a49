#include <gtest/gtest.h>

#include <random>

#include "mvlsim/device_models.hpp"

using namespace mvlsim;

namespace {

FetModelCard ncard(double vth, double k = 1e-4, double lambda = 0.0) {
    return {Polarity::N, vth, k, lambda, 0.0, 0.0};
}

FetModelCard pcard(double vth, double k = 1e-4, double lambda = 0.0) {
    return {Polarity::P, vth, k, lambda, 0.0, 0.0};
}

double relerr(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30}); }

}  // namespace

TEST(FetEval, HandValues) {
    EXPECT_EQ(fet_eval(ncard(0.2), 0.1, 1.0).id, 0.0);
    EXPECT_NEAR(fet_eval(ncard(0.2), 1.2, 1.2).id, 5.0e-5, 1e-18);
    EXPECT_NEAR(fet_eval(ncard(0.2), 1.2, 0.5).id, 1e-4 * (1.0 * 0.5 - 0.125), 1e-18);
    const auto sat = fet_eval(ncard(0.2, 1e-4, 0.1), 1.2, 2.0);
    EXPECT_NEAR(sat.id, 0.5e-4 * 1.0 * 1.2, 1e-18);
    EXPECT_NEAR(sat.gm, 1e-4 * 1.0 * 1.2, 1e-18);
    EXPECT_NEAR(sat.gds, 0.5e-4 * 0.1, 1e-18);
}

TEST(FetEval, ZeroDrainSourceVoltageCarriesNoCurrent) {
    for (double vgs = -3.0; vgs <= 3.0; vgs += 0.05) {
        EXPECT_EQ(fet_eval(ncard(0.3, 1e-4, 0.05), vgs, 0.0).id, 0.0);
        EXPECT_EQ(fet_eval(pcard(-0.3, 1e-4, 0.05), vgs, 0.0).id, 0.0);
    }
}

TEST(FetEval, DerivativesMatchCentralDifferences) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> vth_d(0.05, 1.0), v(-3.0, 3.0), k_d(1e-6, 1e-3), lam_d(0.0, 0.2);
    int checked = 0;
    while (checked < 100) {
        const bool p = checked % 2;
        const double vt = vth_d(rng);
        const auto card = p ? pcard(-vt, k_d(rng), lam_d(rng)) : ncard(vt, k_d(rng), lam_d(rng));
        const double vgs = v(rng), vds = v(rng);
        // Stay clear of region boundaries where the derivative has a kink.
        const double s = p ? -1.0 : 1.0;
        const double vgs_n = s * vgs, vds_n = s * vds;
        const double vgs_eff = vds_n >= 0 ? vgs_n : vgs_n - vds_n;
        const double vov = vgs_eff - vt;
        if (vov < 0.05 || std::abs(std::abs(vds_n) - vov) < 0.05 || std::abs(vds_n) < 0.05) continue;
        const double h = 1e-6;
        const auto op = fet_eval(card, vgs, vds);
        const double gm_fd = (fet_eval(card, vgs + h, vds).id - fet_eval(card, vgs - h, vds).id) / (2 * h);
        const double gds_fd = (fet_eval(card, vgs, vds + h).id - fet_eval(card, vgs, vds - h).id) / (2 * h);
        EXPECT_LT(relerr(op.gm, gm_fd), 1e-6) << vgs << ' ' << vds;
        EXPECT_LT(relerr(op.gds, gds_fd), 1e-6) << vgs << ' ' << vds;
        ++checked;
    }
}

TEST(FetEval, ContinuousAcrossRegionBoundaries) {
    const double eps = 1e-9;
    for (double vov : {0.1, 0.5, 1.0, 2.0}) {
        const auto card = ncard(0.3);
        // triode / saturation edge at vds = vov
        const double below = fet_eval(card, 0.3 + vov, vov - eps).id;
        const double above = fet_eval(card, 0.3 + vov, vov + eps).id;
        EXPECT_LT(std::abs(above - below), 1e-15);
        // cutoff edge at vgs = vth
        for (double vds : {0.1, 1.0}) {
            const double off = fet_eval(card, 0.3 - eps, vds).id;
            const double on = fet_eval(card, 0.3 + eps, vds).id;
            EXPECT_LT(std::abs(on - off), 1e-15);
        }
    }
    // With channel-length modulation both region formulas agree exactly at the edge.
    const double k = 1e-4, lambda = 0.1, vov = 0.7;
    const double triode = k * (vov * vov - 0.5 * vov * vov) * (1 + lambda * vov);
    const double saturation = 0.5 * k * vov * vov * (1 + lambda * vov);
    EXPECT_NEAR(triode, saturation, 1e-20);
    const auto card = ncard(0.3, k, lambda);
    EXPECT_NEAR(fet_eval(card, 0.3 + vov, vov).id, saturation, 1e-18);
    const auto op = fet_eval(card, 0.3 + vov, vov);
    const double jump = std::abs(fet_eval(card, 0.3 + vov, vov + eps).id - fet_eval(card, 0.3 + vov, vov - eps).id);
    EXPECT_LE(jump, 2 * eps * op.gds * 1.01 + 1e-20);
}

TEST(FetEval, PolaritySymmetryIsExact) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> v(-3.0, 3.0), vt(0.0, 1.5), lam(0.0, 0.2);
    for (int i = 0; i < 1000; ++i) {
        const double th = vt(rng), l = lam(rng), vgs = v(rng), vds = v(rng);
        const auto n = fet_eval(ncard(th, 2e-4, l), vgs, vds);
        const auto p = fet_eval(pcard(-th, 2e-4, l), -vgs, -vds);
        EXPECT_EQ(p.id, -n.id);
        EXPECT_EQ(p.gm, n.gm);
        EXPECT_EQ(p.gds, n.gds);
    }
}

TEST(FetEval, DrainSourceSwapIsAntisymmetric) {
    // Swapping drain and source with the gate fixed reverses the current.
    const auto card = ncard(0.3, 1e-4, 0.05);
    for (double vgs : {0.0, 0.5, 1.2}) {
        for (double vds : {0.1, 0.4, 1.2}) {
            const auto fwd = fet_eval(card, vgs, vds);
            const auto rev = fet_eval(card, vgs - vds, -vds);
            EXPECT_DOUBLE_EQ(rev.id, -fwd.id);
        }
    }
}

TEST(FetEval, MonotoneInGateVoltage) {
    const auto card = ncard(0.3, 1e-4, 0.0);
    for (double vds : {0.0, 0.1, 0.6, 1.2, 3.0}) {
        double prev = -1.0;
        for (double vgs = -1.0; vgs <= 3.0; vgs += 0.01) {
            const double id = fet_eval(card, vgs, vds).id;
            EXPECT_GE(id, prev);
            prev = id;
        }
    }
}

TEST(Companion, ZeroCapacitanceGivesZeroCurrent) {
    FetModelCard card = ncard(0.3);
    const auto comp = fet_charge_currents(card, {1.0, 0.5, 0.0}, {1e-6, 1e-6}, 1e-12, IntegrationRule::Trapezoidal);
    EXPECT_EQ(comp.gate_source.current(0.7), 0.0);
    EXPECT_EQ(comp.drain_ground.current(0.2), 0.0);
}

TEST(Companion, ConstantVoltageGivesZeroCurrent) {
    for (auto rule : {IntegrationRule::BackwardEuler, IntegrationRule::Trapezoidal}) {
        const auto c = capacitor_companion(1e-15, 1e-12, 0.8, 0.0, rule);
        EXPECT_EQ(c.current(0.8), 0.0);
    }
    FetModelCard card = ncard(0.3);
    card.cg = 1e-15;
    card.cd = 2e-15;
    const FetTerminalVoltages v{1.1, 0.7, 0.2};
    const auto comp = fet_charge_currents(card, v, {}, 1e-12, IntegrationRule::BackwardEuler);
    EXPECT_EQ(comp.gate_source.current(v.vg - v.vs), 0.0);
    EXPECT_EQ(comp.drain_ground.current(v.vd), 0.0);
}

TEST(Companion, LinearRampCurrent) {
    // 1 fF ramped 0 -> 1.2 V over 1 ns, one 1 ps backward Euler step mid-ramp.
    const double slope = 1.2 / 1e-9, h = 1e-12;
    const double v0 = 0.6, v1 = v0 + slope * h;
    const auto c = capacitor_companion(1e-15, h, v0, 0.0, IntegrationRule::BackwardEuler);
    EXPECT_NEAR(c.current(v1), 1.2e-6, 1e-15);
    // Trapezoidal with the exact previous current reproduces C dv/dt as well.
    const auto t = capacitor_companion(1e-15, h, v0, 1.2e-6, IntegrationRule::Trapezoidal);
    EXPECT_NEAR(t.current(v1), 1.2e-6, 1e-15);
}

TEST(Companion, RejectsNonPositiveStep) {
    EXPECT_THROW(fet_charge_currents(ncard(0.3), {}, {}, 0.0, IntegrationRule::BackwardEuler), InvalidArgument);
}

TEST(Presets, OrderingAndValidity) {
    const auto cmos = preset("cmos32");
    const auto gnr = preset("gnrfet32");
    EXPECT_LT(cmos.nfet.k, gnr.nfet.k);
    EXPECT_LT(cmos.pfet.k, gnr.pfet.k);
    EXPECT_GT(cmos.nfet.cg, gnr.nfet.cg);
    for (const auto& t : {cmos, gnr}) {
        EXPECT_NO_THROW(validate(t.nfet));
        EXPECT_NO_THROW(validate(t.pfet));
        EXPECT_EQ(t.nfet.polarity, Polarity::N);
        EXPECT_EQ(t.pfet.polarity, Polarity::P);
        EXPECT_EQ(t.nfet.vth, -t.pfet.vth);
    }
    EXPECT_THROW(preset("bogus"), InvalidArgument);
}

TEST(ModelCard, InvariantViolationsRejected) {
    EXPECT_THROW(validate(ncard(-0.1)), InvalidArgument);
    EXPECT_THROW(validate(pcard(0.1)), InvalidArgument);
    EXPECT_THROW(validate(ncard(0.3, 0.0)), InvalidArgument);
    EXPECT_THROW(validate(ncard(0.3, 1e-4, -0.1)), InvalidArgument);
    auto c = ncard(0.3);
    c.cg = -1e-15;
    EXPECT_THROW(validate(c), InvalidArgument);
}
