#include <gtest/gtest.h>

#include <random>

#include "mvlsim/circuit_library.hpp"
#include "mvlsim/experiment.hpp"
#include "mvlsim/parser.hpp"
#include "mvlsim/sim_engine.hpp"

using namespace mvlsim;

namespace {

CellSpec spec_for(const TechnologyCard& tech, double vdd = 1.2) {
    CellSpec s;
    s.tech = tech;
    s.map = LevelMap(4, vdd);
    return s;
}

// Settled DC output of a single-input cell with its input held at `vin`.
double dc_output(const Fragment& frag, const LevelMap& map, double vin) {
    const auto n = cell_netlist(frag, "cell", map, {{"in", DcStimulus{vin}}});
    return dc_operating_point(n).voltage("out");
}

int count_fets(const Netlist& n) {
    return static_cast<int>(std::count_if(n.devices.begin(), n.devices.end(),
                                          [](const Device& d) { return d.kind == DeviceKind::Fet; }));
}

}  // namespace

TEST(VlcThresholdRule, Examples) {
    const LevelMap three(4, 3.0), nominal(4, 1.2);
    const VlcThresholds expected3[] = {{0.2, -2.2}, {1.2, -1.2}, {2.2, -0.2}};
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(vlc_thresholds(i, three).vth_n, expected3[i].vth_n, 1e-12);
        EXPECT_NEAR(vlc_thresholds(i, three).vth_p, expected3[i].vth_p, 1e-12);
    }
    EXPECT_NEAR(vlc_thresholds(2, nominal).vth_n, 0.88, 1e-12);
    EXPECT_NEAR(vlc_thresholds(2, nominal).vth_p, -0.08, 1e-12);
    // Each VLC switches between its adjacent input levels: the n device turns on
    // above level(i) and the p device turns off below level(i+1).
    for (int i = 0; i < 3; ++i) {
        const auto th = vlc_thresholds(i, nominal);
        EXPECT_GT(th.vth_n, nominal.level(i));
        EXPECT_LT(th.vth_n, nominal.level(i + 1));
        EXPECT_GT(nominal.vdd() + th.vth_p, nominal.level(i));
        EXPECT_LT(nominal.vdd() + th.vth_p, nominal.level(i + 1));
    }
    EXPECT_THROW(vlc_thresholds(3, nominal), InvalidArgument);
}

TEST(Vlc, DcOutputsFollowConverterTable) {
    const int table[3][4] = {{3, 0, 0, 0}, {3, 3, 0, 0}, {3, 3, 3, 0}};
    for (auto name : kPresetNames) {
        for (double vdd : {1.2, 3.0}) {
            auto spec = spec_for(preset(name), vdd);
            for (int i = 0; i < 3; ++i) {
                const auto frag = build_vlc(i, spec);
                for (int x = 0; x < 4; ++x) {
                    const double v = dc_output(frag, spec.map, spec.map.level(x));
                    const auto q = quantize_value(v, spec.map);
                    ASSERT_TRUE(q) << name << " vdd=" << vdd << " vlc" << i + 1 << " x=" << x << " v=" << v;
                    EXPECT_EQ(q->value(), table[i][x]) << name << " vdd=" << vdd << " vlc" << i + 1;
                    EXPECT_TRUE(q->value() == 0 || q->value() == 3);
                }
            }
        }
    }
}

TEST(Vlc, FragmentsDifferOnlyInThresholds) {
    const auto spec = spec_for(preset("cmos32"));
    auto base = build_vlc(0, spec);
    for (int i = 1; i < 3; ++i) {
        auto other = build_vlc(i, spec);
        EXPECT_NE(other.models.at("vlcn").vth, base.models.at("vlcn").vth);
        EXPECT_NE(other.models.at("vlcp").vth, base.models.at("vlcp").vth);
        other.models.at("vlcn").vth = base.models.at("vlcn").vth;
        other.models.at("vlcp").vth = base.models.at("vlcp").vth;
        EXPECT_EQ(other, base);
    }
}

TEST(Inverter, DcRails) {
    for (auto name : kPresetNames) {
        const auto spec = spec_for(preset(name));
        const auto inv = build_inverter(spec);
        EXPECT_NEAR(dc_output(inv, spec.map, 0.0), 1.2, spec.map.guard());
        EXPECT_NEAR(dc_output(inv, spec.map, 1.2), 0.0, spec.map.guard());
    }
}

TEST(Xor2, TruthTableOnRails) {
    for (auto name : kPresetNames) {
        const auto spec = spec_for(preset(name));
        const auto x = build_xor2(spec);
        EXPECT_EQ(x.devices.size(), 13u);  // 12 FETs + load
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                const auto n = cell_netlist(x, "xor", spec.map,
                                            {{"a", DcStimulus{a * 1.2}}, {"b", DcStimulus{b * 1.2}}});
                const double v = dc_operating_point(n).voltage("out");
                EXPECT_NEAR(v, (a ^ b) * 1.2, spec.map.guard()) << name << ' ' << a << b;
            }
            // Both inputs tied to one source: x xor x = 0.
            auto tied = cell_netlist(x, "xor", spec.map, {{"a", DcStimulus{a * 1.2}}});
            for (auto& d : tied.devices)
                for (auto& t : d.terminals)
                    if (t == "b") t = "a";
            tied.nodes.erase(std::find(tied.nodes.begin(), tied.nodes.end(), "b"));
            EXPECT_NEAR(dc_operating_point(tied).voltage("out"), 0.0, spec.map.guard());
        }
    }
}

TEST(Decoder, TopologyAndCounts) {
    const auto n = build_decoder(spec_for(preset("cmos32")));
    EXPECT_EQ(count_fets(n), 36);  // 3 VLCs x 2, 3 inverters x 2, 2 XORs x 12
    EXPECT_NO_THROW(validate(n));
    for (const char* node : {"in", "vlc1", "vlc2", "vlc3", "inv1", "b1", "inv3", "x1", "b0", "vdd"})
        EXPECT_TRUE(n.node_index(node)) << node;
    int loads = 0;
    for (const auto& d : n.devices)
        if (d.kind == DeviceKind::Capacitor) {
            ++loads;
            EXPECT_TRUE(d.terminals[0] == "b1" || d.terminals[0] == "b0");
            EXPECT_EQ(d.param("c"), 1e-15);
        }
    EXPECT_EQ(loads, 2);
    EXPECT_THROW(build_decoder(CellSpec{CellKind::Decoder, 0, preset("cmos32"), LevelMap(3, 1.2)}),
                 InvalidArgument);
}

TEST(Staircase, Shape) {
    const LevelMap map;
    const auto pwl = staircase(map, 5e-9, 0.1e-9);
    ASSERT_EQ(pwl.points.size(), 8u);
    EXPECT_EQ(pwl.points.front(), (std::pair<double, double>{0.0, 0.0}));
    EXPECT_EQ(pwl.points.back().first, 20e-9);
    EXPECT_EQ(pwl.points.back().second, 1.2);
    EXPECT_NEAR(pwl.points[2].first, 5.1e-9, 1e-21);
    EXPECT_NEAR(pwl.points[2].second, 0.4, 1e-15);
    const auto tb = build_staircase_testbench(spec_for(preset("cmos32")));
    ASSERT_NE(tb.transient(), nullptr);
    EXPECT_EQ(tb.transient()->tstop, 20e-9);
    EXPECT_EQ(tb.measures.size(), 6u);
    const auto times = staircase_sample_times(map, 5e-9);
    const double expected[] = {4.5e-9, 9.5e-9, 14.5e-9, 19.5e-9};
    ASSERT_EQ(times.size(), 4u);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(times[k], expected[k], 1e-20);
    EXPECT_THROW(staircase(map, 1e-9, 1e-9), InvalidArgument);
}

TEST(Generated, NetlistsAreValidAndRoundTrip) {
    for (auto name : kPresetNames) {
        for (double vdd : {1.2, 3.0}) {
            const auto spec = spec_for(preset(name), vdd);
            for (const auto& n : {build_decoder(spec), build_staircase_testbench(spec)}) {
                EXPECT_NO_THROW(validate(n));
                EXPECT_EQ(parse(emit(n)), parse(emit(parse(emit(n)))));
                EXPECT_EQ(parse(emit(n)), n) << name;
            }
        }
    }
}

TEST(Generated, TestbenchOperatingPointConverges) {
    for (auto name : kPresetNames) EXPECT_NO_THROW(dc_operating_point(build_staircase_testbench(spec_for(preset(name)))));
}

TEST(Decoder, StaircaseDecodesOnPresets) {
    for (auto name : kPresetNames) {
        const auto run = run_decoder(spec_for(preset(name)));
        ASSERT_EQ(run.sampled.size(), 4u);
        for (int x = 0; x < 4; ++x) {
            ASSERT_TRUE(run.sampled[x]) << name << " x=" << x;
            EXPECT_EQ(*run.sampled[x], ideal_decode(Digit(x, 4))) << name << " x=" << x;
            EXPECT_EQ(run.sampled[x]->value(), x);
        }
        EXPECT_TRUE(run.logic_ok);
        EXPECT_TRUE(run.report);
    }
}

TEST(Decoder, LogicIndependentOfRandomTechnology) {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> logk(std::log(2e-5), std::log(2e-3)), vt(0.15, 0.5), lam(0.0, 0.1),
        cap(0.05e-15, 0.5e-15);
    for (int trial = 0; trial < 2; ++trial) {
        const double k = std::exp(logk(rng)), th = vt(rng), l = lam(rng);
        auto tech = square_law_technology("random" + std::to_string(trial), k, cap(rng), cap(rng), "", th, l);
        const auto run = run_decoder(spec_for(tech));
        EXPECT_TRUE(run.logic_ok) << "k=" << k << " vth=" << th << " lambda=" << l;
    }
}
