#include <gtest/gtest.h>

#include "mvlsim/mvl.hpp"

using namespace mvlsim;

namespace {

// D_i(x) written out directly: r - 1 when x <= i, else 0.
int vlc_oracle(int r, int i, int x) { return x <= i ? r - 1 : 0; }

}  // namespace

TEST(IdealVlc, MatchesDefinitionForSmallRadices) {
    for (int r = 2; r <= 5; ++r) {
        for (int i = 0; i <= r - 2; ++i) {
            int flips = 0;
            for (int x = 0; x < r; ++x) {
                const auto d = ideal_vlc(i, Digit(x, r));
                EXPECT_EQ(d.value(), vlc_oracle(r, i, x)) << r << ' ' << i << ' ' << x;
                EXPECT_EQ(d.radix(), r);
                EXPECT_TRUE(d.value() == 0 || d.value() == r - 1);
                if (x > 0 && d.value() != ideal_vlc(i, Digit(x - 1, r)).value()) {
                    ++flips;
                    EXPECT_EQ(x, i + 1);
                }
            }
            EXPECT_EQ(flips, 1);
        }
        EXPECT_THROW(ideal_vlc(r - 1, Digit(0, r)), InvalidArgument);
        EXPECT_THROW(ideal_vlc(-1, Digit(0, r)), InvalidArgument);
    }
}

TEST(IdealVlc, QuaternaryTable) {
    const int table[4][3] = {{3, 3, 3}, {0, 3, 3}, {0, 0, 3}, {0, 0, 0}};
    for (int x = 0; x < 4; ++x)
        for (int i = 0; i < 3; ++i) EXPECT_EQ(ideal_vlc(i, Digit(x, 4)).value(), table[x][i]);
}

TEST(Decode, IdealMatchesIntegerArithmetic) {
    for (int x = 0; x < 4; ++x) {
        const auto bits = ideal_decode(Digit(x, 4));
        EXPECT_EQ(bits.b1, x >> 1);
        EXPECT_EQ(bits.b0, x & 1);
        EXPECT_EQ(bits.value(), x);
    }
    EXPECT_EQ(ideal_decode(Digit(0, 4)), (DecodedBits{0, 0}));
    EXPECT_EQ(ideal_decode(Digit(3, 4)), (DecodedBits{1, 1}));
    EXPECT_EQ(ideal_decode(Digit(2, 4)), (DecodedBits{1, 0}));
}

TEST(Decode, GateLevelEqualsIdeal) {
    for (int x = 0; x < 4; ++x) EXPECT_EQ(gate_level_decode(Digit(x, 4)), ideal_decode(Digit(x, 4))) << x;
    EXPECT_EQ(gate_level_decode(Digit(1, 4)), (DecodedBits{0, 1}));
    EXPECT_EQ(gate_level_decode(Digit(0, 4)), (DecodedBits{0, 0}));
    EXPECT_THROW(ideal_decode(Digit(1, 3)), InvalidArgument);
}

TEST(DigitAndLevels, Invariants) {
    EXPECT_THROW(Digit(4, 4), InvalidArgument);
    EXPECT_THROW(Digit(0, 1), InvalidArgument);
    for (int r = 2; r <= 6; ++r) {
        for (double vdd : {1.2, 3.0, 0.7}) {
            const LevelMap map(r, vdd);
            EXPECT_EQ(map.level(0), 0.0);
            EXPECT_EQ(map.level(r - 1), vdd);
            for (int d = 1; d < r; ++d) EXPECT_GT(map.level(d), map.level(d - 1));
        }
    }
    EXPECT_THROW(LevelMap(4, 1.2, 0.2), InvalidArgument);
    EXPECT_THROW(LevelMap(4, 1.2, 0.0), InvalidArgument);
    EXPECT_THROW(LevelMap(4, -1.0), InvalidArgument);
    EXPECT_NEAR(LevelMap(4, 1.2).level(1), 0.4, 1e-15);
}

TEST(Quantize, GuardBand) {
    const LevelMap map(4, 1.2, 0.1);
    ASSERT_TRUE(quantize_value(1.19, map));
    EXPECT_EQ(quantize_value(1.19, map)->value(), 3);
    EXPECT_FALSE(quantize_value(0.6, map));
    EXPECT_FALSE(quantize_value(-0.2, map));
    for (int r = 2; r <= 5; ++r)
        for (double g : {1e-6, 0.05, 0.1})
            for (int d = 0; d < r; ++d) {
                const LevelMap m(r, 1.2, g);
                const auto q = quantize_value(m.level(d), m);
                ASSERT_TRUE(q);
                EXPECT_EQ(q->value(), d);
            }
}

TEST(Quantize, SamplesWaveform) {
    const LevelMap map;
    const Waveform wf({0.0, 1.0, 2.0, 3.0}, {0.0, 0.4, 0.8, 1.2});
    const std::vector<double> times{0.0, 1.0, 1.5, 3.0};
    const auto q = quantize(wf, map, times);
    ASSERT_EQ(q.size(), 4u);
    EXPECT_EQ(q[0]->value(), 0);
    EXPECT_EQ(q[1]->value(), 1);
    EXPECT_FALSE(q[2]);
    EXPECT_EQ(q[3]->value(), 3);
    const std::vector<double> outside{4.0};
    EXPECT_THROW(quantize(wf, map, outside), InvalidArgument);
}

TEST(TruthTable, Csv) {
    EXPECT_EQ(truth_table_csv(),
              "x,vlc1,vlc2,vlc3,b1,b0\n0,3,3,3,0,0\n1,0,3,3,0,1\n2,0,0,3,1,0\n3,0,0,0,1,1\n");
}
