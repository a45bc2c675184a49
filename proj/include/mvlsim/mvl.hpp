#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvlsim/error.hpp"
#include "mvlsim/waveform.hpp"

namespace mvlsim {

/// A digit of radix r: 0 <= value <= r - 1, r >= 2.
class Digit {
public:
    Digit(int value, int radix) : value_(value), radix_(radix) {
        if (radix < 2) throw InvalidArgument("digit radix must be >= 2");
        if (value < 0 || value > radix - 1)
            throw InvalidArgument("digit " + std::to_string(value) + " out of range for radix " +
                                  std::to_string(radix));
    }

    [[nodiscard]] int value() const noexcept { return value_; }
    [[nodiscard]] int radix() const noexcept { return radix_; }
    bool operator==(const Digit&) const = default;

private:
    int value_;
    int radix_;
};

/// Evenly spaced voltage levels: level(d) = d * vdd / (r - 1), guard band g
/// (default a quarter of the spacing).
class LevelMap {
public:
    explicit LevelMap(int radix = 4, double vdd = 1.2, std::optional<double> guard = std::nullopt)
        : radix_(radix), vdd_(vdd) {
        if (radix < 2) throw InvalidArgument("level map radix must be >= 2");
        if (!(vdd > 0.0) || !std::isfinite(vdd)) throw InvalidArgument("level map vdd must be > 0");
        guard_ = guard.value_or(spacing() / 4.0);
        if (!(guard_ > 0.0) || !(guard_ < spacing() / 2.0))
            throw InvalidArgument("guard band must satisfy 0 < g < spacing / 2");
    }

    [[nodiscard]] int radix() const noexcept { return radix_; }
    [[nodiscard]] double vdd() const noexcept { return vdd_; }
    [[nodiscard]] double guard() const noexcept { return guard_; }
    [[nodiscard]] double spacing() const noexcept { return vdd_ / (radix_ - 1); }

    [[nodiscard]] double level(int d) const {
        if (d < 0 || d > radix_ - 1) throw InvalidArgument("level: digit out of range");
        if (d == radix_ - 1) return vdd_;
        return d * vdd_ / (radix_ - 1);
    }
    [[nodiscard]] double level(const Digit& d) const { return level(d.value()); }

private:
    int radix_;
    double vdd_;
    double guard_ = 0.0;
};

/// Voltage level converter D_i(x): r - 1 when x <= i, else 0; 0 <= i <= r - 2.
inline Digit ideal_vlc(int i, const Digit& x) {
    if (i < 0 || i > x.radix() - 2)
        throw InvalidArgument("VLC index " + std::to_string(i) + " out of range");
    return Digit(x.value() <= i ? x.radix() - 1 : 0, x.radix());
}

struct DecodedBits {
    int b1 = 0;
    int b0 = 0;
    bool operator==(const DecodedBits&) const = default;
    [[nodiscard]] int value() const noexcept { return 2 * b1 + b0; }
};

inline void require_quaternary(const Digit& x) {
    if (x.radix() != 4) throw InvalidArgument("decoder requires radix 4");
}

inline DecodedBits ideal_decode(const Digit& x) {
    require_quaternary(x);
    return {x.value() / 2, x.value() % 2};
}

/// Decode through the VLC / inverter / XOR structure the transistor netlist uses:
/// b1 = NOT v1, b0 = (NOT v0) XOR (NOT v1) XOR (NOT v2), with v_i = [D_i(x) high].
inline DecodedBits gate_level_decode(const Digit& x) {
    require_quaternary(x);
    bool v[3];
    for (int i = 0; i < 3; ++i) v[i] = ideal_vlc(i, x).value() == x.radix() - 1;
    const bool n0 = !v[0], n1 = !v[1], n2 = !v[2];
    return {n1 ? 1 : 0, ((n0 != n1) != n2) ? 1 : 0};
}

/// The digit whose guard band holds `v`, if exactly one does.
inline std::optional<Digit> quantize_value(double v, const LevelMap& map) {
    std::optional<Digit> hit;
    for (int d = 0; d < map.radix(); ++d) {
        if (std::abs(v - map.level(d)) <= map.guard()) {
            if (hit) return std::nullopt;
            hit = Digit(d, map.radix());
        }
    }
    return hit;
}

/// Samples `wf` (linear interpolation) at each time and quantizes; nullopt marks
/// an invalid (out-of-guard-band) sample. Throws InvalidArgument for times
/// outside the waveform.
inline std::vector<std::optional<Digit>> quantize(const Waveform& wf, const LevelMap& map,
                                                  std::span<const double> sample_times) {
    std::vector<std::optional<Digit>> out;
    out.reserve(sample_times.size());
    for (double t : sample_times) out.push_back(quantize_value(wf.value_at(t), map));
    return out;
}

/// Quaternary truth table as CSV: x,vlc1,vlc2,vlc3,b1,b0.
inline std::string truth_table_csv() {
    std::string out = "x,vlc1,vlc2,vlc3,b1,b0\n";
    for (int x = 0; x < 4; ++x) {
        const Digit d(x, 4);
        const auto bits = gate_level_decode(d);
        out += std::to_string(x);
        for (int i = 0; i < 3; ++i) out += "," + std::to_string(ideal_vlc(i, d).value());
        out += "," + std::to_string(bits.b1) + "," + std::to_string(bits.b0) + "\n";
    }
    return out;
}

}  // namespace mvlsim
