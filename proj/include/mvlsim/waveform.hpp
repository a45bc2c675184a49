#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mvlsim/error.hpp"

namespace mvlsim {

/// A sampled signal: strictly increasing times, finite values, at least two samples.
class Waveform {
public:
    Waveform(std::vector<double> time, std::vector<double> values)
        : time_(std::move(time)), values_(std::move(values)) {
        if (time_.size() != values_.size()) throw InvalidArgument("waveform: axis/value size mismatch");
        if (time_.size() < 2) throw InvalidArgument("waveform: need at least two samples");
        for (std::size_t i = 0; i < time_.size(); ++i) {
            if (!std::isfinite(time_[i]) || !std::isfinite(values_[i]))
                throw InvalidArgument("waveform: non-finite sample");
            if (i > 0 && !(time_[i] > time_[i - 1]))
                throw InvalidArgument("waveform: time must be strictly increasing");
        }
    }

    [[nodiscard]] const std::vector<double>& time() const noexcept { return time_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return time_.size(); }
    [[nodiscard]] double start() const noexcept { return time_.front(); }
    [[nodiscard]] double stop() const noexcept { return time_.back(); }

    /// Linear interpolation; throws InvalidArgument outside [start, stop].
    [[nodiscard]] double value_at(double t) const {
        if (!(t >= start() && t <= stop()))
            throw InvalidArgument("waveform: sample time " + std::to_string(t) + " out of range");
        auto hi = std::lower_bound(time_.begin(), time_.end(), t);
        const auto j = static_cast<std::size_t>(hi - time_.begin());
        if (time_[j] == t) return values_[j];
        const double frac = (t - time_[j - 1]) / (time_[j] - time_[j - 1]);
        return values_[j - 1] + frac * (values_[j] - values_[j - 1]);
    }

private:
    std::vector<double> time_;
    std::vector<double> values_;
};

}  // namespace mvlsim
