#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mvlsim/error.hpp"

namespace mvlsim {

/// Row-major dense square matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Maximum absolute row sum.
    [[nodiscard]] double norm_inf() const {
        double best = 0.0;
        for (std::size_t r = 0; r < n_; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < n_; ++c) sum += std::abs((*this)(r, c));
            best = std::max(best, sum);
        }
        return best;
    }

    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t r = 0; r < n_; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < n_; ++c) acc += (*this)(r, c) * x[c];
            y[r] = acc;
        }
        return y;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// In-place LU factorization with partial (row) pivoting: P A = L U, L unit lower.
class LuFactorization {
public:
    static constexpr double kPivotThreshold = 1e-14;

    explicit LuFactorization(DenseMatrix a) : lu_(std::move(a)), perm_(lu_.size()) {
        const std::size_t n = lu_.size();
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        const double tiny = kPivotThreshold * lu_.norm_inf();
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t pivot = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t r = k + 1; r < n; ++r) {
                const double v = std::abs(lu_(r, k));
                if (v > best) {
                    best = v;
                    pivot = r;
                }
            }
            if (!(best > tiny))
                throw SingularMatrix(k, "singular matrix: zero pivot at index " + std::to_string(k));
            if (pivot != k) {
                for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
                std::swap(perm_[k], perm_[pivot]);
            }
            const double inv = 1.0 / lu_(k, k);
            for (std::size_t r = k + 1; r < n; ++r) {
                const double f = lu_(r, k) * inv;
                if (f == 0.0) continue;
                lu_(r, k) = f;
                for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
            }
        }
    }

    [[nodiscard]] std::vector<double> solve(std::span<const double> b) const {
        const std::size_t n = lu_.size();
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = b[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x[j];
            x[i] = acc;
        }
        for (std::size_t i = n; i-- > 0;) {
            double acc = x[i];
            for (std::size_t j = i + 1; j < n; ++j) acc -= lu_(i, j) * x[j];
            x[i] = acc / lu_(i, i);
        }
        return x;
    }

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
};

/// Solves A x = b. Throws SingularMatrix (with the failing pivot index) when a
/// pivot falls below 1e-14 * ||A||_inf.
inline std::vector<double> solve_linear(const DenseMatrix& a, std::span<const double> b) {
    if (b.size() != a.size()) throw InvalidArgument("solve_linear: dimension mismatch");
    return LuFactorization(a).solve(b);
}

}  // namespace mvlsim
