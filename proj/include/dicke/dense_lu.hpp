#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "dicke/scalar.hpp"

namespace dicke {

/// Gaussian elimination with partial pivoting over any field type used in this
/// library (double, DoubleDouble, MpFloat). Storage is column-major.
template <class S>
class DenseLu {
public:
    DenseLu(std::vector<S> a, int n) : lu_(std::move(a)), perm_(n), n_(n) {
        using std::abs;
        std::iota(perm_.begin(), perm_.end(), 0);
        norm1_ = 0.0;
        for (int j = 0; j < n_; ++j) {
            S col = ScalarTraits<S>::from(0.0);
            for (int i = 0; i < n_; ++i) col += abs(at(i, j));
            norm1_ = std::max(norm1_, ScalarTraits<S>::to_double(col));
        }
        for (int k = 0; k < n_; ++k) {
            int piv = k;
            S best = abs(at(k, k));
            for (int i = k + 1; i < n_; ++i) {
                S v = abs(at(i, k));
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (best == S(0.0)) {
                singular_ = true;
                return;
            }
            if (piv != k) {
                for (int j = 0; j < n_; ++j) std::swap(at(k, j), at(piv, j));
                std::swap(perm_[k], perm_[piv]);
            }
            const S inv = S(1.0) / at(k, k);
            for (int i = k + 1; i < n_; ++i) at(i, k) *= inv;
            for (int j = k + 1; j < n_; ++j) {
                const S ukj = at(k, j);
                if (ukj == S(0.0)) continue;
                for (int i = k + 1; i < n_; ++i) at(i, j) -= at(i, k) * ukj;
            }
        }
    }

    bool singular() const { return singular_; }
    int size() const { return n_; }
    double norm1() const { return norm1_; }

    /// Solves A x = b.
    std::vector<S> solve(const std::vector<S>& b) const {
        std::vector<S> x(n_);
        for (int i = 0; i < n_; ++i) x[i] = b[perm_[i]];
        for (int j = 0; j < n_; ++j) {
            const S xj = x[j];
            for (int i = j + 1; i < n_; ++i) x[i] -= at(i, j) * xj;
        }
        for (int j = n_ - 1; j >= 0; --j) {
            x[j] /= at(j, j);
            const S xj = x[j];
            for (int i = 0; i < j; ++i) x[i] -= at(i, j) * xj;
        }
        return x;
    }

    /// Solves A^T x = b.
    std::vector<S> solve_transpose(const std::vector<S>& b) const {
        std::vector<S> y(b);
        // U^T w = b
        for (int j = 0; j < n_; ++j) {
            S s = y[j];
            for (int i = 0; i < j; ++i) s -= at(i, j) * y[i];
            y[j] = s / at(j, j);
        }
        // L^T v = w
        for (int j = n_ - 1; j >= 0; --j) {
            S s = y[j];
            for (int i = j + 1; i < n_; ++i) s -= at(i, j) * y[i];
            y[j] = s;
        }
        std::vector<S> x(n_);
        for (int i = 0; i < n_; ++i) x[perm_[i]] = y[i];
        return x;
    }

    /// Lower bound on ||A^{-1}||_1 by Hager's method, refined with Higham's
    /// alternating-sign probe. Infinite when the factorization broke down.
    double inverse_norm1_estimate() const {
        using std::abs;
        if (singular_) return std::numeric_limits<double>::infinity();
        const S one = ScalarTraits<S>::from(1.0);
        std::vector<S> x(n_, one / ScalarTraits<S>::from(static_cast<double>(n_)));
        double estimate = 0.0;
        int last_j = -1;
        for (int iter = 0; iter < 5; ++iter) {
            const std::vector<S> y = solve(x);
            S y1 = ScalarTraits<S>::from(0.0);
            std::vector<S> sign(n_);
            for (int i = 0; i < n_; ++i) {
                y1 += abs(y[i]);
                sign[i] = y[i] < S(0.0) ? -one : one;
            }
            estimate = std::max(estimate, ScalarTraits<S>::to_double(y1));
            const std::vector<S> z = solve_transpose(sign);
            int j = 0;
            S zmax = abs(z[0]);
            S ztx = ScalarTraits<S>::from(0.0);
            for (int i = 0; i < n_; ++i) {
                ztx += z[i] * x[i];
                if (abs(z[i]) > zmax) {
                    zmax = abs(z[i]);
                    j = i;
                }
            }
            if (zmax <= ztx || j == last_j) break;
            last_j = j;
            std::fill(x.begin(), x.end(), ScalarTraits<S>::from(0.0));
            x[j] = one;
        }
        std::vector<S> b(n_);
        for (int i = 0; i < n_; ++i) {
            const double v = 1.0 + (n_ > 1 ? static_cast<double>(i) / (n_ - 1) : 0.0);
            b[i] = ScalarTraits<S>::from(i % 2 == 0 ? v : -v);
        }
        const std::vector<S> w = solve(b);
        S w1 = ScalarTraits<S>::from(0.0);
        for (const S& v : w) w1 += abs(v);
        estimate = std::max(estimate, 2.0 * ScalarTraits<S>::to_double(w1) / (3.0 * n_));
        return estimate;
    }

    double condition_estimate() const {
        if (singular_) return std::numeric_limits<double>::infinity();
        return norm1_ * inverse_norm1_estimate();
    }

private:
    S& at(int i, int j) { return lu_[static_cast<std::size_t>(j) * n_ + i]; }
    const S& at(int i, int j) const { return lu_[static_cast<std::size_t>(j) * n_ + i]; }

    std::vector<S> lu_;
    std::vector<int> perm_;
    int n_;
    double norm1_ = 0.0;
    bool singular_ = false;
};

}  // namespace dicke
