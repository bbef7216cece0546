// SPDX-License-Identifier: MIT
#pragma once

#include "bops/common.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace bops {

// Dense polynomial with complex coefficients in ascending powers of z.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<cplx> c) : c_(std::move(c)) {}

    static Polynomial monomial(int degree, cplx coeff = 1.0) {
        std::vector<cplx> c(static_cast<std::size_t>(degree) + 1, 0.0);
        c.back() = coeff;
        return Polynomial(std::move(c));
    }

    const std::vector<cplx>& coeffs() const { return c_; }
    std::size_t size() const { return c_.size(); }
    cplx coeff(int k) const {
        return (k >= 0 && static_cast<std::size_t>(k) < c_.size()) ? c_[static_cast<std::size_t>(k)] : cplx{};
    }

    // Index of the highest nonzero coefficient, -1 for the zero polynomial.
    int degree() const {
        for (int k = static_cast<int>(c_.size()) - 1; k >= 0; --k)
            if (c_[static_cast<std::size_t>(k)] != cplx{}) return k;
        return -1;
    }

    cplx operator()(cplx z) const {
        cplx s = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * z + *it;
        return s;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial({0.0});
        std::vector<cplx> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
        return Polynomial(std::move(d));
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    Polynomial& operator*=(cplx s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator*(cplx s, Polynomial a) { return a *= s; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a += (-1.0) * b; }

    // Multiply by z^k (k >= 0).
    Polynomial shifted(int k) const {
        std::vector<cplx> c(static_cast<std::size_t>(k), 0.0);
        c.insert(c.end(), c_.begin(), c_.end());
        return Polynomial(std::move(c));
    }

    // Pad or truncate to exactly n+1 coefficients.
    Polynomial resized(int n) const {
        std::vector<cplx> c = c_;
        c.resize(static_cast<std::size_t>(n) + 1, 0.0);
        return Polynomial(std::move(c));
    }

    // Exact quotient by (z - a). Runs the deflation in the numerically stable
    // direction; the discarded remainder is returned through `remainder`.
    Polynomial divide_linear(cplx a, cplx* remainder = nullptr) const {
        int d = degree();
        if (d <= 0) {
            if (remainder) *remainder = coeff(0);
            return Polynomial({0.0});
        }
        std::vector<cplx> q(static_cast<std::size_t>(d), 0.0);
        cplx rem;
        if (std::abs(a) <= 1.0) {
            cplx acc = 0.0;
            for (int i = d; i >= 1; --i) {
                acc = c_[static_cast<std::size_t>(i)] + a * acc;
                q[static_cast<std::size_t>(i - 1)] = acc;
            }
            rem = c_[0] + a * acc;
        } else {
            cplx prev = 0.0;
            for (int i = 0; i < d; ++i) {
                q[static_cast<std::size_t>(i)] = (prev - c_[static_cast<std::size_t>(i)]) / a;
                prev = q[static_cast<std::size_t>(i)];
            }
            rem = c_[static_cast<std::size_t>(d)] - prev;
        }
        if (remainder) *remainder = rem;
        return Polynomial(std::move(q));
    }

private:
    std::vector<cplx> c_{0.0};
};

// z^n p(1/z) in the degree-n frame.
inline Polynomial reciprocal(const Polynomial& p, int n) {
    if (p.degree() > n) throw InputError("reciprocal: polynomial degree exceeds frame degree " + std::to_string(n));
    std::vector<cplx> c(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k <= n; ++k) c[static_cast<std::size_t>(n - k)] = p.coeff(k);
    return Polynomial(std::move(c));
}

}  // namespace bops
