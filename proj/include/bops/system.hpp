// SPDX-License-Identifier: MIT
#pragma once

#include "bops/common.hpp"
#include "bops/polynomial.hpp"
#include "bops/weight.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace bops {

// kappa_{n-1} times (xi_{n-1}, xi*_{n-1}, phibar_{n-1}(0), phi_{n-1}(0)).
struct PrevRow {
    cplx kxi, kxis, kphibar0, kphi0;
};

// Read access to a bi-orthogonal system: leading coefficients, polynomial
// coefficients and the associated functions.
class SystemView {
public:
    virtual ~SystemView() = default;
    virtual int n_max() const = 0;
    virtual cplx kappa(int n) const = 0;
    virtual const Polynomial& phi(int n) const = 0;
    virtual const Polynomial& phibar(int n) const = 0;
    virtual cplx xi(int n, cplx z) const = 0;
    virtual cplx xis(int n, cplx z) const = 0;

    cplx r(int n) const { return phi(n).coeff(0) / kappa(n); }
    cplx rbar(int n) const { return phibar(n).coeff(0) / kappa(n); }
    cplx phi_at(int n, cplx z) const { return n < 0 ? cplx{} : phi(n)(z); }
    cplx phis_at(int n, cplx z) const {
        if (n < 0) return 0.0;
        const auto& q = phibar(n).coeffs();
        cplx s = 0.0;
        for (std::size_t k = 0; k < q.size() && static_cast<int>(k) <= n; ++k) s = s * z + q[k];
        for (int k = static_cast<int>(q.size()); k <= n; ++k) s *= z;
        return s;
    }
    Polynomial phis(int n) const { return reciprocal(phibar(n).resized(n), n); }

    // Row n-1 data; the n = 0 case is the backward-recurrence seed of the
    // negative-index extension and is the same for every system.
    PrevRow prev(int n, cplx z) const {
        if (n == 0) {
            if (z == cplx{}) throw DomainError("prev: z = 0");
            return {2.0 / z, 2.0, 0.0, 0.0};
        }
        cplx k = kappa(n - 1);
        return {k * xi(n - 1, z), k * xis(n - 1, z), k * phibar(n - 1).coeff(0), k * phi(n - 1).coeff(0)};
    }

protected:
    void check_n(int n, const char* what) const {
        if (n < 0 || n > n_max())
            throw InputError(std::string(what) + ": degree " + std::to_string(n) + " outside 0.." + std::to_string(n_max()));
    }
};

using ViewPtr = std::shared_ptr<const SystemView>;

// Defaulted choices for the negative-index rows: kappa_{-N}, phi_{-N}(0), phibar_{-N}(0).
struct NegativeChoice {
    cplx kappa{1.0, 0.0};
    cplx phi0{};
    cplx phibar0{};
};

struct NegativeExtension {
    int n_min = 0;
    std::vector<NegativeChoice> rows;  // rows[N-1] describes index -N
};

inline double existence_threshold(cplx prev_det) { return 1e-13 * std::max(1.0, std::abs(prev_det)); }

inline MatX toeplitz_matrix(const FourierTable& t, int n) {
    MatX T(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) T(j, k) = t.at(j - k);
    return T;
}

inline cplx toeplitz_det(const FourierTable& t, int n) {
    if (n < 0) throw InputError("toeplitz_det: n must be nonnegative");
    if (n == 0) return 1.0;
    if (t.range() < n - 1)
        throw InputError("toeplitz_det: table range " + std::to_string(t.range()) + " does not cover |k| <= " + std::to_string(n - 1));
    return Eigen::PartialPivLU<MatX>(toeplitz_matrix(t, n)).determinant();
}

class BopsSystem final : public SystemView {
public:
    BopsSystem() = default;

    int n_max() const override { return n_max_; }
    cplx kappa(int n) const override {
        if (n < 0) return negative_row(n).kappa;
        check_n(n, "kappa");
        return kappa_[static_cast<std::size_t>(n)];
    }
    const Polynomial& phi(int n) const override {
        if (n < 0) return zero_;
        check_n(n, "phi");
        return phi_[static_cast<std::size_t>(n)];
    }
    const Polynomial& phibar(int n) const override {
        if (n < 0) return zero_;
        check_n(n, "phibar");
        return phibar_[static_cast<std::size_t>(n)];
    }

    // Unified kernel series: xi_n = 2 sum_{m>=0} c_m z^m inside and
    // -2 sum_{m>=1} c_{-m} z^{-m} outside, with c_m = sum_i phi_{n,i} w_{m-i};
    // xi*_n uses d_m built from phi*_n with the opposite split.
    cplx xi(int n, cplx z) const override {
        if (n < 0) return negative_xi(n, z).first;
        check_n(n, "xi");
        check_off_circle(z, "xi");
        const auto& c = cser_[static_cast<std::size_t>(n)];
        return std::abs(z) < 1.0 ? 2.0 * series_pos(c, z, 0) : -2.0 * series_neg(c, z, 1);
    }
    cplx xis(int n, cplx z) const override {
        if (n < 0) return negative_xi(n, z).second;
        check_n(n, "xis");
        check_off_circle(z, "xis");
        const auto& d = dser_[static_cast<std::size_t>(n)];
        return std::abs(z) < 1.0 ? -2.0 * series_pos(d, z, 1) : 2.0 * series_neg(d, z, 0);
    }

    // Second printed definition of xi*: -z^n times the kernel transform of w(zeta) phibar_n(1/zeta).
    cplx xis_alternative(int n, cplx z) const {
        check_n(n, "xis_alternative");
        check_off_circle(z, "xis_alternative");
        if (n == 0) return kappa_[0] * (table_.at(0) - caratheodory(table_, z));
        const auto& q = phibar_[static_cast<std::size_t>(n)];
        cplx s = 0.0;
        for (int j = 0; j <= n; ++j) {
            cplx qj = q.coeff(j);
            if (qj == cplx{}) continue;
            s += qj * kernel_shifted(-j, z);
        }
        return -ipow(z, n) * s;
    }

    cplx I(int n) const {
        if (n < 0 || n > n_max_ + 1) throw InputError("I: index out of range");
        return I_[static_cast<std::size_t>(n)];
    }
    const FourierTable& fourier() const { return table_; }
    const NegativeExtension& negative_ext() const { return neg_; }

    // Kernel series coefficient c_m (or d_m for the reciprocal family).
    cplx series_coeff(int n, int m, bool star) const {
        check_n(n, "series_coeff");
        const auto& v = star ? dser_[static_cast<std::size_t>(n)] : cser_[static_cast<std::size_t>(n)];
        int idx = m - s_min_;
        if (idx < 0 || idx >= static_cast<int>(v.size())) return 0.0;
        return v[static_cast<std::size_t>(idx)];
    }

    friend BopsSystem build_system(const FourierTable& table, int n_max);
    friend BopsSystem extend_negative(BopsSystem sys, int n_min, std::vector<NegativeChoice> choices);

private:
    static void check_off_circle(cplx z, const char* what) {
        if (on_circle(z)) throw DomainError(std::string(what) + ": |z| = 1");
    }
    cplx series_pos(const std::vector<cplx>& v, cplx z, int m0) const {
        cplx s = 0.0;
        int top = s_min_ + static_cast<int>(v.size()) - 1;
        for (int m = top; m >= m0; --m) s = s * z + v[static_cast<std::size_t>(m - s_min_)];
        return m0 == 0 ? s : s * ipow(z, m0);
    }
    cplx series_neg(const std::vector<cplx>& v, cplx z, int m0) const {
        cplx s = 0.0, zi = 1.0 / z;
        for (int m = -s_min_; m >= m0; --m) s = s * zi + v[static_cast<std::size_t>(-m - s_min_)];
        return m0 == 0 ? s : s * ipow(zi, m0);
    }
    // Kernel transform of w(zeta) zeta^s.
    cplx kernel_shifted(int s, cplx z) const {
        cplx acc = 0.0;
        if (std::abs(z) < 1.0) {
            for (int k = table_.k_max + std::abs(s) + 1; k >= 1; --k) acc = acc * z + table_.at(k - s);
            acc = 2.0 * (acc * z);
            return table_.at(-s) + acc;
        }
        cplx zi = 1.0 / z;
        for (int k = -table_.k_min + std::abs(s) + 1; k >= 1; --k) acc = acc * zi + table_.at(-k - s);
        acc = 2.0 * (acc * zi);
        return -table_.at(-s) - acc;
    }
    const NegativeChoice& negative_row(int n) const {
        int N = -n;
        if (N > static_cast<int>(neg_.rows.size()))
            throw InputError("negative index " + std::to_string(n) + " below the configured extension");
        return neg_.rows[static_cast<std::size_t>(N - 1)];
    }
    // Backward recurrence from row 0 down to row n < 0.
    std::pair<cplx, cplx> negative_xi(int n, cplx z) const {
        negative_row(n);
        if (z == cplx{}) throw DomainError("negative-index associated functions: z = 0");
        cplx x = xi(0, z), xs = xis(0, z);
        cplx k1 = kappa_[0], p0 = phi_[0].coeff(0), pb0 = phibar_[0].coeff(0);
        for (int m = -1; m >= n; --m) {
            const auto& row = neg_.rows[static_cast<std::size_t>(-m - 1)];
            cplx nx = (k1 * x + p0 * xs) / (row.kappa * z);
            cplx nxs = (pb0 * x + k1 * xs) / row.kappa;
            x = nx;
            xs = nxs;
            k1 = row.kappa;
            p0 = row.phi0;
            pb0 = row.phibar0;
        }
        return {x, xs};
    }

    int n_max_ = 0;
    FourierTable table_;
    std::vector<cplx> I_, kappa_;
    std::vector<Polynomial> phi_, phibar_;
    int s_min_ = 0;
    std::vector<std::vector<cplx>> cser_, dser_;
    NegativeExtension neg_;
    Polynomial zero_{};
};

inline BopsSystem build_system(const FourierTable& table, int n_max) {
    if (n_max < 0) throw InputError("build_system: n_max must be nonnegative");
    if (table.range() < n_max + 1)
        throw InputError("build_system: Fourier table range " + std::to_string(table.range()) + " too small for n_max " +
                         std::to_string(n_max));
    if (std::abs(table.at(0)) <= existence_threshold(1.0)) throw DegeneracyError("build_system: w_0 = 0, normalization impossible");
    BopsSystem s;
    s.n_max_ = n_max;
    s.table_ = table;
    s.I_.assign(static_cast<std::size_t>(n_max) + 2, 1.0);
    for (int n = 1; n <= n_max + 1; ++n) {
        cplx d = toeplitz_det(table, n);
        if (!(std::abs(d) > existence_threshold(s.I_[static_cast<std::size_t>(n - 1)])))
            throw DegeneracyError("build_system: Toeplitz determinant I_" + std::to_string(n) + " vanishes (system does not exist)");
        s.I_[static_cast<std::size_t>(n)] = d;
    }
    s.s_min_ = table.k_min;
    for (int n = 0; n <= n_max; ++n) {
        cplx k = std::sqrt(s.I_[static_cast<std::size_t>(n)] / s.I_[static_cast<std::size_t>(n) + 1]);
        MatX T(n + 1, n + 1);
        for (int m = 0; m <= n; ++m)
            for (int i = 0; i <= n; ++i) T(m, i) = table.at(m - i);
        VecX e = VecX::Zero(n + 1);
        e(n) = 1.0 / k;
        Eigen::PartialPivLU<MatX> lu(T);
        VecX p = lu.solve(e);
        Eigen::PartialPivLU<MatX> lut(T.transpose());
        VecX q = lut.solve(e);
        std::vector<cplx> pc(p.data(), p.data() + n + 1), qc(q.data(), q.data() + n + 1);
        s.kappa_.push_back(k);
        s.phi_.emplace_back(pc);
        s.phibar_.emplace_back(qc);
        // c_m = sum_i p_i w_{m-i}; d_m = sum_i s_i w_{m-i} with s the coefficients of phi*_n.
        int m_hi = table.k_max + n;
        std::vector<cplx> c(static_cast<std::size_t>(m_hi - s.s_min_ + 1)), d(c.size());
        for (int m = s.s_min_; m <= m_hi; ++m) {
            cplx cs = 0.0, ds = 0.0;
            for (int i = 0; i <= n; ++i) {
                cplx wk = table.at(m - i);
                cs += pc[static_cast<std::size_t>(i)] * wk;
                ds += qc[static_cast<std::size_t>(n - i)] * wk;
            }
            c[static_cast<std::size_t>(m - s.s_min_)] = cs;
            d[static_cast<std::size_t>(m - s.s_min_)] = ds;
        }
        s.cser_.push_back(std::move(c));
        s.dser_.push_back(std::move(d));
    }
    return s;
}

inline BopsSystem extend_negative(BopsSystem sys, int n_min, std::vector<NegativeChoice> choices = {}) {
    if (n_min >= 0) throw InputError("extend_negative: n_min must be negative");
    choices.resize(static_cast<std::size_t>(-n_min));
    for (std::size_t i = 0; i < choices.size(); ++i)
        if (std::abs(choices[i].kappa) == 0.0)
            throw DegeneracyError("extend_negative: kappa_{-" + std::to_string(i + 1) + "} must be nonzero");
    // phi_{-1}(0) = phibar_{-1}(0) = 0 is forced by the backward recurrence.
    choices[0].phi0 = 0.0;
    choices[0].phibar0 = 0.0;
    sys.neg_ = NegativeExtension{n_min, std::move(choices)};
    return sys;
}

inline BopsSystem build_system(const WeightSpec& w, int n_max, FourierOptions fo = {}) {
    fo.min_range = std::max(fo.min_range, n_max + 2);
    return build_system(fourier_coefficients(w, fo), n_max);
}

// ---------------------------------------------------------------------------
// Associated functions, Y matrix, recurrences.

struct AssociatedEval {
    cplx xi, xi_star, xi_star_alt;
};

inline AssociatedEval associated(const BopsSystem& s, int n, cplx z) {
    if (on_circle(z)) throw DomainError("associated: |z| = 1");
    if (n < 0) {
        cplx a = s.xi(n, z), b = s.xis(n, z);
        return {a, b, b};
    }
    return {s.xi(n, z), s.xis(n, z), s.xis_alternative(n, z)};
}

enum class Region { interior, exterior };

struct YEval {
    Mat2 entries;
    int n = 0;
    cplx z{};
    Region region = Region::interior;
    cplx weight{1.0};
};

inline Mat2 y_entries(const SystemView& s, int n, cplx z, cplx wz) {
    return mat2(s.phi_at(n, z), s.xi(n, z) / wz, s.phis_at(n, z), -s.xis(n, z) / wz);
}

inline YEval y_matrix(const SystemView& s, const WeightSpec& w, int n, cplx z) {
    if (on_circle(z)) throw DomainError("y_matrix: |z| = 1");
    cplx wz = evaluate_weight(w, z);
    if (wz == cplx{}) throw DomainError("y_matrix: w(z) = 0");
    return {y_entries(s, n, z, wz), n, z, std::abs(z) < 1.0 ? Region::interior : Region::exterior, wz};
}

inline double y_det_residual(const YEval& y) {
    cplx target = -2.0 * ipow(y.z, y.n) / y.weight;
    return std::abs(y.entries.determinant() - target) / std::max(1.0, std::abs(target));
}

inline Mat2 k_matrix(const SystemView& s, int n, cplx z) {
    cplx k = s.kappa(n), k1 = s.kappa(n + 1);
    if (k == cplx{}) throw DegeneracyError("k_matrix: kappa_n = 0");
    return mat2(k1 * z, s.phi(n + 1).coeff(0), s.phibar(n + 1).coeff(0) * z, k1) / k;
}

inline Mat2 k_matrix_derivative(const SystemView& s, int n) {
    return mat2(s.kappa(n + 1), 0.0, s.phibar(n + 1).coeff(0), 0.0) / s.kappa(n);
}

enum class Direction { forward, backward };

inline YEval recurrence_step(const SystemView& s, int n, Direction dir, const YEval& y) {
    cplx k = s.kappa(n);
    if (k == cplx{}) throw DegeneracyError("recurrence_step: kappa_n = 0");
    cplx k1 = s.kappa(n + 1), p0 = s.phi(n + 1).coeff(0), pb0 = s.phibar(n + 1).coeff(0);
    YEval out = y;
    if (dir == Direction::forward) {
        if (y.n != n) throw InputError("recurrence_step: forward step expects Y_n");
        out.entries = k_matrix(s, n, y.z) * y.entries;
        out.n = n + 1;
    } else {
        if (y.n != n + 1) throw InputError("recurrence_step: backward step expects Y_{n+1}");
        if (y.z == cplx{}) throw DomainError("recurrence_step: backward step requires z != 0");
        out.entries = mat2(k1 / y.z, -p0 / y.z, -pb0, k1) / k * y.entries;
        out.n = n;
    }
    // Rows below zero have phi = phi* = 0, so the determinant invariant only applies for n >= 0.
    if (out.n >= 0 && y_det_residual(out) > 1e-8) throw AccuracyError("recurrence_step: det Y invariant violated");
    return out;
}

inline cplx second_order_residual(const SystemView& s, int n, cplx z) {
    if (n < 1 || n > s.n_max() - 1) throw InputError("second_order_residual: requires 1 <= n <= n_max-1");
    cplx rn = s.r(n);
    if (std::abs(rn) < 1e-300) throw InputError("second_order_residual: r_n = 0, the relation is inapplicable");
    auto mon = [&](int m) { return s.phi_at(m, z) / s.kappa(m); };
    cplx q = s.r(n + 1) / rn;
    return mon(n + 1) - q * mon(n) - z * (mon(n) - q * (1.0 - rn * s.rbar(n)) * mon(n - 1));
}

struct CasoratianResiduals {
    cplx c1, c2, c3;
};

inline CasoratianResiduals casoratian_residuals(const SystemView& s, int n, cplx z) {
    cplx p = s.phi_at(n, z), p1 = s.phi_at(n + 1, z), ps = s.phis_at(n, z), ps1 = s.phis_at(n + 1, z);
    cplx x = s.xi(n, z), x1 = s.xi(n + 1, z), xs = s.xis(n, z), xs1 = s.xis(n + 1, z);
    cplx k = s.kappa(n), zn = ipow(z, n);
    return {p1 * x - x1 * p - 2.0 * s.phi(n + 1).coeff(0) / k * zn,
            ps1 * xs - xs1 * ps - 2.0 * s.phibar(n + 1).coeff(0) / k * zn * z,
            p * xs + x * ps - 2.0 * zn};
}

}  // namespace bops
