// SPDX-License-Identifier: MIT
#pragma once

#include "bops/cgu.hpp"
#include "bops/semiclassical.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bops {

// Integer exponent shifts rho_j -> rho_j + shifts[j] for j = 0..M, plus a
// change of the determinant size.
struct ExponentShift {
    std::vector<int> shifts;
    int n_shift = 0;
};

inline int singularity_count(const WeightSpec& w) {
    int m = 0;
    for (const auto& f : w.factors)
        if (f.kind != FactorKind::monomial) ++m;
    return m;
}

// Finite singularities follow the factor order; rho_0 moves through the
// monomial exponent, and a conjugated factor carries the monomial with it so
// that rho_0 is unchanged by a finite shift.
inline WeightSpec shift_exponents(const WeightSpec& w, const std::vector<int>& shifts) {
    if (w.base_fourier || w.rational_mod) throw InputError("shift_exponents: requires a factor-based weight");
    if (static_cast<int>(shifts.size()) != singularity_count(w) + 1)
        throw InputError("shift_exponents: expected one shift per singularity including the origin");
    WeightSpec out = w;
    int mono = shifts[0];
    std::size_t j = 1;
    for (auto& f : out.factors) {
        if (f.kind == FactorKind::monomial) continue;
        int s = shifts[j++];
        f.exponent += static_cast<double>(s);
        if (f.kind == FactorKind::conjugated) mono += s;
    }
    detail::add_monomial(out.factors, mono);
    validate_weight(out);
    return out;
}

inline SemiClassicalData shifted_data(const SemiClassicalData& d, int j, int delta) {
    std::vector<Singularity> fin(d.sing.begin() + 1, d.sing.end());
    cplx rho0 = d.rho(0);
    if (j == 0)
        rho0 += static_cast<double>(delta);
    else
        fin[static_cast<std::size_t>(j - 1)].rho += static_cast<double>(delta);
    return make_semiclassical(fin, rho0);
}

namespace detail {

inline cplx finite_point(const SemiClassicalData& d, int j, const char* what) {
    require_semiclassical(d, what);
    if (j < 1 || j > d.M()) throw InputError(std::string(what) + ": j must index a finite singularity");
    if (d.z(j) == cplx{}) throw InputError(std::string(what) + ": z_j must be nonzero");
    return d.z(j);
}

inline void check_direction(int dir, const char* what) {
    if (dir != 1 && dir != -1) throw InputError(std::string(what) + ": direction must be +1 or -1");
}

inline GenKind kind_of(int dir) { return dir > 0 ? GenKind::K1 : GenKind::L1; }

}  // namespace detail

struct SchlesingerMatrix : GeneratorMatrix {
    int j = 0;
    int direction = 1;
};

inline SchlesingerMatrix schlesinger_matrix(const SystemView& s, const SemiClassicalData& d, int j, int dir, int n) {
    detail::check_direction(dir, "schlesinger_matrix");
    cplx zj = detail::finite_point(d, j, "schlesinger_matrix");
    SchlesingerMatrix R;
    if (dir > 0) {
        static_cast<GeneratorMatrix&>(R) = generator(s, GenKind::K1, zj, n);
    } else {
        auto t = transformed_coeffs(s, GenKind::L1, zj, n);
        cplx k = s.kappa(n), x = s.xi(n, zj), xs = s.xis(n, zj), kxs = s.prev(n, zj).kxis;
        cplx c = k * xs / kxs;
        R.kind = GenKind::L1;
        R.location = zj;
        R.n = n;
        R.coeffs = t;
        R.scale = t.kappa / k;
        R.denom = GeneratorMatrix::Denominator::one;
        R.U = mat2(c, k * x / kxs, 0.0, 1.0);
        R.V = mat2(0.0, 0.0, s.phibar(n).coeff(0) * xs / (kxs * zj), -c / zj);
    }
    R.j = j;
    R.direction = dir;
    return R;
}

inline Mat2 schlesinger_inverse(const SystemView& s, const SemiClassicalData& d, int j, int dir, int n, cplx z) {
    detail::check_direction(dir, "schlesinger_inverse");
    return generator_inverse(s, detail::kind_of(dir), detail::finite_point(d, j, "schlesinger_inverse"), n, z);
}

// The shifted system realized by the Schlesinger matrix itself.
inline ViewPtr schlesinger_view(ViewPtr s, const SemiClassicalData& d, int j, int dir) {
    detail::check_direction(dir, "schlesinger_view");
    return std::make_shared<TransformedView>(std::move(s), detail::kind_of(dir), detail::finite_point(d, j, "schlesinger_view"));
}

// ---------------------------------------------------------------------------
// Shifted leading coefficients.

struct ShiftedCoeffs {
    cplx kappa_sq, kappa, r, rbar;
    bool has_theta_form = false;
    cplx kappa_sq_theta, r_theta, rbar_theta;
    double form_residual = 0.0;
};

inline ShiftedCoeffs shifted_coeffs(const SystemView& s, const SemiClassicalData& d, int j, int dir, int n) {
    detail::check_direction(dir, "shifted_coeffs");
    cplx zj = detail::finite_point(d, j, "shifted_coeffs");
    auto t = transformed_coeffs(s, detail::kind_of(dir), zj, n);
    ShiftedCoeffs out;
    out.kappa_sq = t.kappa_sq;
    out.kappa = t.kappa;
    out.r = t.r;
    out.rbar = t.rbar;
    if (dir < 0 && n == 0) return out;
    int m = dir > 0 ? n : n - 1;
    auto b = bilinear_products(s, d, m, j);
    cplx V = b.V_at;
    if (dir > 0) {
        cplx k = s.kappa(n), k1 = s.kappa(n + 1), p0 = s.phi(n).coeff(0), f0 = s.phi(n + 1).coeff(0);
        cplx fb0 = s.phibar(n + 1).coeff(0);
        out.kappa_sq_theta = -k1 * k * b.Theta / (b.Omega + V);
        out.r_theta = p0 / k1 * (b.Omega + V - f0 / p0 * b.Theta) / (zj * b.Theta);
        out.rbar_theta = fb0 / k * zj * b.ThetaStar / (b.OmegaStar - V - k1 / k * b.ThetaStar);
    } else {
        cplx k = s.kappa(n), km = s.kappa(n - 1), p0 = s.phi(n).coeff(0), pb0 = s.phibar(n).coeff(0);
        cplx pbm0 = s.phibar(n - 1).coeff(0);
        out.kappa_sq_theta = -k * km * zj * b.ThetaStar / (b.OmegaStar + V);
        out.r_theta = -p0 / km * zj * b.Theta / (b.Omega - V - k / km * zj * b.Theta);
        out.rbar_theta = -pbm0 / k * (b.OmegaStar + V - pb0 / pbm0 * zj * b.ThetaStar) / (zj * b.ThetaStar);
    }
    out.has_theta_form = true;
    out.form_residual = std::max({rel_diff(out.kappa_sq, out.kappa_sq_theta), rel_diff(out.r, out.r_theta),
                                  rel_diff(out.rbar, out.rbar_theta)});
    return out;
}

// ---------------------------------------------------------------------------
// Shifted evaluations at the singular points.

struct ShiftedEvaluation {
    int k = 0;
    cplx z;
    cplx phi, phis, xi, xis;
};

namespace detail {

inline std::vector<PointEval> singular_evals(const SystemView& s, const SemiClassicalData& d, int n) {
    std::vector<PointEval> ev(static_cast<std::size_t>(d.M()) + 1);
    for (int k = 1; k <= d.M(); ++k) ev[static_cast<std::size_t>(k)] = point_eval(s, n, d.z(k));
    return ev;
}

inline void require_exponent(cplx v, const char* what) {
    if (!(std::abs(v) > 1e-14)) throw DegeneracyError(std::string(what) + ": shifted exponent vanishes");
}

}  // namespace detail

// T sums for the evaluation of the shifted system at z_j itself.
inline cplx shifted_t_sum(const SystemView& s, const SemiClassicalData& d, int j, int dir, int n) {
    detail::check_direction(dir, "shifted_t_sum");
    cplx zj = detail::finite_point(d, j, "shifted_t_sum");
    cplx denom = d.rho(j) + static_cast<double>(dir);
    detail::require_exponent(denom, "shifted_t_sum");
    auto ev = detail::singular_evals(s, d, n);
    const auto& e = ev[static_cast<std::size_t>(j)];
    double nd = static_cast<double>(n);
    cplx r = s.r(n), sum = 0.0;
    for (int k = 1; k <= d.M(); ++k) {
        if (k == j) continue;
        const auto& f = ev[static_cast<std::size_t>(k)];
        cplx zk = d.z(k), c = d.rho(k) / (2.0 * ipow(zk, n)) / (zj - zk);
        if (dir > 0)
            sum += c * (e.phi * f.phis - e.phis * f.phi) * (e.phi * f.xis + e.phis * f.xi);
        else
            sum += c * (e.xi * f.xis - e.xis * f.xi) * (e.xis * f.phi + e.xi * f.phis);
    }
    if (dir > 0)
        sum -= (nd - d.rho(0)) * (e.phi - r * e.phis) * e.phis / zj;
    else
        sum += (nd - d.rho(0)) * (e.xi + r * e.xis) * e.xis / zj;
    return sum / denom;
}

inline std::vector<ShiftedEvaluation> shifted_evaluations(const SystemView& s, const SemiClassicalData& d, int j, int dir,
                                                          int n) {
    detail::check_direction(dir, "shifted_evaluations");
    cplx zj = detail::finite_point(d, j, "shifted_evaluations");
    auto t = transformed_coeffs(s, detail::kind_of(dir), zj, n);
    cplx kn = t.kappa, k = s.kappa(n), zn = ipow(zj, n);
    cplx T = shifted_t_sum(s, d, j, dir, n);
    std::vector<ShiftedEvaluation> out;
    if (dir > 0) {
        cplx k1 = s.kappa(n + 1), f0 = s.phi(n + 1).coeff(0), fb0 = s.phibar(n + 1).coeff(0);
        cplx p = s.phi_at(n, zj), p1 = s.phi_at(n + 1, zj), ps = s.phis_at(n, zj), ps1 = s.phis_at(n + 1, zj);
        for (int kk = 0; kk <= d.M(); ++kk) {
            ShiftedEvaluation v{kk, d.z(kk), 0.0, 0.0, 0.0, 0.0};
            if (kk == j) {
                v.phi = kn / k * (p + f0 / (k1 * p) * T);
                v.phis = kn * ps / (k * p) * (p - zj / ps * T);
                v.xi = -kn * f0 / (k * k1 * p) * 2.0 * zn;
                v.xis = -kn / (k * p) * 2.0 * zn * zj;
            } else {
                cplx zk = v.z, dz = zj - zk;
                v.phi = kn / (k1 * p) * (p1 * s.phi_at(n, zk) - p * s.phi_at(n + 1, zk)) / dz;
                v.phis = kn / (fb0 * p) * (ps1 * s.phis_at(n, zk) - ps * s.phis_at(n + 1, zk)) / dz;
                v.xi = kn / (k1 * p) * (p * s.xi(n + 1, zk) - p1 * s.xi(n, zk));
                v.xis = kn / (fb0 * p) * (ps * s.xis(n + 1, zk) - ps1 * s.xis(n, zk));
            }
            out.push_back(v);
        }
    } else {
        cplx kxs = s.prev(n, zj).kxis, x = s.xi(n, zj), xs = s.xis(n, zj), pb = s.phibar(n).coeff(0);
        for (int kk = 0; kk <= d.M(); ++kk) {
            ShiftedEvaluation v{kk, d.z(kk), 0.0, 0.0, 0.0, 0.0};
            if (kk == j) {
                v.phi = kn / kxs * 2.0 * zn;
                v.phis = kn * pb / (k * kxs) * 2.0 * zn;
                v.xi = -kn / kxs * T;
                v.xis = kn / k * (pb / kxs * T - xs / zj);
            } else {
                cplx zk = v.z, dz = zj - zk;
                // z_k times the row n-1 quantities; the origin contributes nothing.
                cplx zk_kphis = 0.0, zk_kxis = 0.0;
                if (zk != cplx{} && n > 0) {
                    zk_kphis = zk * s.kappa(n - 1) * s.phis_at(n - 1, zk);
                    zk_kxis = zk * s.prev(n, zk).kxis;
                } else if (zk != cplx{}) {
                    zk_kxis = zk * s.prev(n, zk).kxis;
                }
                v.phi = kn / kxs * (s.phi_at(n, zk) * xs + s.phis_at(n, zk) * x);
                v.phis = kn / (k * zj * kxs) * (zj * kxs * s.phis_at(n, zk) - xs * zk_kphis);
                v.xi = kn / kxs * (x * s.xis(n, zk) - xs * s.xi(n, zk)) / dz;
                v.xis = -kn / (k * zj * kxs) * (zj * kxs * s.xis(n, zk) - xs * zk_kxis) / dz;
            }
            out.push_back(v);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transformed residues of the spectral matrix.

struct TransformedResidues {
    ResidueSet set;                 // sandwich forms for k != j, closed form at k = j
    std::vector<Mat2> similarity;   // R(z_k) A_k R(z_k)^{-1} for k != j
    double route_residual = 0.0;    // max over k != j of the two routes' disagreement
};

inline TransformedResidues transformed_residues(const ResidueSet& rs, const SystemView& s, const SemiClassicalData& d,
                                                int j, int dir, int n) {
    detail::check_direction(dir, "transformed_residues");
    cplx zj = detail::finite_point(d, j, "transformed_residues");
    if (rs.n != n) throw InputError("transformed_residues: residue set degree mismatch");
    auto R = schlesinger_matrix(s, d, j, dir, n);
    cplx k = s.kappa(n), rho = d.rho(j);
    Mat2 sum = Mat2::Zero();
    for (int kk = 0; kk <= d.M(); ++kk)
        if (kk != j) sum += rs.A[static_cast<std::size_t>(kk)] / (zj - d.z(kk));

    TransformedResidues out;
    out.set.n = n;
    out.set.A.assign(static_cast<std::size_t>(d.M()) + 1, Mat2::Zero());
    out.similarity.assign(static_cast<std::size_t>(d.M()) + 1, Mat2::Zero());
    if (dir > 0) {
        cplx k1 = s.kappa(n + 1), f0 = s.phi(n + 1).coeff(0);
        cplx p = s.phi_at(n, zj), p1 = s.phi_at(n + 1, zj), ps = s.phis_at(n, zj);
        for (int kk = 0; kk <= d.M(); ++kk) {
            if (kk == j) continue;
            cplx zk = d.z(kk), dz = zj - zk;
            Mat2 L = mat2(k1 * p + f0 * ps / dz, -f0 * p / dz, -zk * k1 * ps / dz, zj * k1 * p / dz);
            Mat2 Rm = mat2(zj * k1 * p, f0 * p, zk * k1 * ps, dz * k1 * p + f0 * ps);
            out.set.A[static_cast<std::size_t>(kk)] = L * rs.A[static_cast<std::size_t>(kk)] * Rm / (k * k1 * p * p1);
        }
        Mat2 M = mat2(-f0 * ps, f0 * p, zj * k1 * ps, -zj * k1 * p) / (k * p1);
        Mat2 N = mat2(zj * k1 * p, f0 * p, zj * k1 * ps, f0 * ps);
        out.set.A[static_cast<std::size_t>(j)] = M * (Mat2((rho + 1.0) * Mat2::Identity()) + sum * N / (k1 * p));
    } else {
        cplx kxs = s.prev(n, zj).kxis, x = s.xi(n, zj), xs = s.xis(n, zj), pb = s.phibar(n).coeff(0);
        for (int kk = 0; kk <= d.M(); ++kk) {
            if (kk == j) continue;
            cplx zk = d.z(kk), dz = zj - zk;
            Mat2 L = mat2(zj * k * xs / dz, zj * k * x / dz, zk * pb * xs / dz, k * xs + zj * pb * x / dz);
            Mat2 Rm = mat2(dz * k * xs + zj * pb * x, -zj * k * x, -zk * pb * xs, zj * k * xs);
            out.set.A[static_cast<std::size_t>(kk)] = L * rs.A[static_cast<std::size_t>(kk)] * Rm / (kxs * k * zj * xs);
        }
        Mat2 M2 = mat2(k * xs, k * x, pb * xs, pb * x);
        Mat2 N2 = mat2(-pb * x, k * x, pb * xs, -k * xs);
        out.set.A[static_cast<std::size_t>(j)] =
            (1.0 - rho) / k * mat2(0.0, 0.0, -pb, k) + zj / (kxs * k * xs) * M2 * sum * N2;
    }
    for (int kk = 0; kk <= d.M(); ++kk) {
        if (kk == j) continue;
        Mat2 Rk = R(d.z(kk));
        Mat2 sim = Rk * rs.A[static_cast<std::size_t>(kk)] * Rk.inverse();
        out.similarity[static_cast<std::size_t>(kk)] = sim;
        out.route_residual = std::max(out.route_residual, rel_diff(sim, out.set.A[static_cast<std::size_t>(kk)]));
    }
    auto sc = shifted_coeffs(s, d, j, dir, n);
    cplx sr = d.rho_sum() + static_cast<double>(dir);
    double nd = static_cast<double>(n);
    out.set.A_inf = mat2(-nd, 0.0, -(nd + sr) * sc.rbar, sr);
    out.set.A_inf_sum = Mat2::Zero();
    for (const auto& a : out.set.A) out.set.A_inf_sum -= a;
    out.set.inf_residual = rel_diff(out.set.A_inf, out.set.A_inf_sum);
    return out;
}

// ---------------------------------------------------------------------------
// Commutativity of two shifts at distinct singularities.

struct CommutativityResult {
    Mat2 residual;
    double relative = 0.0;  // |lhs - rhs| / max(1, |lhs|, |rhs|)
    cplx kappa_sq_jk, kappa_sq_kj;        // doubly shifted kappa^2 in the two orders
    std::optional<cplx> kappa_sq_formula;  // closed form, both shifts upward
    double kappa_residual = 0.0;
};

inline CommutativityResult commutativity_residual(ViewPtr s, const SemiClassicalData& d, int j, int k, int ej, int ek,
                                                  int n, cplx z) {
    if (j == k) throw InputError("commutativity_residual: requires j != k");
    auto Vj = schlesinger_view(s, d, j, ej);
    auto Vk = schlesinger_view(s, d, k, ek);
    auto dj = shifted_data(d, j, ej), dk = shifted_data(d, k, ek);
    auto Rj_after_k = schlesinger_matrix(*Vk, dk, j, ej, n);
    auto Rk_after_j = schlesinger_matrix(*Vj, dj, k, ek, n);
    Mat2 lhs = Rj_after_k(z) * schlesinger_matrix(*s, d, k, ek, n)(z);
    Mat2 rhs = Rk_after_j(z) * schlesinger_matrix(*s, d, j, ej, n)(z);
    CommutativityResult out;
    out.residual = lhs - rhs;
    out.relative = rel_diff(lhs, rhs);
    out.kappa_sq_jk = Rj_after_k.coeffs.kappa_sq;
    out.kappa_sq_kj = Rk_after_j.coeffs.kappa_sq;
    out.kappa_residual = rel_diff(out.kappa_sq_jk, out.kappa_sq_kj);
    if (ej > 0 && ek > 0) {
        cplx a = d.z(j), b = d.z(k);
        auto f = [&](int m, cplx x) { return s->phi_at(m, x); };
        cplx v = s->kappa(n) * s->kappa(n + 2) * (f(n, b) * f(n + 1, a) - f(n, a) * f(n + 1, b)) /
                 (f(n + 1, b) * f(n + 2, a) - f(n + 1, a) * f(n + 2, b));
        out.kappa_sq_formula = v;
        out.kappa_residual = std::max({out.kappa_residual, rel_diff(v, out.kappa_sq_jk), rel_diff(v, out.kappa_sq_kj)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Compatibility with the recurrence, spectral and deformation derivatives.

struct CompatibilityResiduals {
    Mat2 recurrence, spectral, deformation;
    // Each residual divided by max(1, |lhs|, |rhs|).
    double recurrence_rel = 0.0, spectral_rel = 0.0, deformation_rel = 0.0;
};

inline CompatibilityResiduals compatibility_residuals(ViewPtr s, const WeightSpec& w, const SemiClassicalData& d, int j,
                                                      int dir, int n, cplx z, const std::vector<cplx>& vel,
                                                      double fd_step = 1e-5) {
    check_velocities(d, vel);
    auto view = schlesinger_view(s, d, j, dir);
    auto dn = shifted_data(d, j, dir);
    CompatibilityResiduals out;

    auto R = schlesinger_matrix(*s, d, j, dir, n);
    auto R1 = schlesinger_matrix(*s, d, j, dir, n + 1);
    Mat2 Rz = R(z);
    Mat2 lhs = R1(z) * k_matrix(*s, n, z), rhs = k_matrix(*view, n, z) * Rz;
    out.recurrence = lhs - rhs;
    out.recurrence_rel = rel_diff(lhs, rhs);

    auto rs = residue_set(*s, d, n);
    auto tr = transformed_residues(rs, *s, d, j, dir, n);
    Mat2 A = spectral_matrix(rs, d, z), An = spectral_matrix(tr.set, dn, z);
    lhs = R.derivative(z) + Rz * A;
    rhs = An * Rz;
    out.spectral = lhs - rhs;
    out.spectral_rel = rel_diff(lhs, rhs);

    auto moved_R = [&](double t) {
        WeightSpec wt = moved_weight(w, vel, t);
        auto st = build_system(wt, n + 1);
        Mat2 m = schlesinger_matrix(st, semiclassical_data(wt), j, dir, n)(z);
        return max_abs(m - Rz) <= max_abs(m + Rz) ? m : Mat2(-m);
    };
    Mat2 Rdot = (moved_R(fd_step) - moved_R(-fd_step)) / (2.0 * fd_step);
    Mat2 B = deformation_matrix(rs, *s, d, vel, z);
    Mat2 Bn = deformation_matrix(tr.set, *view, dn, vel, z);
    lhs = Rdot + Rz * B;
    rhs = Bn * Rz;
    out.deformation = lhs - rhs;
    out.deformation_rel = rel_diff(lhs, rhs);
    return out;
}

}  // namespace bops
