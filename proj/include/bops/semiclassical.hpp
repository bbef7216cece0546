// SPDX-License-Identifier: MIT
#pragma once

#include "bops/system.hpp"

#include <string>
#include <vector>

namespace bops {

struct Singularity {
    cplx z;
    cplx rho;
};

// Singularity data with the origin always stored first (index 0).
struct SemiClassicalData {
    std::vector<Singularity> sing;
    Polynomial V, W;
    std::vector<std::string> warnings;

    int M() const { return static_cast<int>(sing.size()) - 1; }
    cplx z(int j) const { return sing[static_cast<std::size_t>(j)].z; }
    cplx rho(int j) const { return sing[static_cast<std::size_t>(j)].rho; }
    cplx rho_sum() const {
        cplx s = 0.0;
        for (const auto& x : sing) s += x.rho;
        return s;
    }
    cplx V_at(int j) const { return V(z(j)); }
};

inline Polynomial linear_product(const std::vector<cplx>& roots, std::size_t skip = static_cast<std::size_t>(-1)) {
    std::vector<cplx> c{1.0};
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (i == skip) continue;
        std::vector<cplx> d(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            d[k + 1] += c[k];
            d[k] -= roots[i] * c[k];
        }
        c = std::move(d);
    }
    return Polynomial(std::move(c));
}

inline SemiClassicalData make_semiclassical(const std::vector<Singularity>& finite, cplx rho0) {
    SemiClassicalData d;
    d.sing.push_back({0.0, rho0});
    d.sing.insert(d.sing.end(), finite.begin(), finite.end());
    std::vector<cplx> roots;
    for (const auto& s : d.sing) roots.push_back(s.z);
    d.W = linear_product(roots);
    d.V = Polynomial({0.0});
    for (std::size_t j = 0; j < roots.size(); ++j) d.V += (0.5 * d.sing[j].rho) * linear_product(roots, j);
    if (d.W.degree() < 2) d.warnings.push_back("deg W < 2: not in the generic semi-classical class");
    for (std::size_t j = 0; j < roots.size(); ++j) {
        for (std::size_t k = 0; k < j; ++k)
            if (std::abs(roots[j] - roots[k]) <= merge_tol) d.warnings.push_back("coincident singularities");
        cplx r = d.sing[j].rho;
        if (is_integer(r) && r.real() >= 0.0)
            d.warnings.push_back("rho_" + std::to_string(j) + " is a nonnegative integer (non-generic)");
    }
    return d;
}

// Singularity data of a factor-based weight; finite singularities follow the
// factor order and rho_0 = m - sum of the conjugated exponents.
inline SemiClassicalData semiclassical_data(const WeightSpec& w) {
    if (w.base_fourier || w.rational_mod) throw InputError("semiclassical_data: requires a factor-based weight");
    std::vector<Singularity> fin;
    cplx rho0 = static_cast<double>(monomial_exponent(w));
    for (const auto& f : w.factors) {
        if (f.kind == FactorKind::monomial) continue;
        fin.push_back({f.zero, f.exponent});
        if (f.kind == FactorKind::conjugated) rho0 -= f.exponent;
    }
    return make_semiclassical(fin, rho0);
}

inline void require_semiclassical(const SemiClassicalData& d, const char* what) {
    if (d.M() < 1) throw InputError(std::string(what) + ": weight is not semi-classical with deg W >= 2");
}

// ---------------------------------------------------------------------------
// Residues of the spectral matrix.

struct PointEval {
    cplx phi, phis, xi, xis;
};

inline PointEval point_eval(const SystemView& s, int n, cplx z) {
    return {s.phi_at(n, z), s.phis_at(n, z), s.xi(n, z), s.xis(n, z)};
}

struct ResidueSet {
    int n = 0;
    std::vector<Mat2> A;  // A[0] at the origin, A[j] at z_j
    Mat2 A_inf;           // printed closed form
    Mat2 A_inf_sum;       // -sum_j A_j
    double inf_residual = 0.0;
};

inline Mat2 residue_at(const SystemView& s, const SemiClassicalData& d, int n, int j) {
    if (j == 0) return (static_cast<double>(n) - d.rho(0)) * mat2(1.0, -s.r(n), 0.0, 0.0);
    cplx zj = d.z(j);
    if (on_circle(zj)) throw DomainError("residue_at: singularity on the unit circle is unsupported");
    auto e = point_eval(s, n, zj);
    return (-d.rho(j) / (2.0 * ipow(zj, n))) * mat2(e.phis * e.xi, -e.phi * e.xi, -e.phis * e.xis, e.phi * e.xis);
}

inline Mat2 residue_infinity(const SystemView& s, const SemiClassicalData& d, int n) {
    cplx sr = d.rho_sum();
    double nd = static_cast<double>(n);
    return mat2(-nd, 0.0, -(nd + sr) * s.rbar(n), sr);
}

inline ResidueSet residue_set(const SystemView& s, const SemiClassicalData& d, int n, double consistency_tol = 1e-6) {
    ResidueSet rs;
    rs.n = n;
    rs.A_inf_sum = Mat2::Zero();
    for (int j = 0; j <= d.M(); ++j) {
        rs.A.push_back(residue_at(s, d, n, j));
        rs.A_inf_sum -= rs.A.back();
    }
    rs.A_inf = residue_infinity(s, d, n);
    rs.inf_residual = rel_diff(rs.A_inf, rs.A_inf_sum);
    if (rs.inf_residual > consistency_tol)
        throw AccuracyError("residue_set: residue at infinity inconsistent with the residue sum (n = " + std::to_string(n) + ")");
    return rs;
}

inline Mat2 spectral_matrix(const ResidueSet& rs, const SemiClassicalData& d, cplx z) {
    Mat2 A = Mat2::Zero();
    for (int j = 0; j <= d.M(); ++j) {
        if (z == d.z(j)) throw DomainError("spectral_matrix: z is a singular point");
        A += rs.A[static_cast<std::size_t>(j)] / (z - d.z(j));
    }
    return A;
}

// Residuals of the four sum identities.
inline std::vector<cplx> sum_identity_residuals(const SystemView& s, const SemiClassicalData& d, int n) {
    cplx a = 0.0, b = 0.0, c = 0.0, e = 0.0;
    for (int k = 1; k <= d.M(); ++k) {
        auto v = point_eval(s, n, d.z(k));
        cplx f = d.rho(k) / (2.0 * ipow(d.z(k), n));
        a += f * v.phi * v.xi;
        b += f * v.phis * v.xi;
        c += f * v.phi * v.xis;
        e += f * v.phis * v.xis;
    }
    double nd = static_cast<double>(n);
    return {a - (nd - d.rho(0)) * s.r(n), b + d.rho(0), c - d.rho_sum(), e - (nd + d.rho_sum()) * s.rbar(n)};
}

// ---------------------------------------------------------------------------
// Formal monodromy.

struct MonodromyBlock {
    Mat2 T, G;
    double residual = 0.0;  // |G T G^{-1} - A| (finite singularities)
};

struct FormalMonodromy {
    std::vector<MonodromyBlock> blocks;  // j = 0..M
    MonodromyBlock infinity;
    std::vector<cplx> theta;             // theta_0..theta_M, theta_inf
    cplx classical_residual{};            // sum theta - 2n
};

inline FormalMonodromy formal_monodromy(const ResidueSet& rs, const SystemView& s, const SemiClassicalData& d) {
    int n = rs.n;
    double nd = static_cast<double>(n);
    cplx k = s.kappa(n);
    FormalMonodromy fm;
    auto finish = [](MonodromyBlock& b, const Mat2& A) {
        if (std::abs(b.G.determinant()) < 1e-14 * std::max(1.0, max_abs(b.G) * max_abs(b.G)))
            throw DegeneracyError("formal_monodromy: diagonalizing matrix is singular");
        b.residual = rel_diff(Mat2(b.G * b.T * b.G.inverse()), A);
    };
    for (int j = 0; j <= d.M(); ++j) {
        MonodromyBlock b;
        if (j == 0) {
            b.T = mat2(0.0, 0.0, 0.0, nd - d.rho(0));
            b.G = mat2(s.phi(n).coeff(0), 1.0 / k, k, 0.0);
        } else {
            auto v = point_eval(s, n, d.z(j));
            b.T = mat2(0.0, 0.0, 0.0, -d.rho(j));
            b.G = mat2(v.phi, v.xi, v.phis, -v.xis);
        }
        finish(b, rs.A[static_cast<std::size_t>(j)]);
        fm.blocks.push_back(b);
        fm.theta.push_back(j == 0 ? nd - d.rho(0) : -d.rho(j));
    }
    fm.infinity.T = mat2(-nd, 0.0, 0.0, d.rho_sum());
    fm.infinity.G = mat2(k, 0.0, s.phibar(n).coeff(0), 1.0 / k);
    finish(fm.infinity, rs.A_inf);
    fm.theta.push_back(nd + d.rho_sum());
    cplx sum = 0.0;
    for (auto t : fm.theta) sum += t;
    fm.classical_residual = sum - 2.0 * nd;
    return fm;
}

// ---------------------------------------------------------------------------
// Bilinear products at a finite singularity.

struct BilinearProducts {
    cplx Theta, ThetaStar, Omega, OmegaStar, V_at;
    // Redundant relations, each as |lhs - rhs| scaled by max(1, |lhs|, |rhs|).
    double res_d = 0.0, res_e = 0.0, res_g = 0.0, res_h = 0.0, res_i = 0.0, res_j = 0.0;
};

inline BilinearProducts bilinear_products(const SystemView& s, const SemiClassicalData& d, int n, int j) {
    require_semiclassical(d, "bilinear_products");
    if (j < 1 || j > d.M()) throw InputError("bilinear_products: j must index a finite singularity");
    cplx zj = d.z(j), V = d.V_at(j);
    cplx k = s.kappa(n), k1 = s.kappa(n + 1);
    cplx f0 = s.phi(n + 1).coeff(0), fb0 = s.phibar(n + 1).coeff(0);
    auto v = point_eval(s, n, zj);
    auto v1 = point_eval(s, n + 1, zj);
    if (std::abs(f0) < 1e-300 || std::abs(fb0) < 1e-300 || std::abs(V) < 1e-300)
        throw DegeneracyError("bilinear_products: vanishing normalizer (phi_{n+1}(0), phibar_{n+1}(0) or V(z_j))");
    cplx zn = ipow(zj, n);
    BilinearProducts b;
    b.V_at = V;
    b.Theta = v.phi * v.xi * V * k / (f0 * zn);
    b.ThetaStar = -v.phis * v.xis * V * k / (fb0 * zn * zj);
    b.Omega = v1.phi * v.xi * V * k / (f0 * zn) - V;
    b.OmegaStar = V - v1.phis * v.xis * V * k / (fb0 * zn * zj);
    cplx kr = k1 / k;
    b.res_d = rel_diff(v.phi * v1.xi, (f0 / k) * zn * (b.Omega - V) / V);
    b.res_e = rel_diff(v.phis * v1.xis, -(fb0 / k) * zn * zj * (b.OmegaStar + V) / V);
    b.res_g = rel_diff(v.phi * v.xis, -(zn / V) * (b.Omega - V - kr * zj * b.Theta));
    b.res_h = rel_diff(v.phi * v.xis, -(zn / V) * (b.OmegaStar - V - kr * b.ThetaStar));
    b.res_i = rel_diff(v.phis * v.xi, (zn / V) * (b.Omega + V - kr * zj * b.Theta));
    b.res_j = rel_diff(v.phis * v.xi, (zn / V) * (b.OmegaStar + V - kr * b.ThetaStar));
    return b;
}

// ---------------------------------------------------------------------------
// Deformations.

struct DeformationDerivatives {
    cplx kappa_dot_over_kappa, r_dot, rbar_dot;
    std::vector<cplx> P_dot, Q_dot;  // indexed j = 1..M (entry 0 unused)
};

inline void check_velocities(const SemiClassicalData& d, const std::vector<cplx>& vel) {
    if (static_cast<int>(vel.size()) != d.M()) throw InputError("velocities: expected one entry per finite singularity");
}

inline DeformationDerivatives deformation_derivatives(const SystemView& s, const SemiClassicalData& d, int n,
                                                      const std::vector<cplx>& vel) {
    require_semiclassical(d, "deformation_derivatives");
    check_velocities(d, vel);
    int M = d.M();
    double nd = static_cast<double>(n);
    cplx r = s.r(n), rb = s.rbar(n);
    std::vector<PointEval> ev(static_cast<std::size_t>(M) + 1);
    for (int k = 1; k <= M; ++k) ev[static_cast<std::size_t>(k)] = point_eval(s, n, d.z(k));
    auto vk = [&](int k) { return vel[static_cast<std::size_t>(k - 1)]; };
    DeformationDerivatives out;
    for (int k = 1; k <= M; ++k) {
        const auto& e = ev[static_cast<std::size_t>(k)];
        cplx f = d.rho(k) * vk(k) / d.z(k) / (2.0 * ipow(d.z(k), n));
        out.kappa_dot_over_kappa += -0.5 * f * e.phi * e.xis;
        out.r_dot += f * (e.phi - r * e.phis) * e.xi;
        out.rbar_dot += f * (rb * e.phi - e.phis) * e.xis;
    }
    out.P_dot.assign(static_cast<std::size_t>(M) + 1, 0.0);
    out.Q_dot.assign(static_cast<std::size_t>(M) + 1, 0.0);
    for (int j = 1; j <= M; ++j) {
        const auto& ej = ev[static_cast<std::size_t>(j)];
        if (std::abs(ej.phi) < 1e-300 || std::abs(ej.xis) < 1e-300)
            throw DegeneracyError("deformation_derivatives: phi_n(z_j) or xi*_n(z_j) vanishes");
        cplx P = ej.phis / ej.phi, Q = ej.xi / ej.xis, zj = d.z(j), vj = vk(j);
        cplx pd = 0.0, qd = 0.0;
        for (int k = 1; k <= M; ++k) {
            const auto& e = ev[static_cast<std::size_t>(k)];
            cplx c = d.rho(k) / (2.0 * ipow(d.z(k), n));
            pd += c * vk(k) / d.z(k) * (e.phi * P - e.phis) * e.xis;
            qd -= c * vk(k) / d.z(k) * Q * (e.phi + e.phis * Q) * e.xis;
            if (k == j) continue;
            cplx g = (vj - vk(k)) / (zj - d.z(k));
            pd -= c * g * (e.phi * P - e.phis) * (e.xi * P + e.xis);
            qd -= c * g * (e.phi + e.phis * Q) * (e.xi - e.xis * Q);
        }
        // Origin term of the sums over k != j, from the residue at z_0 = 0.
        pd -= (vj / zj) * (nd - d.rho(0)) * P * (1.0 - r * P);
        qd += (vj / zj) * (nd - d.rho(0)) * (Q + r);
        out.P_dot[static_cast<std::size_t>(j)] = pd;
        out.Q_dot[static_cast<std::size_t>(j)] = qd;
    }
    return out;
}

inline Mat2 b_infinity(const SystemView& s, int n, const DeformationDerivatives& dd) {
    cplx kd = dd.kappa_dot_over_kappa;
    return mat2(kd, 0.0, 2.0 * kd * s.rbar(n) + dd.rbar_dot, -kd);
}

inline Mat2 deformation_matrix(const ResidueSet& rs, const SystemView& s, const SemiClassicalData& d,
                               const std::vector<cplx>& vel, cplx z) {
    check_velocities(d, vel);
    auto dd = deformation_derivatives(s, d, rs.n, vel);
    Mat2 B = b_infinity(s, rs.n, dd);
    for (int j = 1; j <= d.M(); ++j) {
        if (z == d.z(j)) throw DomainError("deformation_matrix: z is a singular point");
        B -= rs.A[static_cast<std::size_t>(j)] * vel[static_cast<std::size_t>(j - 1)] / (z - d.z(j));
    }
    return B;
}

// Right-hand sides of the Schlesinger equations for j = 1..M (entry 0 unused)
// and for the residue at infinity (last entry).
inline std::vector<Mat2> schlesinger_rhs(const ResidueSet& rs, const SystemView& s, const SemiClassicalData& d,
                                         const std::vector<cplx>& vel) {
    auto dd = deformation_derivatives(s, d, rs.n, vel);
    Mat2 Binf = b_infinity(s, rs.n, dd);
    auto comm = [](const Mat2& a, const Mat2& b) -> Mat2 { return a * b - b * a; };
    std::vector<Mat2> out(static_cast<std::size_t>(d.M()) + 2, Mat2::Zero());
    auto vel_at = [&](int k) { return k == 0 ? cplx{} : vel[static_cast<std::size_t>(k - 1)]; };
    for (int j = 1; j <= d.M(); ++j) {
        const Mat2& Aj = rs.A[static_cast<std::size_t>(j)];
        Mat2 v = comm(Binf, Aj);
        for (int k = 0; k <= d.M(); ++k) {
            if (k == j) continue;
            v += (vel_at(j) - vel_at(k)) / (d.z(j) - d.z(k)) * comm(rs.A[static_cast<std::size_t>(k)], Aj);
        }
        out[static_cast<std::size_t>(j)] = v;
    }
    out.back() = comm(Binf, rs.A_inf);
    return out;
}

// Weight with the finite singularities moved to z_j + t v_j. The constant
// scale keeps (-z_j)^rho on the branch continuous in t.
inline WeightSpec moved_weight(const WeightSpec& w, const std::vector<cplx>& vel, double t) {
    WeightSpec out = w;
    std::size_t j = 0;
    for (auto& f : out.factors) {
        if (f.kind == FactorKind::monomial) continue;
        if (j >= vel.size()) throw InputError("moved_weight: too few velocities");
        cplx a = f.zero, b = a + vel[j++] * t;
        if (f.kind == FactorKind::outer)
            out.scale *= std::pow(-a, f.exponent) * std::pow(b / a, f.exponent) / std::pow(-b, f.exponent);
        f.zero = b;
    }
    if (j != vel.size()) throw InputError("moved_weight: too many velocities");
    return out;
}

}  // namespace bops
