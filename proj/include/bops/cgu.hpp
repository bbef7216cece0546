// SPDX-License-Identifier: MIT
#pragma once

#include "bops/semiclassical.hpp"
#include "bops/system.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bops {

enum class GenKind { K1, L1, K1star, L1star };

inline const char* to_string(GenKind k) {
    switch (k) {
        case GenKind::K1: return "K1";
        case GenKind::L1: return "L1";
        case GenKind::K1star: return "K1star";
        case GenKind::L1star: return "L1star";
    }
    return "?";
}

inline bool raises_degree(GenKind k) { return k == GenKind::K1 || k == GenKind::K1star; }

struct CguShift {
    std::vector<cplx> alphas, alpha_stars, betas, beta_stars;
    int K() const { return static_cast<int>(alphas.size()); }
    int Ks() const { return static_cast<int>(alpha_stars.size()); }
    int L() const { return static_cast<int>(betas.size()); }
    int Ls() const { return static_cast<int>(beta_stars.size()); }
    bool empty() const { return alphas.empty() && alpha_stars.empty() && betas.empty() && beta_stars.empty(); }
};

inline void validate_shift(const CguShift& s) {
    WeightSpec probe;
    probe.rational_mod = RationalMod{s.alphas, s.alpha_stars, s.betas, s.beta_stars};
    validate_weight(probe);
    auto nonzero = [](const std::vector<cplx>& v) {
        for (auto a : v)
            if (a == cplx{}) throw InputError("shift: locations must be nonzero");
    };
    nonzero(s.alphas);
    nonzero(s.alpha_stars);
    nonzero(s.betas);
    nonzero(s.beta_stars);
}

inline WeightSpec apply_shift(const WeightSpec& w, const CguShift& s) {
    return modify_weight(w, s.alphas, s.alpha_stars, s.betas, s.beta_stars);
}

struct TransformedCoeffs {
    cplx kappa_sq, kappa, r, rbar;
};

inline void require_nonzero(cplx v, const char* what) {
    if (!(std::abs(v) > 1e-14)) throw DegeneracyError(std::string("generator hypothesis violated: ") + what + " vanishes");
}

// R(z) = scale * (U + V z) / D(z) with D = 1, z - location, or z.
struct GeneratorMatrix {
    enum class Denominator { one, linear, z };
    GenKind kind = GenKind::K1;
    cplx location{};
    int n = 0;
    cplx scale{1.0};
    Mat2 U = Mat2::Zero(), V = Mat2::Zero();
    Denominator denom = Denominator::one;
    TransformedCoeffs coeffs{};

    cplx D(cplx z) const {
        switch (denom) {
            case Denominator::one: return 1.0;
            case Denominator::linear: return z - location;
            case Denominator::z: return z;
        }
        return 1.0;
    }
    Mat2 numerator(cplx z) const { return U + V * z; }
    Mat2 operator()(cplx z) const {
        cplx d = D(z);
        if (d == cplx{}) throw DomainError("generator: z at the pole of the generator");
        return scale * numerator(z) / d;
    }
    Mat2 derivative(cplx z) const {
        cplx d = D(z), dp = denom == Denominator::one ? cplx{} : cplx{1.0};
        if (d == cplx{}) throw DomainError("generator: z at the pole of the generator");
        return scale * (V * d - numerator(z) * dp) / (d * d);
    }
    cplx det(cplx z) const { return (*this)(z).determinant(); }
};

inline TransformedCoeffs transformed_coeffs(const SystemView& s, GenKind kind, cplx a, int n) {
    if (a == cplx{}) throw InputError("transformed_coeffs: location must be nonzero");
    if (on_circle(a)) throw DomainError("transformed_coeffs: location on the unit circle");
    cplx k = s.kappa(n);
    cplx p0 = s.phi(n).coeff(0), pb0 = s.phibar(n).coeff(0);
    TransformedCoeffs t{};
    switch (kind) {
        case GenKind::K1: {
            cplx k1 = s.kappa(n + 1), p = s.phi_at(n, a), p1 = s.phi_at(n + 1, a), ps = s.phis_at(n, a);
            require_nonzero(p, "phi_n(alpha)");
            require_nonzero(p1, "phi_{n+1}(alpha)");
            t.kappa_sq = -k1 * k * p / p1;
            t.r = (p0 * p1 - s.phi(n + 1).coeff(0) * p) / (a * k1 * p);
            t.rbar = ps / p;
            break;
        }
        case GenKind::L1: {
            cplx xs = s.xis(n, a);
            auto pv = s.prev(n, a);
            require_nonzero(xs, "xi*_n(beta)");
            require_nonzero(pv.kxis, "xi*_{n-1}(beta)");
            t.kappa_sq = -k * a * pv.kxis / xs;
            t.r = a * pv.kxi / pv.kxis;
            t.rbar = (pb0 * a * pv.kxis - pv.kphibar0 * xs) / (a * k * pv.kxis);
            break;
        }
        case GenKind::K1star: {
            cplx k1 = s.kappa(n + 1), p = s.phi_at(n, a), ps = s.phis_at(n, a), ps1 = s.phis_at(n + 1, a);
            require_nonzero(ps, "phi*_n(alpha*)");
            require_nonzero(ps1, "phi*_{n+1}(alpha*)");
            t.kappa_sq = k1 * k * ps / ps1;
            t.r = p / ps;
            t.rbar = (pb0 * ps1 - s.phibar(n + 1).coeff(0) * a * ps) / (k1 * ps);
            break;
        }
        case GenKind::L1star: {
            cplx x = s.xi(n, a);
            auto pv = s.prev(n, a);
            require_nonzero(x, "xi_n(beta*)");
            require_nonzero(pv.kxi, "xi_{n-1}(beta*)");
            t.kappa_sq = k * a * pv.kxi / x;
            t.r = (p0 * pv.kxi - pv.kphi0 * x) / (k * pv.kxi);
            t.rbar = pv.kxis / (a * pv.kxi);
            break;
        }
    }
    t.kappa = std::sqrt(t.kappa_sq);
    return t;
}

inline GeneratorMatrix generator(const SystemView& s, GenKind kind, cplx a, int n) {
    GeneratorMatrix g;
    g.kind = kind;
    g.location = a;
    g.n = n;
    g.coeffs = transformed_coeffs(s, kind, a, n);
    cplx kp = g.coeffs.kappa, k = s.kappa(n);
    using D = GeneratorMatrix::Denominator;
    switch (kind) {
        case GenKind::K1: {
            cplx k1 = s.kappa(n + 1), p = s.phi_at(n, a), p1 = s.phi_at(n + 1, a), ps = s.phis_at(n, a);
            g.scale = kp / k;
            g.denom = D::linear;
            g.U = mat2(-k * p1 / (k1 * p), s.phi(n + 1).coeff(0) / k1, 0.0, -a);
            g.V = mat2(1.0, 0.0, ps / p, 0.0);
            break;
        }
        case GenKind::L1: {
            cplx x = s.xi(n, a), xs = s.xis(n, a);
            auto pv = s.prev(n, a);
            g.scale = -k / kp;
            g.denom = D::one;
            g.U = mat2(a, a * x / xs, 0.0, a * pv.kxis / (k * xs));
            g.V = mat2(0.0, 0.0, s.phibar(n).coeff(0) / k, -1.0);
            break;
        }
        case GenKind::K1star: {
            cplx k1 = s.kappa(n + 1), p = s.phi_at(n, a), ps = s.phis_at(n, a), ps1 = s.phis_at(n + 1, a);
            g.scale = kp / k;
            g.denom = D::linear;
            g.U = mat2(0.0, -a * p / ps, 0.0, -a);
            g.V = mat2(1.0, 0.0, -s.phibar(n + 1).coeff(0) * a / k1, k * ps1 / (k1 * ps));
            break;
        }
        case GenKind::L1star: {
            cplx x = s.xi(n, a), xs = s.xis(n, a);
            auto pv = s.prev(n, a);
            g.scale = kp / k;
            g.denom = D::z;
            g.U = mat2(-k * x / pv.kxi, s.phi(n).coeff(0) * x / pv.kxi, 0.0, 0.0);
            g.V = mat2(1.0, 0.0, k * xs / (pv.kxi * a), k * x / (pv.kxi * a));
            break;
        }
    }
    return g;
}

// Printed inverses for the K1 and L1 generators; the conjugated kinds use the
// closed-form 2x2 inverse.
inline Mat2 generator_inverse(const SystemView& s, GenKind kind, cplx a, int n, cplx z) {
    auto t = transformed_coeffs(s, kind, a, n);
    cplx k = s.kappa(n);
    if (kind == GenKind::K1) {
        cplx k1 = s.kappa(n + 1), p = s.phi_at(n, a), p1 = s.phi_at(n + 1, a), ps = s.phis_at(n, a);
        return (p / t.kappa) * mat2(k1 / p1 * a, s.phi(n + 1).coeff(0) / p1, k1 * ps / (p1 * p) * z, k / p - k1 / p1 * z);
    }
    if (kind == GenKind::L1) {
        if (z == a) throw DomainError("generator_inverse: z at the pole");
        cplx x = s.xi(n, a), xs = s.xis(n, a);
        auto pv = s.prev(n, a);
        return (k / t.kappa / (z - a)) * mat2(z - pv.kxis / (k * xs) * a, x / xs * a, s.phibar(n).coeff(0) / k * z, -a);
    }
    return generator(s, kind, a, n)(z).inverse();
}

// Rational factor w_new / w_old of an elementary modification.
inline cplx weight_ratio(GenKind kind, cplx a, cplx z) {
    switch (kind) {
        case GenKind::K1: return z - a;
        case GenKind::L1: return 1.0 / (z - a);
        case GenKind::K1star: return 1.0 - a / z;
        case GenKind::L1star: return 1.0 / (1.0 - a / z);
    }
    return 1.0;
}

// ---------------------------------------------------------------------------
// System obtained from a parent by one elementary generator, Y_new = R Y.

class TransformedView final : public SystemView {
public:
    TransformedView(ViewPtr parent, GenKind kind, cplx a) : parent_(std::move(parent)), kind_(kind), a_(a) {
        n_max_ = parent_->n_max() - (raises_degree(kind) ? 1 : 0);
        if (n_max_ < 0) throw InputError("TransformedView: parent system too shallow");
        for (int n = 0; n <= n_max_; ++n) {
            gens_.push_back(generator(*parent_, kind, a, n));
            const auto& g = gens_.back();
            Polynomial ph = parent_->phi(n).resized(n), ps = parent_->phis(n);
            auto row = [&](int i) {
                Polynomial u = Polynomial({g.U(i, 0), g.V(i, 0)}), v = Polynomial({g.U(i, 1), g.V(i, 1)});
                return g.scale * (mul(u, ph) + mul(v, ps));
            };
            Polynomial top = row(0), bot = row(1);
            if (g.denom == GeneratorMatrix::Denominator::linear) {
                top = top.divide_linear(a);
                bot = bot.divide_linear(a);
            } else if (g.denom == GeneratorMatrix::Denominator::z) {
                top = top.divide_linear(0.0);
                bot = bot.divide_linear(0.0);
            }
            phi_.push_back(top.resized(n));
            phibar_.push_back(reciprocal(bot.resized(n), n));
        }
    }

    int n_max() const override { return n_max_; }
    cplx kappa(int n) const override {
        check_n(n, "kappa");
        return gens_[static_cast<std::size_t>(n)].coeffs.kappa;
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
    cplx xi(int n, cplx z) const override { return assoc(n, z, false); }
    cplx xis(int n, cplx z) const override { return assoc(n, z, true); }

    const GeneratorMatrix& generator_at(int n) const { return gens_[static_cast<std::size_t>(n)]; }
    GenKind kind() const { return kind_; }
    cplx location() const { return a_; }

private:
    static Polynomial mul(const Polynomial& a, const Polynomial& b) {
        std::vector<cplx> c(a.size() + b.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a.coeffs()[i] * b.coeffs()[j];
        return Polynomial(std::move(c));
    }
    // (w_new/w_old) R applied to the second column of Y, with the generator's
    // denominator cancelled against the weight ratio. E(z) is what remains.
    cplx assoc_raw(int n, cplx z, bool star) const {
        const auto& g = gens_[static_cast<std::size_t>(n)];
        Mat2 N = g.numerator(z);
        cplx x = parent_->xi(n, z), xs = parent_->xis(n, z);
        cplx v = star ? (N(1, 1) * xs - N(1, 0) * x) : (N(0, 0) * x - N(0, 1) * xs);
        return g.scale * v / remaining_denominator(z);
    }
    cplx remaining_denominator(cplx z) const {
        switch (kind_) {
            case GenKind::K1: return 1.0;
            case GenKind::L1: return z - a_;
            case GenKind::K1star: return z;
            case GenKind::L1star: return z - a_;
        }
        return 1.0;
    }
    cplx assoc(int n, cplx z, bool star) const {
        check_n(n, star ? "xis" : "xi");
        if (on_circle(z)) throw DomainError("associated function: |z| = 1");
        cplx e = remaining_denominator(z);
        if (std::abs(e) > 1e-6) return assoc_raw(n, z, star);
        // Removable singularity: mean value over a small circle.
        cplx c = kind_ == GenKind::K1star ? cplx{} : a_;
        constexpr int P = 8;
        constexpr double h = 1e-3;
        cplx s = 0.0;
        for (int i = 0; i < P; ++i) s += assoc_raw(n, c + std::polar(h, 2.0 * std::numbers::pi * (i + 0.5) / P), star);
        return s / static_cast<double>(P);
    }

    ViewPtr parent_;
    GenKind kind_;
    cplx a_;
    int n_max_ = 0;
    std::vector<GeneratorMatrix> gens_;
    std::vector<Polynomial> phi_, phibar_;
    Polynomial zero_{};
};

// Successive elementary transformations: alphas, alpha_stars, betas, beta_stars.
inline ViewPtr chain_transform(ViewPtr base, const CguShift& shift) {
    validate_shift(shift);
    ViewPtr v = std::move(base);
    for (auto a : shift.alphas) v = std::make_shared<TransformedView>(v, GenKind::K1, a);
    for (auto a : shift.alpha_stars) v = std::make_shared<TransformedView>(v, GenKind::K1star, a);
    for (auto b : shift.betas) v = std::make_shared<TransformedView>(v, GenKind::L1, b);
    for (auto b : shift.beta_stars) v = std::make_shared<TransformedView>(v, GenKind::L1star, b);
    return v;
}

// ---------------------------------------------------------------------------
// General bordered-determinant formula for a rational modification.

struct DeterminantResult {
    cplx kappa_sq{};
    Polynomial phi, phis;
    bool degenerate = false;
};

inline DeterminantResult determinant_transform(const SystemView& s, const CguShift& sh, int n) {
    int K = sh.K(), Ks = sh.Ks(), L = sh.L(), Ls = sh.Ls();
    if (n + K + Ks > s.n_max()) throw InputError("determinant_transform: base system too shallow");
    struct Col {
        int m, p;
    };
    std::vector<Col> cols;
    for (int i = 0; i < L; ++i) cols.push_back({n - Ls - L + i, L - i});
    for (int i = 0; i < Ls; ++i) cols.push_back({n - Ls + i, 0});
    for (int i = 0; i <= Ks; ++i) cols.push_back({n + i, -i});
    for (int i = 1; i <= K; ++i) cols.push_back({n + Ks + i, -Ks});
    int C = static_cast<int>(cols.size());
    std::vector<int> neg;
    for (int i = 0; i < C; ++i)
        if (cols[static_cast<std::size_t>(i)].m < 0) neg.push_back(i);

    std::vector<cplx> phi_rows(sh.alphas), xi_rows(sh.betas);
    phi_rows.insert(phi_rows.end(), sh.alpha_stars.begin(), sh.alpha_stars.end());
    xi_rows.insert(xi_rows.end(), sh.beta_stars.begin(), sh.beta_stars.end());
    int R = C - 1;

    DeterminantResult out;
    std::vector<cplx> q_fam[2];
    cplx lim = 0.0;
    double lim_scale = 0.0;
    for (int star = 0; star < 2; ++star) {
        auto power_of = [&](int i) {
            int idx = static_cast<int>(std::find(neg.begin(), neg.end(), i) - neg.begin());
            return n - Ls + star + idx;
        };
        MatX Mr(R, C);
        for (int r = 0; r < R; ++r) {
            bool poly_row = r < static_cast<int>(phi_rows.size());
            cplx x = poly_row ? phi_rows[static_cast<std::size_t>(r)] : xi_rows[static_cast<std::size_t>(r) - phi_rows.size()];
            for (int i = 0; i < C; ++i) {
                const auto& c = cols[static_cast<std::size_t>(i)];
                cplx v;
                if (c.m < 0) {
                    v = poly_row ? cplx{} : ipow(x, power_of(i));
                } else if (poly_row) {
                    v = ipow(x, c.p) * (star ? s.phis_at(c.m, x) : s.phi_at(c.m, x));
                } else {
                    v = ipow(x, c.p) * (star ? s.xis(c.m, x) : s.xi(c.m, x));
                }
                Mr(r, i) = v;
            }
        }
        std::vector<cplx> cof(static_cast<std::size_t>(C));
        for (int i = 0; i < C; ++i) {
            if (R == 0) {
                cof[0] = 1.0;
                break;
            }
            MatX sub(R, R);
            for (int c2 = 0, cc = 0; c2 < C; ++c2) {
                if (c2 == i) continue;
                sub.col(cc++) = Mr.col(c2);
            }
            cplx d = Eigen::PartialPivLU<MatX>(sub).determinant();
            cof[static_cast<std::size_t>(i)] = (i % 2 == 0 ? 1.0 : -1.0) * d;
        }
        Polynomial poly({0.0});
        double scale = 0.0;
        for (int i = 0; i < C; ++i) {
            const auto& c = cols[static_cast<std::size_t>(i)];
            if (c.m < 0) continue;
            Polynomial basis = star ? s.phis(c.m) : s.phi(c.m).resized(c.m);
            int sh_pow = c.p + Ks;
            poly += cof[static_cast<std::size_t>(i)] * basis.shifted(sh_pow);
            double bn = 0.0;
            for (auto v : basis.coeffs()) bn = std::max(bn, std::abs(v));
            scale += std::abs(cof[static_cast<std::size_t>(i)]) * bn;
        }
        Polynomial q = poly;
        for (auto a : phi_rows) q = q.divide_linear(a);
        q = q.resized(n);
        q_fam[star] = q.coeffs();
        double lead = std::abs(star ? q.coeff(0) : q.coeff(n));
        if (!(lead > 1e-10 * scale)) out.degenerate = true;
        if (star) {
            for (int i = 0; i < C; ++i) {
                const auto& c = cols[static_cast<std::size_t>(i)];
                cplx term = 0.0;
                if (c.m < 0) {
                    if (power_of(i) == L) term = cof[static_cast<std::size_t>(i)];
                } else if (c.p == L) {
                    term = cof[static_cast<std::size_t>(i)] * 2.0 / s.kappa(c.m);
                }
                lim += term;
                lim_scale += std::abs(term);
            }
            if (!(std::abs(lim) > 1e-10 * lim_scale)) out.degenerate = true;
        }
    }
    if (out.degenerate) return out;
    cplx qs0 = q_fam[1][0], qn = q_fam[0][static_cast<std::size_t>(n)];
    out.kappa_sq = 2.0 * qs0 / lim;
    cplx kk = std::sqrt(out.kappa_sq);
    out.phi = (kk / qn) * Polynomial(q_fam[0]);
    out.phis = (kk / qs0) * Polynomial(q_fam[1]);
    return out;
}

// ---------------------------------------------------------------------------
// Transformed systems.

enum class TransformRoute { determinant, chain, automatic };

struct TransformedDegree {
    int n = 0;
    cplx kappa_sq, kappa, r, rbar;
    Polynomial phi, phibar;
    std::string route;
};

struct TransformResult {
    std::vector<TransformedDegree> degrees;
    ViewPtr chain;  // present whenever the chain route was constructed
};

inline TransformResult transform_system(ViewPtr base, const CguShift& shift, int n_out,
                                        TransformRoute route = TransformRoute::automatic) {
    validate_shift(shift);
    if (n_out < 0) throw InputError("transform_system: n_out must be nonnegative");
    int need = n_out + shift.K() + shift.Ks();
    if (base->n_max() < need)
        throw InputError("transform_system: base depth " + std::to_string(base->n_max()) + " insufficient, need " +
                         std::to_string(need));
    TransformResult res;
    auto ensure_chain = [&]() {
        if (!res.chain) res.chain = chain_transform(base, shift);
    };
    if (route == TransformRoute::chain) ensure_chain();
    for (int n = 0; n <= n_out; ++n) {
        TransformedDegree d;
        d.n = n;
        bool done = false;
        if (route != TransformRoute::chain) {
            auto dr = determinant_transform(*base, shift, n);
            if (!dr.degenerate) {
                d.kappa_sq = dr.kappa_sq;
                d.kappa = std::sqrt(dr.kappa_sq);
                d.phi = dr.phi;
                d.phibar = reciprocal(dr.phis, n);
                d.route = "determinant";
                done = true;
            } else if (route == TransformRoute::determinant) {
                throw DegeneracyError("transform_system: singular determinant at n = " + std::to_string(n));
            }
        }
        if (!done) {
            ensure_chain();
            d.kappa = res.chain->kappa(n);
            d.kappa_sq = d.kappa * d.kappa;
            d.phi = res.chain->phi(n);
            d.phibar = res.chain->phibar(n);
            d.route = "chain";
        }
        d.r = d.phi.coeff(0) / d.kappa;
        d.rbar = d.phibar.coeff(0) / d.kappa;
        res.degrees.push_back(std::move(d));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Compatibility of the generators with the recurrence and the spectral derivative.

inline Mat2 recurrence_compat_residual(ViewPtr s, GenKind kind, cplx a, int n, cplx z) {
    TransformedView tv(s, kind, a);
    Mat2 lhs = tv.generator_at(n + 1)(z) * k_matrix(*s, n, z);
    Mat2 rhs = k_matrix(tv, n, z) * tv.generator_at(n)(z);
    return lhs - rhs;
}

// Transformed spectral matrices of the K1 and L1 generators.
inline Mat2 transformed_spectral_matrix(const SystemView& s, GenKind kind, cplx a, int n, const Mat2& A, cplx z) {
    cplx k = s.kappa(n);
    if (z == a) throw DomainError("transformed_spectral_matrix: z at the modification point");
    if (kind == GenKind::K1) {
        cplx k1 = s.kappa(n + 1), p = s.phi_at(n, a), p1 = s.phi_at(n + 1, a), ps = s.phis_at(n, a);
        cplx f0 = s.phi(n + 1).coeff(0);
        Mat2 M1 = mat2(-f0 * ps, f0 * p, a * k1 * ps, -a * k1 * p) / (k * p1);
        Mat2 Lm = mat2(k * p1 - k1 * p * z, -f0 * p, -k1 * ps * z, a * k1 * p);
        Mat2 Rm = mat2(-a * k1 * p, -f0 * p, -k1 * ps * z, k1 * p * z - k * p1);
        return (M1 + Lm * A * Rm / (k * k1 * p * p1)) / (z - a);
    }
    if (kind == GenKind::L1) {
        auto pv = s.prev(n, a);
        cplx x = s.xi(n, a), xs = s.xis(n, a), pb = s.phibar(n).coeff(0);
        Mat2 M1 = mat2(0.0, 0.0, -pb, k) / k;
        Mat2 Lm = mat2(a * k * xs, a * k * x, pb * xs * z, -k * xs * z + a * pv.kxis);
        Mat2 Rm = mat2(k * xs * z - a * pv.kxis, a * k * x, pb * xs * z, -a * k * xs);
        return (M1 + Lm * A * Rm / (a * pv.kxis * k * xs)) / (z - a);
    }
    throw InputError("transformed_spectral_matrix: only K1 and L1 have a closed form");
}

// R' + R A_n - A^new_n R. For K1/L1 A^new is the closed form; for the
// conjugated kinds it is assembled from the residues of the rebuilt modified weight.
inline Mat2 spectral_compat_residual(ViewPtr s, const WeightSpec& w, const SemiClassicalData& d, GenKind kind, cplx a,
                                     int n, cplx z, const BopsSystem* rebuilt = nullptr) {
    auto g = generator(*s, kind, a, n);
    Mat2 A = spectral_matrix(residue_set(*s, d, n), d, z);
    Mat2 Anew;
    if (kind == GenKind::K1 || kind == GenKind::L1) {
        Anew = transformed_spectral_matrix(*s, kind, a, n, A, z);
    } else {
        CguShift sh;
        (kind == GenKind::K1star ? sh.alpha_stars : sh.beta_stars).push_back(a);
        WeightSpec wm = apply_shift(w, sh);
        auto dm = semiclassical_data(wm);
        std::optional<BopsSystem> own;
        if (!rebuilt) {
            own = build_system(wm, n + 1);
            rebuilt = &*own;
        }
        Anew = spectral_matrix(residue_set(*rebuilt, dm, n), dm, z);
    }
    Mat2 R = g(z);
    return g.derivative(z) + R * A - Anew * R;
}

}  // namespace bops
