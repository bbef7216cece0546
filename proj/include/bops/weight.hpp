// SPDX-License-Identifier: MIT
#pragma once

#include "bops/common.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bops {

enum class FactorKind { outer, conjugated, monomial };

inline const char* to_string(FactorKind k) {
    switch (k) {
        case FactorKind::outer: return "outer";
        case FactorKind::conjugated: return "conjugated";
        case FactorKind::monomial: return "monomial";
    }
    return "?";
}

// outer: (z - zero)^exponent with |zero| > 1
// conjugated: (1 - zero/z)^exponent with 0 < |zero| < 1
// monomial: z^exponent with integer exponent
struct WeightFactor {
    FactorKind kind = FactorKind::outer;
    cplx zero{};
    cplx exponent{};
};

struct RationalMod {
    std::vector<cplx> alphas, alpha_stars, betas, beta_stars;
    bool empty() const { return alphas.empty() && alpha_stars.empty() && betas.empty() && beta_stars.empty(); }
};

struct FourierTable {
    int k_min = 0;
    int k_max = 0;
    std::vector<cplx> coeffs;
    double tail_bound = 0.0;

    cplx at(int k) const {
        if (k < k_min || k > k_max) return 0.0;
        return coeffs[static_cast<std::size_t>(k - k_min)];
    }
    int range() const { return std::min(-k_min, k_max); }
};

struct WeightSpec {
    std::vector<WeightFactor> factors;
    std::optional<FourierTable> base_fourier;
    std::optional<RationalMod> rational_mod;
    // Constant multiplier. Stays 1 for user weights; moving singularities
    // continuously uses it to stay on one branch of (-z_j)^rho.
    cplx scale{1.0, 0.0};
};

struct FourierOptions {
    double tol = 1e-12;
    int n_min = 64;
    int n_max = 1 << 16;
    int min_range = 0;  // retained coefficients must cover |k| <= min_range
};

inline constexpr double circle_margin = 1e-10;
inline constexpr double merge_tol = 1e-14;

inline bool on_circle(cplx z) { return std::abs(std::abs(z) - 1.0) <= circle_margin; }

inline std::string fmt_c(cplx z) {
    std::ostringstream os;
    os.precision(6);
    os << "(" << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i)";
    return os.str();
}

inline bool is_integer(cplx e) { return e.imag() == 0.0 && std::round(e.real()) == e.real(); }

inline int monomial_exponent(const WeightSpec& w) {
    int m = 0;
    for (const auto& f : w.factors)
        if (f.kind == FactorKind::monomial) m += static_cast<int>(std::lround(f.exponent.real()));
    return m;
}

inline void validate_weight(const WeightSpec& w) {
    if (w.base_fourier && !w.factors.empty())
        throw InputError("weight: exactly one of factors / base_fourier may define the base");
    for (const auto& f : w.factors) {
        switch (f.kind) {
            case FactorKind::outer:
                if (!(std::abs(f.zero) > 1.0 + circle_margin))
                    throw InputError("weight: outer factor zero " + fmt_c(f.zero) + " must satisfy |z| > 1");
                break;
            case FactorKind::conjugated:
                if (!(std::abs(f.zero) < 1.0 - circle_margin) || f.zero == cplx{})
                    throw InputError("weight: conjugated factor zero " + fmt_c(f.zero) + " must satisfy 0 < |z| < 1");
                break;
            case FactorKind::monomial:
                if (!is_integer(f.exponent)) throw InputError("weight: monomial exponent must be an integer");
                break;
        }
    }
    if (w.rational_mod) {
        const auto& r = *w.rational_mod;
        auto check_list = [](const std::vector<cplx>& v, const char* name) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (on_circle(v[i])) throw DomainError(std::string("weight: ") + name + " entry " + fmt_c(v[i]) + " lies on the unit circle");
                for (std::size_t k = 0; k < i; ++k)
                    if (std::abs(v[i] - v[k]) <= merge_tol)
                        throw InputError(std::string("weight: ") + name + " entries must be pairwise distinct");
            }
        };
        check_list(r.alphas, "alphas");
        check_list(r.alpha_stars, "alpha_stars");
        check_list(r.betas, "betas");
        check_list(r.beta_stars, "beta_stars");
        for (auto a : r.alphas)
            for (auto b : r.betas)
                if (std::abs(a - b) <= merge_tol) throw InputError("weight: alpha coincides with beta (generic condition)");
        for (auto a : r.alpha_stars)
            for (auto b : r.beta_stars)
                if (std::abs(a - b) <= merge_tol) throw InputError("weight: alpha* coincides with beta* (generic condition)");
    }
}

inline cplx factor_value(const WeightFactor& f, cplx z) {
    switch (f.kind) {
        case FactorKind::outer:
            return std::pow(-f.zero, f.exponent) * std::pow(1.0 - z / f.zero, f.exponent);
        case FactorKind::conjugated:
            return std::pow(1.0 - f.zero / z, f.exponent);
        case FactorKind::monomial:
            return ipow(z, static_cast<int>(std::lround(f.exponent.real())));
    }
    return 1.0;
}

inline cplx fourier_series(const FourierTable& t, cplx z) {
    cplx s = 0.0;
    for (int k = t.k_min; k <= t.k_max; ++k) s += t.at(k) * ipow(z, k);
    return s;
}

inline cplx rational_factor(const RationalMod& r, cplx z) {
    cplx v = 1.0;
    for (auto a : r.alphas) v *= (z - a);
    for (auto a : r.alpha_stars) v *= (1.0 - a / z);
    for (auto b : r.betas) v /= (z - b);
    for (auto b : r.beta_stars) v /= (1.0 - b / z);
    return v;
}

inline cplx evaluate_weight(const WeightSpec& w, cplx z) {
    cplx v = w.scale;
    for (const auto& f : w.factors) {
        bool needs_nonzero = f.kind != FactorKind::outer;
        if (needs_nonzero && z == cplx{})
            throw DomainError(std::string("evaluate_weight: z = 0 is singular for the ") + to_string(f.kind) + " factor");
        if (f.kind != FactorKind::monomial && z == f.zero)
            throw DomainError(std::string("evaluate_weight: z is the zero of the ") + to_string(f.kind) + " factor at " + fmt_c(f.zero));
        v *= factor_value(f, z);
    }
    if (w.base_fourier) v *= fourier_series(*w.base_fourier, z);
    if (w.rational_mod) {
        const auto& r = *w.rational_mod;
        for (auto b : r.betas)
            if (z == b) throw DomainError("evaluate_weight: z is the pole beta " + fmt_c(b));
        for (auto b : r.beta_stars)
            if (z == b) throw DomainError("evaluate_weight: z is the pole beta* " + fmt_c(b));
        if (z == cplx{} && !(r.alpha_stars.empty() && r.beta_stars.empty()))
            throw DomainError("evaluate_weight: z = 0 is singular for the conjugated modification");
        v *= rational_factor(r, z);
    }
    return v;
}

// w'(z)/w(z) for factor-based weights (including a rational modification).
inline cplx log_derivative(const WeightSpec& w, cplx z) {
    if (w.base_fourier) throw InputError("log_derivative: requires a factor-based weight");
    cplx s = 0.0;
    for (const auto& f : w.factors) {
        switch (f.kind) {
            case FactorKind::outer: s += f.exponent / (z - f.zero); break;
            case FactorKind::conjugated: s += f.exponent * f.zero / (z * (z - f.zero)); break;
            case FactorKind::monomial: s += f.exponent / z; break;
        }
    }
    if (w.rational_mod) {
        const auto& r = *w.rational_mod;
        for (auto a : r.alphas) s += 1.0 / (z - a);
        for (auto a : r.alpha_stars) s += a / (z * (z - a));
        for (auto b : r.betas) s -= 1.0 / (z - b);
        for (auto b : r.beta_stars) s -= b / (z * (z - b));
    }
    return s;
}

namespace detail {

// c_k = (1/N) sum_j w(e^{2 pi i j/N}) e^{-2 pi i j k/N}
inline std::vector<cplx> dft_samples(const WeightSpec& w, int N) {
    std::vector<cplx> in(static_cast<std::size_t>(N)), out(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        double th = 2.0 * std::numbers::pi * j / N;
        in[static_cast<std::size_t>(j)] = evaluate_weight(w, std::polar(1.0, th));
    }
    fftw_plan p = fftw_plan_dft_1d(N, reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
    for (auto& v : out) v /= static_cast<double>(N);
    return out;
}

}  // namespace detail

inline FourierTable fourier_coefficients(const WeightSpec& w, const FourierOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw InputError("fourier_coefficients: tol must be positive");
    validate_weight(w);
    double tail = 0.0;
    for (int N = opt.n_min; N <= opt.n_max; N *= 2) {
        int K = N / 2 - 1;
        if (K < opt.min_range && N < opt.n_max) continue;
        auto c = detail::dft_samples(w, N);
        tail = 0.0;
        for (int k = (3 * N) / 8; k < N / 2; ++k) {
            tail = std::max(tail, std::abs(c[static_cast<std::size_t>(k)]));
            tail = std::max(tail, std::abs(c[static_cast<std::size_t>(N - k)]));
        }
        if (tail < opt.tol && K >= opt.min_range) {
            FourierTable t;
            t.k_min = -K;
            t.k_max = K;
            t.coeffs.resize(static_cast<std::size_t>(2 * K + 1));
            for (int k = -K; k <= K; ++k) t.coeffs[static_cast<std::size_t>(k + K)] = c[static_cast<std::size_t>((k + N) % N)];
            t.tail_bound = tail;
            return t;
        }
    }
    std::ostringstream os;
    os << "fourier_coefficients: no convergence up to N = " << opt.n_max << " (achieved tail " << tail << ")";
    throw AccuracyError(os.str());
}

// F(z) from the kernel (zeta+z)/(zeta-z).
inline cplx caratheodory(const FourierTable& t, cplx z) {
    if (on_circle(z)) throw DomainError("caratheodory: |z| = 1");
    cplx s = 0.0;
    if (std::abs(z) < 1.0) {
        cplx p = 1.0;
        for (int k = 1; k <= t.k_max; ++k) {
            p *= z;
            s += t.at(k) * p;
        }
        return t.at(0) + 2.0 * s;
    }
    cplx p = 1.0, zi = 1.0 / z;
    for (int k = 1; k <= -t.k_min; ++k) {
        p *= zi;
        s += t.at(-k) * p;
    }
    return -t.at(0) - 2.0 * s;
}

// g_j(z) = 2 sum_{m>=0} z^{m+1} w_{m+1-j}, interior only.
inline cplx g_moment(const FourierTable& t, int j, cplx z) {
    if (!(std::abs(z) < 1.0 - circle_margin)) throw DomainError("g_moment: requires |z| < 1");
    cplx s = 0.0, p = 1.0;
    for (int m = 0; m + 1 - j <= t.k_max; ++m) {
        p *= z;
        s += p * t.at(m + 1 - j);
    }
    return 2.0 * s;
}

namespace detail {

inline void add_exponent(std::vector<WeightFactor>& fs, FactorKind kind, cplx zero, cplx delta) {
    for (auto it = fs.begin(); it != fs.end(); ++it) {
        if (it->kind == kind && std::abs(it->zero - zero) <= merge_tol) {
            it->exponent += delta;
            if (std::abs(it->exponent) <= merge_tol) fs.erase(it);
            return;
        }
    }
    fs.push_back({kind, zero, delta});
}

inline void add_monomial(std::vector<WeightFactor>& fs, int delta) {
    if (delta == 0) return;
    for (auto it = fs.begin(); it != fs.end(); ++it) {
        if (it->kind == FactorKind::monomial) {
            it->exponent += static_cast<double>(delta);
            if (it->exponent == cplx{}) fs.erase(it);
            return;
        }
    }
    fs.push_back({FactorKind::monomial, 0.0, static_cast<double>(delta)});
}

// Multiply (sign=+1) or divide (sign=-1) by (z-a) (star=false) or (1-a/z) (star=true).
inline void fold_factor(std::vector<WeightFactor>& fs, cplx a, int sign, bool star) {
    if (on_circle(a)) throw DomainError("modify_weight: location " + fmt_c(a) + " lies on the unit circle");
    if (std::abs(a) > 1.0) {
        add_exponent(fs, FactorKind::outer, a, static_cast<double>(sign));
        if (star) add_monomial(fs, -sign);
    } else {
        if (a == cplx{}) {
            if (!star) add_monomial(fs, sign);
            return;
        }
        add_exponent(fs, FactorKind::conjugated, a, static_cast<double>(sign));
        if (!star) add_monomial(fs, sign);
    }
}

}  // namespace detail

// Multiplies the weight by prod(z-alpha) prod(1-alpha*/z) / (prod(z-beta) prod(1-beta*/z)).
// Factor-based weights absorb the modification into their factor list, merging
// exponents at coinciding zeros; Fourier-based weights keep it as rational_mod.
inline WeightSpec modify_weight(const WeightSpec& base, const std::vector<cplx>& alphas, const std::vector<cplx>& alpha_stars,
                                const std::vector<cplx>& betas, const std::vector<cplx>& beta_stars) {
    RationalMod r{alphas, alpha_stars, betas, beta_stars};
    WeightSpec probe;
    probe.rational_mod = r;
    validate_weight(probe);
    WeightSpec out = base;
    if (base.base_fourier || base.rational_mod) {
        RationalMod merged = base.rational_mod.value_or(RationalMod{});
        auto append = [](std::vector<cplx>& d, const std::vector<cplx>& s) { d.insert(d.end(), s.begin(), s.end()); };
        append(merged.alphas, alphas);
        append(merged.alpha_stars, alpha_stars);
        append(merged.betas, betas);
        append(merged.beta_stars, beta_stars);
        out.rational_mod = merged;
        return out;
    }
    for (auto a : alphas) detail::fold_factor(out.factors, a, +1, false);
    for (auto a : alpha_stars) detail::fold_factor(out.factors, a, +1, true);
    for (auto b : betas) detail::fold_factor(out.factors, b, -1, false);
    for (auto b : beta_stars) detail::fold_factor(out.factors, b, -1, true);
    return out;
}

}  // namespace bops
