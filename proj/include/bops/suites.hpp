// SPDX-License-Identifier: MIT
#pragma once

#include "bops/cgu.hpp"
#include "bops/io.hpp"
#include "bops/schlesinger.hpp"
#include "bops/semiclassical.hpp"
#include "bops/system.hpp"
#include "bops/tau.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace bops {

// ---------------------------------------------------------------------------
// Configuration and report.

struct SuiteConfig {
    WeightSpec weight;
    int n_max = 12;
    int deep_n_max = 6;  // cap for finite-difference, compatibility and lattice checks
    double fd_step = 1e-5;
    std::uint64_t seed = 7;
    FourierOptions fourier{};
    std::optional<double> tol;                // replaces every default tolerance
    std::map<std::string, double> tol_map;    // per-id (or id-prefix) overrides
};

struct CheckRecord {
    std::string id;
    int n = 0;
    std::optional<int> j, k;
    std::optional<cplx> z;
    int samples = 0;
    double residual = 0.0;
    double tol = 0.0;
    bool pass = true;
};

class Report {
public:
    explicit Report(const SuiteConfig& cfg) : cfg_(&cfg) {}

    // Residuals sharing (id, n, j, k) are merged into one record holding the worst sample.
    void add(const std::string& id, double default_tol, int n, double residual, std::optional<cplx> z = std::nullopt,
             std::optional<int> j = std::nullopt, std::optional<int> k = std::nullopt) {
        if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
        auto key = std::make_tuple(id, j.value_or(-1), k.value_or(-1), n);
        auto it = records_.find(key);
        if (it == records_.end()) {
            CheckRecord r;
            r.id = id;
            r.n = n;
            r.j = j;
            r.k = k;
            r.z = z;
            r.samples = 1;
            r.residual = residual;
            r.tol = resolve_tol(id, default_tol);
            r.pass = residual < r.tol;
            records_.emplace(key, r);
            return;
        }
        auto& r = it->second;
        ++r.samples;
        if (residual > r.residual) {
            r.residual = residual;
            r.z = z;
        }
        r.pass = r.residual < r.tol;
    }

    void add_hirota(const HirotaRecord& h) { hirota_.push_back(h); }

    std::vector<CheckRecord> records() const {
        std::vector<CheckRecord> out;
        for (const auto& [key, r] : records_) out.push_back(r);
        return out;
    }
    std::vector<HirotaRecord> hirota() const {
        auto out = hirota_;
        std::sort(out.begin(), out.end(), [](const HirotaRecord& a, const HirotaRecord& b) {
            return std::make_tuple(a.equation, a.j, a.k.value_or(-1), a.n) < std::make_tuple(b.equation, b.j, b.k.value_or(-1), b.n);
        });
        return out;
    }
    std::optional<CheckRecord> first_failure() const {
        for (const auto& [key, r] : records_)
            if (!r.pass) return r;
        return std::nullopt;
    }
    bool passed() const { return !first_failure(); }

    double resolve_tol(const std::string& id, double default_tol) const {
        std::size_t best = 0;
        std::optional<double> hit;
        for (const auto& [prefix, t] : cfg_->tol_map) {
            bool match = id == prefix || (id.size() > prefix.size() && id.compare(0, prefix.size(), prefix) == 0 &&
                                          id[prefix.size()] == '.');
            if (match && prefix.size() >= best) {
                best = prefix.size();
                hit = t;
            }
        }
        if (hit) return *hit;
        return cfg_->tol.value_or(default_tol);
    }

private:
    const SuiteConfig* cfg_;
    std::map<std::tuple<std::string, int, int, int>, CheckRecord> records_;
    std::vector<HirotaRecord> hirota_;
};

inline std::string describe(const CheckRecord& r) {
    std::string s = r.id + " n=" + std::to_string(r.n);
    if (r.j) s += " j=" + std::to_string(*r.j);
    if (r.k) s += " k=" + std::to_string(*r.k);
    if (r.z) s += " z=" + fmt_c(*r.z);
    std::ostringstream os;
    os.precision(3);
    os << " residual=" << r.residual << " tol=" << r.tol;
    return s + os.str();
}

// ---------------------------------------------------------------------------
// Deterministic sample points.

struct SampleSet {
    std::vector<cplx> interior, exterior;  // 20 each
    std::vector<cplx> ring;                // 8 on |z| = 0.5 then 8 on |z| = 2
    std::vector<cplx> subset() const {     // 4 interior + 4 exterior
        std::vector<cplx> v(interior.begin(), interior.begin() + 4);
        v.insert(v.end(), exterior.begin(), exterior.begin() + 4);
        return v;
    }
    std::vector<cplx> all() const {
        auto v = interior;
        v.insert(v.end(), exterior.begin(), exterior.end());
        return v;
    }
};

namespace detail {

inline double segment_distance(cplx z, cplx a, double t_lo, double t_hi) {
    double t = std::clamp((z * std::conj(a)).real() / std::norm(a), t_lo, t_hi);
    return std::abs(z - a * t);
}

// Distance from z to every singular point and branch cut of the weight and
// to any extra points that checks evaluate at.
inline double clearance(cplx z, const WeightSpec& w, const std::vector<cplx>& extra) {
    double d = std::abs(std::abs(z) - 1.0);
    for (const auto& f : w.factors) {
        if (f.kind == FactorKind::outer) d = std::min(d, segment_distance(z, f.zero, 1.0, 1e300));
        if (f.kind == FactorKind::conjugated) d = std::min(d, segment_distance(z, f.zero, 0.0, 1.0));
    }
    if (w.rational_mod) {
        const auto& r = *w.rational_mod;
        for (const auto* v : {&r.alphas, &r.alpha_stars, &r.betas, &r.beta_stars})
            for (auto a : *v) d = std::min(d, std::abs(z - a));
    }
    for (auto a : extra) d = std::min(d, std::abs(z - a));
    return d;
}

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    cplx draw(double r_lo, double r_hi, const WeightSpec& w, const std::vector<cplx>& extra) {
        constexpr double margin = 0.05;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            double r = r_lo + (r_hi - r_lo) * uniform();
            double t = 2.0 * std::numbers::pi * uniform();
            cplx z = std::polar(r, t);
            if (clearance(z, w, extra) > margin) return z;
        }
        throw InputError("sample points: no admissible point in the annulus " + std::to_string(r_lo) + ".." + std::to_string(r_hi));
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace detail

inline SampleSet make_samples(std::uint64_t seed, const WeightSpec& w, const std::vector<cplx>& extra = {}) {
    detail::Sampler s(seed);
    SampleSet out;
    for (int i = 0; i < 20; ++i) out.interior.push_back(s.draw(0.15, 0.85, w, extra));
    for (int i = 0; i < 20; ++i) out.exterior.push_back(s.draw(1.15, 3.0, w, extra));
    for (int i = 0; i < 8; ++i) out.ring.push_back(s.draw(0.5, 0.5, w, extra));
    for (int i = 0; i < 8; ++i) out.ring.push_back(s.draw(2.0, 2.0, w, extra));
    return out;
}

// Relative difference without the absolute floor.
inline double relative(cplx a, cplx b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline double normalized(cplx residual, std::initializer_list<cplx> terms) {
    double s = 1.0;
    for (auto t : terms) s = std::max(s, std::abs(t));
    return std::abs(residual) / s;
}

// Parameters of the elementary generators exercised by the cgu suite.
struct GeneratorCase {
    GenKind kind;
    cplx a;
};

inline std::vector<GeneratorCase> generator_cases() {
    return {{GenKind::K1, 2.0},           {GenKind::K1, 4.0},           {GenKind::L1, 2.0},
            {GenKind::L1, 3.0},           {GenKind::K1star, 0.5},       {GenKind::K1star, cplx(0.3, 0.1)},
            {GenKind::L1star, 0.5},       {GenKind::L1star, cplx(0.3, 0.1)}};
}

struct NamedShift {
    std::string name;
    CguShift shift;
};

inline std::vector<NamedShift> cgu_cases() {
    return {{"K", {{2.0}, {}, {}, {}}},
            {"L", {{}, {}, {3.0}, {}}},
            {"L2", {{}, {}, {2.5, -3.0}, {}}},
            {"Kstar", {{}, {0.5}, {}, {}}},
            {"Lstar", {{}, {}, {}, {0.4}}},
            {"composite", {{2.0}, {0.5}, {3.0}, {0.4}}}};
}

inline std::vector<cplx> sample_exclusions(const WeightSpec& w) {
    std::vector<cplx> v{0.0};
    for (const auto& f : w.factors)
        if (f.kind != FactorKind::monomial) v.push_back(f.zero);
    for (const auto& g : generator_cases()) v.push_back(g.a);
    return v;
}

// Velocities used by the deformation checks: 1, 0.5i, 1, 0.5i, ...
inline std::vector<cplx> default_velocities(int M) {
    std::vector<cplx> v;
    for (int j = 0; j < M; ++j) v.push_back(j % 2 == 0 ? cplx(1.0, 0.0) : cplx(0.0, 0.5));
    return v;
}

// ---------------------------------------------------------------------------
// core: identities of a single system.

inline void core_suite(const SuiteConfig& c, const SampleSet& sp, Report& rep) {
    const int N = c.n_max;
    const auto s = build_system(c.weight, N + 3, c.fourier);
    const auto pts = sp.all();
    auto lam = [&](int m) { return m < 1 ? cplx{} : s.phi(m).coeff(m - 1); };
    auto mu = [&](int m) { return m < 2 ? cplx{} : s.phi(m).coeff(m - 2); };
    auto lamb = [&](int m) { return m < 1 ? cplx{} : s.phibar(m).coeff(m - 1); };
    auto mub = [&](int m) { return m < 2 ? cplx{} : s.phibar(m).coeff(m - 2); };
    auto k = [&](int m) { return s.kappa(m); };
    auto p0 = [&](int m) { return s.phi(m).coeff(0); };
    auto pb0 = [&](int m) { return s.phibar(m).coeff(0); };

    for (int n = 0; n <= N; ++n) {
        rep.add("core.kappa_toeplitz", 1e-12, n, relative(k(n) * k(n) * s.I(n + 1), s.I(n)));
        if (n >= 1) {
            rep.add("core.toeplitz_ratio", 1e-10, n,
                    rel_diff(s.I(n + 1) * s.I(n - 1) / (s.I(n) * s.I(n)), 1.0 - s.r(n) * s.rbar(n)));
            rep.add("core.kappa_recurrence", 1e-10, n,
                    normalized(k(n) * k(n) - k(n - 1) * k(n - 1) - p0(n) * pb0(n), {k(n) * k(n), k(n - 1) * k(n - 1), p0(n) * pb0(n)}));
            rep.add("core.lambda_recurrence", 1e-10, n,
                    normalized(lam(n) / k(n) - lam(n - 1) / k(n - 1) - s.r(n) * s.rbar(n - 1),
                               {lam(n) / k(n), lam(n - 1) / k(n - 1), s.r(n) * s.rbar(n - 1)}));
        }

        // Small- and large-argument expansion coefficients.
        if (n >= 1)
            rep.add("core.expansion.phi_interior", 1e-10, n,
                    rel_diff(s.phi(n).coeff(1), (k(n) * p0(n - 1) + p0(n) * lamb(n - 1)) / k(n - 1)));
        if (n >= 2)
            rep.add("core.expansion.phi_interior", 1e-10, n,
                    rel_diff(s.phi(n).coeff(2), k(n) / (k(n - 1) * k(n - 2)) * (k(n - 1) * p0(n - 2) + p0(n - 1) * lamb(n - 2)) +
                                                    p0(n) * mub(n - 1) / k(n - 1)));
        if (n >= 1)
            rep.add("core.expansion.phis_exterior", 1e-10, n,
                    rel_diff(s.phibar(n).coeff(1), (k(n) * pb0(n - 1) + pb0(n) * lam(n - 1)) / k(n - 1)));
        if (n >= 2)
            rep.add("core.expansion.phis_exterior", 1e-10, n,
                    rel_diff(s.phibar(n).coeff(2), k(n) / (k(n - 1) * k(n - 2)) * (k(n - 1) * pb0(n - 2) + pb0(n - 1) * lam(n - 2)) +
                                                       pb0(n) * mu(n - 1) / k(n - 1)));
        auto cm = [&](int m) { return k(n) * s.series_coeff(n, m, false); };
        auto dm = [&](int m) { return k(n) * s.series_coeff(n, m, true); };
        for (int m = 0; m < n; ++m) rep.add("core.expansion.xi_interior", 1e-10, n, std::abs(cm(m)));
        rep.add("core.expansion.xi_interior", 1e-10, n, rel_diff(cm(n), 1.0));
        rep.add("core.expansion.xi_interior", 1e-10, n, rel_diff(cm(n + 1), -lamb(n + 1) / k(n + 1)));
        rep.add("core.expansion.xi_interior", 1e-10, n,
                rel_diff(cm(n + 2), lamb(n + 1) * lamb(n + 2) / (k(n + 1) * k(n + 2)) - mub(n + 2) / k(n + 2)));
        for (int m = 1; m <= n; ++m) rep.add("core.expansion.xis_interior", 1e-10, n, std::abs(dm(m)));
        rep.add("core.expansion.xis_interior", 1e-10, n, rel_diff(-dm(n + 1), pb0(n + 1) / k(n + 1)));
        rep.add("core.expansion.xis_interior", 1e-10, n,
                rel_diff(-dm(n + 2), pb0(n + 2) / k(n + 2) - pb0(n + 1) * lamb(n + 2) / (k(n + 1) * k(n + 2))));
        rep.add("core.expansion.xi_exterior", 1e-10, n, rel_diff(-cm(-1), p0(n + 1) / k(n + 1)));
        rep.add("core.expansion.xi_exterior", 1e-10, n,
                rel_diff(-cm(-2), k(n) * k(n) / (k(n + 1) * k(n + 1)) * p0(n + 2) / k(n + 2) -
                                      p0(n + 1) / k(n + 1) * lam(n + 1) / k(n + 1)));
        rep.add("core.expansion.xis_exterior", 1e-10, n, rel_diff(dm(0), 1.0));
        rep.add("core.expansion.xis_exterior", 1e-10, n, rel_diff(dm(-1), -lam(n + 1) / k(n + 1)));
        rep.add("core.expansion.xis_exterior", 1e-10, n,
                rel_diff(dm(-2), lam(n + 2) * lam(n + 1) / (k(n + 2) * k(n + 1)) - mu(n + 2) / k(n + 2)));

        bool second_order = n >= 1 && std::abs(s.r(n)) > 1e-12;
        for (cplx z : pts) {
            rep.add("core.det_y", 1e-10, n, y_det_residual(y_matrix(s, c.weight, n, z)), z);
            rep.add("core.xi_star_forms", 1e-10, n, rel_diff(s.xis(n, z), s.xis_alternative(n, z)), z);

            cplx p = s.phi_at(n, z), p1 = s.phi_at(n + 1, z), ps = s.phis_at(n, z), ps1 = s.phis_at(n + 1, z);
            cplx x = s.xi(n, z), x1 = s.xi(n + 1, z), xs = s.xis(n, z), xs1 = s.xis(n + 1, z), zn = ipow(z, n);
            auto cr = casoratian_residuals(s, n, z);
            rep.add("core.casoratian.a", 1e-10, n, normalized(cr.c1, {p1 * x, x1 * p, 2.0 * p0(n + 1) / k(n) * zn}), z);
            rep.add("core.casoratian.b", 1e-10, n, normalized(cr.c2, {ps1 * xs, xs1 * ps, 2.0 * pb0(n + 1) / k(n) * zn * z}), z);
            rep.add("core.casoratian.c", 1e-10, n, normalized(cr.c3, {p * xs, x * ps, 2.0 * zn}), z);

            if (second_order) {
                cplx q = s.r(n + 1) / s.r(n);
                cplx m1 = p1 / k(n + 1), m0 = p / k(n), mm = s.phi_at(n - 1, z) / k(n - 1);
                rep.add("core.second_order", 1e-10, n,
                        normalized(second_order_residual(s, n, z), {m1, q * m0, z * m0, z * q * (1.0 - s.r(n) * s.rbar(n)) * mm}), z);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// cgu: rational modifications against the rebuilt weight, generator compatibility.

inline void cgu_suite(const SuiteConfig& c, const SampleSet& sp, Report& rep) {
    const int N = c.n_max;
    for (const auto& cs : cgu_cases()) {
        const auto& sh = cs.shift;
        auto base = std::make_shared<BopsSystem>(build_system(c.weight, N + sh.K() + sh.Ks(), c.fourier));
        auto T = transform_system(base, sh, N);
        auto B = build_system(apply_shift(c.weight, sh), N, c.fourier);
        const std::string id = "cgu.oracle." + cs.name;
        for (int n = 0; n <= N; ++n) {
            const auto& d = T.degrees[static_cast<std::size_t>(n)];
            double sg = std::abs(d.kappa - B.kappa(n)) <= std::abs(d.kappa + B.kappa(n)) ? 1.0 : -1.0;
            double ph = 0.0;
            for (int i = 0; i <= n; ++i)
                ph = std::max({ph, rel_diff(sg * d.phi.coeff(i), B.phi(n).coeff(i)), rel_diff(sg * d.phibar.coeff(i), B.phibar(n).coeff(i))});
            rep.add(id + ".kappa_sq", 1e-8, n, rel_diff(d.kappa_sq, B.kappa(n) * B.kappa(n)));
            rep.add(id + ".r", 1e-8, n, rel_diff(d.r, B.r(n)));
            rep.add(id + ".rbar", 1e-8, n, rel_diff(d.rbar, B.rbar(n)));
            rep.add(id + ".phi", 1e-8, n, ph);
        }
    }

    const int D = std::min(N, c.deep_n_max);
    auto S = std::make_shared<BopsSystem>(build_system(c.weight, D + 3, c.fourier));
    std::optional<SemiClassicalData> data;
    if (!c.weight.base_fourier && !c.weight.rational_mod) {
        auto d = semiclassical_data(c.weight);
        if (d.M() >= 1) data = d;
    }
    for (const auto& g : generator_cases()) {
        std::string tag = std::string(to_string(g.kind)) + "@" + fmt_c(g.a);
        std::optional<BopsSystem> rebuilt;
        if (data && (g.kind == GenKind::K1star || g.kind == GenKind::L1star)) {
            CguShift sh;
            (g.kind == GenKind::K1star ? sh.alpha_stars : sh.beta_stars).push_back(g.a);
            rebuilt = build_system(apply_shift(c.weight, sh), D + 1, c.fourier);
        }
        for (int n = 0; n <= D; ++n)
            for (cplx z : sp.ring) {
                rep.add("cgu.generator.recurrence." + tag, 1e-10, n, max_abs(recurrence_compat_residual(S, g.kind, g.a, n, z)), z);
                if (data)
                    rep.add("cgu.generator.spectral." + tag, 1e-8, n,
                            max_abs(spectral_compat_residual(S, c.weight, *data, g.kind, g.a, n, z, rebuilt ? &*rebuilt : nullptr)), z);
            }
    }
}

// ---------------------------------------------------------------------------
// semiclassical: residue structure, spectral system and deformations.

inline SemiClassicalData require_data(const WeightSpec& w, const char* suite) {
    if (w.base_fourier || w.rational_mod)
        throw InputError(std::string(suite) + " suite: requires singularity data (a factor-based weight)");
    auto d = semiclassical_data(w);
    if (d.M() < 1) throw InputError(std::string(suite) + " suite: weight has no finite singularities");
    return d;
}

inline void semiclassical_suite(const SuiteConfig& c, const SampleSet& sp, Report& rep) {
    const auto d = require_data(c.weight, "semiclassical");
    const int D = std::min(c.n_max, c.deep_n_max);
    const int M = d.M();
    const auto s = build_system(c.weight, D + 2, c.fourier);
    const auto vel = default_velocities(M);
    const double dl = c.fd_step;
    const auto wp = moved_weight(c.weight, vel, dl), wm = moved_weight(c.weight, vel, -dl);
    const auto sp_ = build_system(wp, D + 1, c.fourier), sm = build_system(wm, D + 1, c.fourier);
    const auto dp = semiclassical_data(wp), dm = semiclassical_data(wm);
    const auto pts = sp.all();
    const auto sub = sp.subset();

    for (int n = 0; n <= D; ++n) {
        auto rs = residue_set(s, d, n);
        auto rs1 = residue_set(s, d, n + 1);
        rep.add("semi.residue_sum", 1e-10, n, rs.inf_residual);
        auto si = sum_identity_residuals(s, d, n);
        const char* names[] = {"semi.sum_identity.a", "semi.sum_identity.b", "semi.sum_identity.c", "semi.sum_identity.d"};
        for (std::size_t i = 0; i < 4; ++i) rep.add(names[i], 1e-9, n, std::abs(si[i]));
        auto fm = formal_monodromy(rs, s, d);
        for (int j = 0; j <= M; ++j) rep.add("semi.monodromy", 1e-9, n, fm.blocks[static_cast<std::size_t>(j)].residual, std::nullopt, j);
        rep.add("semi.monodromy_infinity", 1e-9, n, fm.infinity.residual);
        rep.add("semi.exponent_sum", 1e-9, n, std::abs(fm.classical_residual));
        for (int j = 1; j <= M; ++j) {
            auto b = bilinear_products(s, d, n, j);
            rep.add("semi.bilinear", 1e-9, n, std::max({b.res_d, b.res_e, b.res_g, b.res_h, b.res_i, b.res_j}), std::nullopt, j);
        }

        for (cplx z : pts) {
            Mat2 A = spectral_matrix(rs, d, z);
            cplx ld = log_derivative(c.weight, z);
            rep.add("semi.trace", 1e-9, n, normalized(A.trace() - static_cast<double>(n) / z + ld, {static_cast<double>(n) / z, ld}), z);
            constexpr double h = 1e-6;
            Mat2 dY = (y_matrix(s, c.weight, n, z + h).entries - y_matrix(s, c.weight, n, z - h).entries) / (2.0 * h);
            Mat2 Y = y_matrix(s, c.weight, n, z).entries;
            rep.add("semi.spectral_ode", 1e-7, n, rel_diff(dY, Mat2(A * Y)), z);
            Mat2 K = k_matrix(s, n, z);
            Mat2 rhs = spectral_matrix(rs1, d, z) * K - K * A;
            rep.add("semi.compatibility", 1e-8, n, rel_diff(k_matrix_derivative(s, n), rhs), z);
        }

        // Deformations: central differences on the systems with moved singularities.
        for (cplx z : sub) {
            Mat2 dYt = (y_matrix(sp_, wp, n, z).entries - y_matrix(sm, wm, n, z).entries) / (2.0 * dl);
            Mat2 BY = deformation_matrix(rs, s, d, vel, z) * y_matrix(s, c.weight, n, z).entries;
            rep.add("semi.deformation.y", 1e-5, n, rel_diff(dYt, BY), z);
        }
        auto rhs = schlesinger_rhs(rs, s, d, vel);
        auto rp = residue_set(sp_, dp, n), rm = residue_set(sm, dm, n);
        for (int j = 1; j <= M; ++j)
            rep.add("semi.deformation.schlesinger", 1e-5, n,
                    rel_diff(Mat2((rp.A[static_cast<std::size_t>(j)] - rm.A[static_cast<std::size_t>(j)]) / (2.0 * dl)),
                             rhs[static_cast<std::size_t>(j)]),
                    std::nullopt, j);
        rep.add("semi.deformation.schlesinger_infinity", 1e-5, n,
                rel_diff(Mat2((rp.A_inf - rm.A_inf) / (2.0 * dl)), rhs.back()));
        auto dd = deformation_derivatives(s, d, n, vel);
        rep.add("semi.deformation.kappa", 1e-5, n,
                rel_diff(dd.kappa_dot_over_kappa, (sp_.kappa(n) - sm.kappa(n)) / (2.0 * dl * s.kappa(n))));
        rep.add("semi.deformation.r", 1e-5, n, rel_diff(dd.r_dot, (sp_.r(n) - sm.r(n)) / (2.0 * dl)));
        rep.add("semi.deformation.rbar", 1e-5, n, rel_diff(dd.rbar_dot, (sp_.rbar(n) - sm.rbar(n)) / (2.0 * dl)));
        for (int j = 1; j <= M; ++j) {
            cplx zp = d.z(j) + vel[static_cast<std::size_t>(j - 1)] * dl, zm = d.z(j) - vel[static_cast<std::size_t>(j - 1)] * dl;
            cplx Pp = sp_.phis_at(n, zp) / sp_.phi_at(n, zp), Pm = sm.phis_at(n, zm) / sm.phi_at(n, zm);
            cplx Qp = sp_.xi(n, zp) / sp_.xis(n, zp), Qm = sm.xi(n, zm) / sm.xis(n, zm);
            rep.add("semi.deformation.P", 1e-5, n, rel_diff((Pp - Pm) / (2.0 * dl), dd.P_dot[static_cast<std::size_t>(j)]),
                    std::nullopt, j);
            rep.add("semi.deformation.Q", 1e-5, n, rel_diff((Qp - Qm) / (2.0 * dl), dd.Q_dot[static_cast<std::size_t>(j)]),
                    std::nullopt, j);
        }
    }
}

// ---------------------------------------------------------------------------
// schlesinger: unit exponent shifts against the rebuilt weight.

inline void schlesinger_suite(const SuiteConfig& c, const SampleSet& sp, Report& rep) {
    const auto d = require_data(c.weight, "schlesinger");
    const int D = std::min(c.n_max, c.deep_n_max);
    const int M = d.M();
    auto S = std::make_shared<BopsSystem>(build_system(c.weight, D + 4, c.fourier));
    const auto vel = default_velocities(M);
    const auto sub = sp.subset();
    auto dir_name = [](int dir) { return dir > 0 ? std::string("up") : std::string("down"); };

    for (int j = 1; j <= M; ++j)
        for (int dir : {1, -1}) {
            std::vector<int> shifts(static_cast<std::size_t>(M) + 1, 0);
            shifts[static_cast<std::size_t>(j)] = dir;
            const auto B = build_system(shift_exponents(c.weight, shifts), D + 1, c.fourier);
            const auto ds = shifted_data(d, j, dir);
            const auto view = schlesinger_view(S, d, j, dir);
            const std::string tag = "." + dir_name(dir);
            for (int n = 0; n <= D; ++n) {
                auto sc = shifted_coeffs(*S, d, j, dir, n);
                rep.add("schlesinger.coeffs" + tag, 1e-8, n,
                        std::max({rel_diff(sc.kappa_sq, B.kappa(n) * B.kappa(n)), rel_diff(sc.r, B.r(n)), rel_diff(sc.rbar, B.rbar(n))}),
                        std::nullopt, j);
                if (sc.has_theta_form) rep.add("schlesinger.theta_form" + tag, 1e-9, n, sc.form_residual, std::nullopt, j);

                double sg = std::abs(sc.kappa - B.kappa(n)) <= std::abs(sc.kappa + B.kappa(n)) ? 1.0 : -1.0;
                double ev = 0.0;
                for (const auto& e : shifted_evaluations(*S, d, j, dir, n)) {
                    auto p = point_eval(B, n, e.z);
                    ev = std::max({ev, rel_diff(sg * e.phi, p.phi), rel_diff(sg * e.phis, p.phis), rel_diff(sg * e.xi, p.xi),
                                   rel_diff(sg * e.xis, p.xis)});
                }
                rep.add("schlesinger.evaluations" + tag, 1e-8, n, ev, std::nullopt, j);

                auto rs = residue_set(*S, d, n);
                auto tr = transformed_residues(rs, *S, d, j, dir, n);
                auto rb = residue_set(B, ds, n);
                double ra = 0.0;
                for (int k = 0; k <= M; ++k) ra = std::max(ra, rel_diff(tr.set.A[static_cast<std::size_t>(k)], rb.A[static_cast<std::size_t>(k)]));
                rep.add("schlesinger.residues.rebuild" + tag, 1e-8, n, ra, std::nullopt, j);
                rep.add("schlesinger.residues.routes" + tag, 1e-9, n, tr.route_residual, std::nullopt, j);
                rep.add("schlesinger.residues.infinity" + tag, 1e-9, n, tr.set.inf_residual, std::nullopt, j);

                auto back = shifted_coeffs(*view, ds, j, -dir, n);
                rep.add("schlesinger.inverse_shift" + tag, 1e-9, n,
                        std::max({rel_diff(back.kappa_sq, S->kappa(n) * S->kappa(n)), rel_diff(back.r, S->r(n)),
                                  rel_diff(back.rbar, S->rbar(n))}),
                        std::nullopt, j);

                for (cplx z : sub) {
                    auto cr = compatibility_residuals(S, c.weight, d, j, dir, n, z, vel, c.fd_step);
                    rep.add("schlesinger.compat.recurrence" + tag, 1e-10, n, cr.recurrence_rel, z, j);
                    rep.add("schlesinger.compat.spectral" + tag, 1e-8, n, cr.spectral_rel, z, j);
                    rep.add("schlesinger.compat.deformation" + tag, 1e-5, n, cr.deformation_rel, z, j);
                }
            }
        }

    for (int j = 1; j <= M; ++j)
        for (int k = j + 1; k <= M; ++k)
            for (int ej : {1, -1})
                for (int ek : {1, -1}) {
                    std::string id = "schlesinger.commutativity." + dir_name(ej) + "_" + dir_name(ek);
                    for (int n = 0; n <= D; ++n)
                        for (cplx z : sub) {
                            auto cr = commutativity_residual(S, d, j, k, ej, ek, n, z);
                            rep.add(id, 1e-9, n, cr.relative, z, j, k);
                            rep.add(id + ".kappa", 1e-9, n, cr.kappa_residual, std::nullopt, j, k);
                        }
                }
}

// ---------------------------------------------------------------------------
// hirota: bilinear equations on the tau lattice and determinant identities.

inline void hirota_suite(const SuiteConfig& c, const SampleSet& sp, Report& rep) {
    require_data(c.weight, "hirota");
    const int D = std::min(c.n_max, c.deep_n_max);
    TauLattice L(c.weight, D + 2, c.fourier);
    const int M = L.data().M();
    const auto s = build_system(c.weight, D + 2, c.fourier);
    for (int n = 0; n <= D; ++n)
        for (int j = 1; j <= M; ++j) {
            std::vector<std::optional<int>> partners{std::nullopt};
            for (int k = 1; k <= M; ++k)
                if (k != j) partners.push_back(k);
            for (const auto& k : partners) {
                for (const auto& h : hirota_residuals(L, n, j, k)) {
                    if (k && (h.equation == "HM-a" || h.equation == "HM-b")) continue;
                    rep.add_hirota(h);
                    rep.add("hirota." + h.equation, 1e-8, n, h.residual, std::nullopt, j, h.k);
                }
                for (const auto& r : modified_determinant_identities(L, s, n, j, k)) {
                    if (k && (r.id == "iform.casoratian" || r.id == "iform.r" || r.id == "iform.rbar")) continue;
                    rep.add("hirota." + r.id, 1e-9, n, r.residual, std::nullopt, j, r.k);
                }
            }
        }
    for (int n = 0; n <= D; ++n)
        for (cplx z : sp.subset()) {
            auto r = intrep_residuals(c.weight, s, n, z, c.fourier);
            rep.add("hirota.intrep.a", 1e-9, n, r.a, z);
            rep.add("hirota.intrep.b", 1e-9, n, r.b, z);
            if (r.c) rep.add("hirota.intrep.c", 1e-9, n, *r.c, z);
            if (r.d) rep.add("hirota.intrep.d", 1e-9, n, *r.d, z);
        }
}

// ---------------------------------------------------------------------------
// Suite dispatch and serialization.

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"core", "cgu", "semiclassical", "schlesinger", "hirota", "all"};
    return names;
}

inline Report run_suite(const std::string& name, const SuiteConfig& c) {
    if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
        throw InputError("unknown suite '" + name + "'");
    if (c.n_max < 1) throw InputError("n_max must be at least 1");
    if (!(c.fd_step > 1e-8 && c.fd_step < 1e-3)) throw InputError("fd_step must lie in (1e-8, 1e-3)");
    validate_weight(c.weight);
    bool all = name == "all";
    // Requirements are checked before any work so a missing prerequisite fails fast.
    if (all || name == "semiclassical" || name == "schlesinger" || name == "hirota") require_data(c.weight, name.c_str());
    Report rep(c);
    auto sp = make_samples(c.seed, c.weight, sample_exclusions(c.weight));
    if (all || name == "core") core_suite(c, sp, rep);
    if (all || name == "cgu") cgu_suite(c, sp, rep);
    if (all || name == "semiclassical") semiclassical_suite(c, sp, rep);
    if (all || name == "schlesinger") schlesinger_suite(c, sp, rep);
    if (all || name == "hirota") hirota_suite(c, sp, rep);
    return rep;
}

inline io::json number_or_null(double x) { return std::isfinite(x) ? io::json(x) : io::json(nullptr); }

inline io::json report_json(const Report& rep, const std::string& suite, const SuiteConfig& c) {
    using io::json;
    json checks = json::array();
    for (const auto& r : rep.records()) {
        json e{{"check", r.id}, {"n", r.n}};
        e["j"] = r.j ? json(*r.j) : json(nullptr);
        e["k"] = r.k ? json(*r.k) : json(nullptr);
        e["z"] = r.z ? io::to_json(*r.z) : json(nullptr);
        e["samples"] = r.samples;
        e["residual"] = number_or_null(r.residual);
        e["tol"] = r.tol;
        e["pass"] = r.pass;
        checks.push_back(e);
    }
    json hm = json::array();
    for (const auto& h : rep.hirota()) {
        json e{{"equation", h.equation}, {"n", h.n}, {"j", h.j}};
        e["k"] = h.k ? json(*h.k) : json(nullptr);
        e["residual"] = number_or_null(h.residual);
        e["normalizer"] = h.normalizer;
        hm.push_back(e);
    }
    auto ff = rep.first_failure();
    std::size_t failed = 0;
    for (const auto& r : rep.records()) failed += r.pass ? 0 : 1;
    json out;
    out["suite"] = suite;
    out["seed"] = c.seed;
    out["n_max"] = c.n_max;
    out["fd_step"] = c.fd_step;
    out["weight"] = io::weight_to_json(c.weight);
    out["status"] = ff ? "fail" : "pass";
    out["summary"] = json{{"checks", checks.size()}, {"failed", failed}, {"first_failure", ff ? json(describe(*ff)) : json(nullptr)}};
    out["checks"] = checks;
    if (!hm.empty()) out["hirota"] = hm;
    return out;
}

inline std::string report_csv(const Report& rep) {
    std::string out = "check,n,j,k,z_re,z_im,samples,residual,tol,pass\n";
    auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : rep.records()) {
        out += io::csv_escape(r.id) + "," + std::to_string(r.n) + "," + opt(r.j) + "," + opt(r.k) + ",";
        out += r.z ? io::csv_number(r.z->real()) + "," + io::csv_number(r.z->imag()) : std::string(",");
        out += "," + std::to_string(r.samples) + "," + io::csv_number(r.residual) + "," + io::csv_number(r.tol) + "," +
               (r.pass ? "true" : "false") + "\n";
    }
    return out;
}

}  // namespace bops
