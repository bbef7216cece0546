// SPDX-License-Identifier: MIT
#pragma once

#include "bops/schlesinger.hpp"
#include "bops/semiclassical.hpp"
#include "bops/system.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bops {

// Shifts of the monodromy exponents theta_0, theta_1..theta_M, theta_inf.
struct ThetaShift {
    int d0 = 0;
    std::vector<int> dj;  // dj[j-1] shifts theta_j
    int dinf = 0;
};

struct LatticePoint {
    int n = 0;
    std::vector<int> shifts;  // rho shifts, j = 0..M
};

// theta_0 = n - rho_0, theta_j = -rho_j, theta_inf = n + sum rho.
inline LatticePoint theta_to_lattice(int n, const ThetaShift& t, int M) {
    std::vector<int> dj = t.dj;
    if (static_cast<int>(dj.size()) > M) throw InputError("theta_to_lattice: too many theta shifts");
    dj.resize(static_cast<std::size_t>(M), 0);
    int total = t.d0 + t.dinf;
    for (int v : dj) total += v;
    if (total % 2 != 0) throw InputError("theta_to_lattice: theta shifts must have an even sum");
    LatticePoint p;
    int dn = total / 2;
    p.n = n + dn;
    p.shifts.push_back(dn - t.d0);
    for (int v : dj) p.shifts.push_back(-v);
    return p;
}

class TauLattice {
public:
    TauLattice(WeightSpec base, int n_max, FourierOptions fo = {}, int depth = 3)
        : base_(std::move(base)), data_(semiclassical_data(base_)), n_max_(n_max), depth_(depth), fo_(fo) {
        require_semiclassical(data_, "TauLattice");
        if (n_max_ < 0) throw InputError("TauLattice: n_max must be nonnegative");
        fo_.min_range = std::max(fo_.min_range, n_max_ + 2);
    }

    const WeightSpec& base() const { return base_; }
    const SemiClassicalData& data() const { return data_; }
    int n_max() const { return n_max_; }

    // I_n of the weight with rho_j -> rho_j + shifts[j]; I_0 = 1 and I_n = 0 for n < 0.
    cplx value(int n, const std::vector<int>& shifts) {
        if (static_cast<int>(shifts.size()) != data_.M() + 1)
            throw InputError("tau_value: expected one shift per singularity including the origin");
        for (int s : shifts)
            if (std::abs(s) > depth_) throw InputError("tau_value: shift exceeds the configured depth");
        if (n > n_max_) throw InputError("tau_value: n exceeds the lattice n_max");
        if (n < 0) return 0.0;
        if (n == 0) return 1.0;
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(n, shifts);
        if (auto it = values_.find(key); it != values_.end()) return it->second;
        auto t = tables_.find(shifts);
        if (t == tables_.end()) {
            WeightSpec w = shift_exponents(base_, shifts);
            for (const auto& f : w.factors)
                if (f.kind != FactorKind::monomial && on_circle(f.zero))
                    throw DomainError("tau_value: shifted weight has a singularity on the unit circle");
            t = tables_.emplace(shifts, fourier_coefficients(w, fo_)).first;
        }
        cplx v = toeplitz_det(t->second, n);
        values_.emplace(key, v);
        return v;
    }

    cplx value_theta(int n, const ThetaShift& t) {
        auto p = theta_to_lattice(n, t, data_.M());
        return value(p.n, p.shifts);
    }

    // Monodromy-exponent labels of a lattice point, for display.
    std::vector<cplx> theta_labels(int n, const std::vector<int>& shifts) const {
        double nd = static_cast<double>(n);
        std::vector<cplx> th;
        cplx sum = 0.0;
        for (int j = 0; j <= data_.M(); ++j) {
            cplx rho = data_.rho(j) + static_cast<double>(shifts[static_cast<std::size_t>(j)]);
            sum += rho;
            th.push_back(j == 0 ? nd - rho : -rho);
        }
        th.push_back(nd + sum);
        return th;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return values_.size();
    }

private:
    WeightSpec base_;
    SemiClassicalData data_;
    int n_max_;
    int depth_;
    FourierOptions fo_;
    mutable std::mutex mu_;
    std::map<std::vector<int>, FourierTable> tables_;
    std::map<std::pair<int, std::vector<int>>, cplx> values_;
};

inline cplx tau_value(TauLattice& L, int n, const std::vector<int>& shifts) { return L.value(n, shifts); }

// ---------------------------------------------------------------------------
// Bilinear residuals.

struct HirotaRecord {
    std::string equation;
    int n = 0, j = 0;
    std::optional<int> k;
    double residual = 0.0, normalizer = 0.0;
    bool indeterminate = false;
};

namespace detail {

inline void bilinear_residual(HirotaRecord& r, cplx lhs, std::initializer_list<cplx> terms) {
    cplx rhs = 0.0;
    double norm = std::abs(lhs);
    for (auto t : terms) {
        rhs += t;
        norm = std::max(norm, std::abs(t));
    }
    if (norm < 1e-13) {
        r.indeterminate = true;
        r.normalizer = 1.0;
    } else {
        r.normalizer = norm;
    }
    r.residual = std::abs(lhs - rhs) / r.normalizer;
}

inline void check_pair(const TauLattice& L, int j, std::optional<int> k) {
    int M = L.data().M();
    if (j < 1 || j > M) throw InputError("hirota_residuals: j must index a finite singularity");
    if (k && (*k < 1 || *k > M || *k == j)) throw InputError("hirota_residuals: k must be a finite singularity distinct from j");
}

}  // namespace detail

inline std::vector<HirotaRecord> hirota_residuals(TauLattice& L, int n, int j, std::optional<int> k = std::nullopt) {
    detail::check_pair(L, j, k);
    int M = L.data().M();
    auto tau = [&](int d0, std::vector<std::pair<int, int>> dj, int dinf) {
        ThetaShift t;
        t.d0 = d0;
        t.dinf = dinf;
        t.dj.assign(static_cast<std::size_t>(M), 0);
        for (auto [idx, v] : dj) t.dj[static_cast<std::size_t>(idx - 1)] += v;
        return L.value_theta(n, t);
    };
    cplx zj = L.data().z(j);
    std::vector<HirotaRecord> out;
    auto add = [&](const char* name, cplx lhs, std::initializer_list<cplx> terms) {
        HirotaRecord r;
        r.equation = name;
        r.n = n;
        r.j = j;
        r.k = k;
        detail::bilinear_residual(r, lhs, terms);
        out.push_back(r);
    };
    cplx t0 = tau(0, {}, 0);
    add("HM-a", t0 * tau(1, {}, 1), {tau(0, {{j, 1}}, 1) * tau(1, {{j, -1}}, 0), -zj * tau(0, {{j, -1}}, 1) * tau(1, {{j, 1}}, 0)});
    add("HM-b", t0 * tau(-1, {}, 1), {tau(0, {{j, -1}}, 1) * tau(-1, {{j, 1}}, 0), zj * tau(0, {{j, 1}}, 1) * tau(-1, {{j, -1}}, 0)});
    if (!k) return out;
    int kk = *k;
    cplx zk = L.data().z(kk);
    add("HM-d", (zj - zk) * tau(1, {}, 1) * tau(0, {{j, -1}, {kk, -1}}, 2),
        {tau(1, {{kk, -1}}, 2) * tau(0, {{j, -1}}, 1), -tau(1, {{j, -1}}, 2) * tau(0, {{kk, -1}}, 1)});
    add("HM-e", tau(1, {}, 1) * tau(0, {{j, -1}, {kk, 1}}, 0),
        {-zk * tau(1, {{kk, 1}}, 0) * tau(0, {{j, -1}}, 1), tau(0, {{kk, 1}}, 1) * tau(1, {{j, -1}}, 0)});
    add("HM-f", (zj - zk) * t0 * tau(1, {{j, -1}, {kk, -1}}, 1),
        {zj * tau(0, {{j, -1}}, 1) * tau(1, {{kk, -1}}, 0), -zk * tau(1, {{j, -1}}, 0) * tau(0, {{kk, -1}}, 1)});
    add("HM-g", t0 * tau(1, {{j, -1}, {kk, 1}}, -1),
        {zj * tau(0, {{j, -1}}, -1) * tau(1, {{kk, 1}}, 0), tau(1, {{j, -1}}, 0) * tau(0, {{kk, 1}}, -1)});
    return out;
}

// Intermediate identities between determinants of rationally modified weights:
// I^{j+} multiplies w by (z - z_j), I^{*j+} by (1 - z_j/z), I^{j-} divides by
// (z - z_j) and I^{*j-} divides by (1 - z_j/z).
struct IdentityRecord {
    std::string id;
    int n = 0, j = 0;
    std::optional<int> k;
    double residual = 0.0;
};

inline std::vector<IdentityRecord> modified_determinant_identities(TauLattice& L, const SystemView& s, int n, int j,
                                                                   std::optional<int> k = std::nullopt) {
    detail::check_pair(L, j, k);
    int M = L.data().M();
    auto I = [&](int m, std::vector<std::pair<int, int>> mods) {
        std::vector<int> sh(static_cast<std::size_t>(M) + 1, 0);
        for (auto [idx, kind] : mods) {
            // kind: +1 plain up, -1 plain down, +2 starred up, -2 starred down
            sh[static_cast<std::size_t>(idx)] += kind > 0 ? 1 : -1;
            if (kind == 2) sh[0] -= 1;
            if (kind == -2) sh[0] += 1;
        }
        return L.value(m, sh);
    };
    cplx zj = L.data().z(j);
    double sg = n % 2 == 0 ? 1.0 : -1.0;
    std::vector<IdentityRecord> out;
    auto add = [&](const char* id, cplx lhs, cplx rhs) { out.push_back({id, n, j, k, rel_diff(lhs, rhs)}); };
    cplx In = I(n, {});
    add("iform.casoratian", In * I(n + 1, {}), I(n, {{j, 2}}) * I(n + 1, {{j, -2}}) - zj * I(n, {{j, 1}}) * I(n + 1, {{j, -1}}));
    add("iform.r", sg * s.r(n) * In * In, I(n, {{j, 1}}) * I(n, {{j, -2}}) + zj * I(n - 1, {{j, 1}}) * I(n + 1, {{j, -2}}));
    add("iform.rbar", sg * s.rbar(n) * In * In, I(n, {{j, 2}}) * I(n, {{j, -1}}) + zj * I(n - 1, {{j, 2}}) * I(n + 1, {{j, -1}}));
    if (!k) return out;
    int kk = *k;
    cplx zk = L.data().z(kk);
    add("iform.up_up", I(n, {{j, 1}}) * I(n + 1, {{kk, 1}}) - I(n, {{kk, 1}}) * I(n + 1, {{j, 1}}),
        (zj - zk) * I(n + 1, {}) * I(n, {{j, 1}, {kk, 1}}));
    add("iform.up_down", I(n, {{j, 2}}) * I(n + 1, {{kk, -2}}) - zk * I(n, {{j, 1}}) * I(n + 1, {{kk, -1}}),
        I(n + 1, {}) * I(n, {{j, 1}, {kk, -1}}));
    add("iform.star_up_up", zj * I(n, {{j, 1}}) * I(n, {{kk, 2}}) - zk * I(n, {{j, 2}}) * I(n, {{kk, 1}}),
        (zj - zk) * In * I(n, {{j, 2}, {kk, 1}}));
    add("iform.star_up_down", zj * I(n - 1, {{j, 2}}) * I(n + 1, {{kk, -1}}) + I(n, {{j, 2}}) * I(n, {{kk, -1}}),
        In * I(n, {{j, 2}, {kk, -1}}));
    return out;
}

// ---------------------------------------------------------------------------
// Integral representations: determinants of the weight times a rational factor
// in a free point z against the base system.

struct IntRepResiduals {
    double a = 0.0, b = 0.0;
    std::optional<double> c, d;  // n > 0 only
};

inline IntRepResiduals intrep_residuals(const WeightSpec& w, const BopsSystem& s, int n, cplx z, FourierOptions fo = {}) {
    if (on_circle(z)) throw DomainError("intrep_residuals: |z| = 1");
    if (z == cplx{}) throw InputError("intrep_residuals: z must be nonzero");
    fo.min_range = std::max(fo.min_range, n + 2);
    auto det_of = [&](const WeightSpec& wm) { return toeplitz_det(fourier_coefficients(wm, fo), n); };
    cplx In = s.I(n), k = s.kappa(n);
    double sg = n % 2 == 0 ? 1.0 : -1.0;
    IntRepResiduals out;
    out.a = rel_diff(det_of(modify_weight(w, {z}, {}, {}, {})), sg * In * s.phi_at(n, z) / k);
    out.b = rel_diff(det_of(modify_weight(w, {}, {z}, {}, {})), In * s.phis_at(n, z) / k);
    if (n > 0) {
        auto pv = s.prev(n, z);
        out.c = rel_diff(det_of(modify_weight(w, {}, {}, {}, {z})), In * pv.kxi / (2.0 * ipow(z, n - 1)));
        out.d = rel_diff(det_of(modify_weight(w, {}, {}, {z}, {})), sg * In * pv.kxis / (2.0 * ipow(z, n)));
    }
    return out;
}

}  // namespace bops
