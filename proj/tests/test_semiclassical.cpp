// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bops/semiclassical.hpp"

using namespace bops;

namespace {

WeightSpec test_weight() {
    WeightSpec w;
    w.factors = {{FactorKind::conjugated, 0.5, 0.3}, {FactorKind::outer, 2.0, 0.4}};
    return w;
}

const std::vector<cplx> zs = {cplx(0.3, 0.25), cplx(-0.4, 0.5), cplx(1.7, 0.6), cplx(-0.2, -2.2), cplx(0.6, -0.3), cplx(-1.5, 0.9),
                              cplx(0.05, 0.45), cplx(2.6, -1.0), cplx(-0.7, -0.2), cplx(0.1, 1.8), cplx(-2.4, 0.1), cplx(0.45, -0.6)};
const std::vector<cplx> velocities = {1.0, cplx(0.0, 0.5)};
constexpr double delta = 1e-5;

// System of the weight with singularities moved by t * velocities, with the
// kappa sign aligned to the unmoved system.
struct Moved {
    WeightSpec w;
    BopsSystem s;
    SemiClassicalData d;
    double sign = 1.0;
};

Moved moved(const WeightSpec& w, const BopsSystem& base, double t, int n_max) {
    Moved m{moved_weight(w, velocities, t), {}, {}, 1.0};
    m.s = build_system(m.w, n_max);
    m.d = semiclassical_data(m.w);
    if (std::real(m.s.kappa(0) / base.kappa(0)) < 0.0) m.sign = -1.0;
    return m;
}

double rel(const Mat2& a, const Mat2& b) { return max_abs(a - b) / std::max({1.0, max_abs(a), max_abs(b)}); }

}  // namespace

TEST_CASE("singularity data of the test weight") {
    auto d = semiclassical_data(test_weight());
    REQUIRE(d.M() == 2);
    CHECK(std::abs(d.rho(0) + 0.3) < 1e-15);
    CHECK(std::abs(d.z(1) - 0.5) == 0.0);
    CHECK(std::abs(d.rho(2) - 0.4) < 1e-15);
    auto w = test_weight();
    for (cplx z : zs) CHECK(rel_diff(2.0 * d.V(z) / d.W(z), log_derivative(w, z)) < 1e-12);
    CHECK(d.warnings.empty());
    CHECK_THROWS_AS(require_semiclassical(semiclassical_data(WeightSpec{}), "test"), InputError);
}

TEST_CASE("residues, residue at infinity and sum identities") {
    auto w = test_weight();
    auto d = semiclassical_data(w);
    auto s = build_system(w, 8);
    for (int n = 0; n <= 6; ++n) {
        auto rs = residue_set(s, d, n);
        CHECK(std::abs(rs.A[0](0, 0) - (static_cast<double>(n) - d.rho(0))) < 1e-14);
        CHECK(std::abs(rs.A[0](1, 0)) + std::abs(rs.A[0](1, 1)) == 0.0);
        CHECK(max_abs(rs.A_inf - rs.A_inf_sum) < 1e-10);
        for (auto r : sum_identity_residuals(s, d, n)) CHECK(std::abs(r) < 1e-9);
        for (int j = 1; j <= d.M(); ++j) {
            const Mat2& A = rs.A[static_cast<std::size_t>(j)];
            CHECK(std::abs(A.determinant()) < 1e-9);
            CHECK(std::abs(A.trace() + d.rho(j)) < 1e-9);
            auto e = point_eval(s, n, d.z(j));
            Eigen::Vector2cd u(e.phi, e.phis), v(e.xi, -e.xis);
            CHECK((A * u).norm() < 1e-9 * std::max(1.0, u.norm()));
            CHECK((A * v + d.rho(j) * v).norm() < 1e-9 * std::max(1.0, v.norm()));
        }
    }
}

TEST_CASE("spectral matrix: trace, ODE and compatibility") {
    auto w = test_weight();
    auto d = semiclassical_data(w);
    auto s = build_system(w, 8);
    const double h = 1e-6;
    for (int n = 0; n <= 6; ++n) {
        auto rs = residue_set(s, d, n);
        auto rs1 = residue_set(s, d, n + 1);
        for (cplx z : zs) {
            Mat2 A = spectral_matrix(rs, d, z);
            CHECK(std::abs(A.trace() - static_cast<double>(n) / z + log_derivative(w, z)) < 1e-9);
            Mat2 Y = y_matrix(s, w, n, z).entries;
            Mat2 dY = (y_matrix(s, w, n, z + h).entries - y_matrix(s, w, n, z - h).entries) / (2.0 * h);
            CHECK(rel(dY, A * Y) < 1e-7);
            Mat2 K = k_matrix(s, n, z);
            CHECK(rel(k_matrix_derivative(s, n), spectral_matrix(rs1, d, z) * K - K * A) < 1e-8);
        }
    }
    auto rs = residue_set(s, d, 2);
    CHECK_THROWS_AS(spectral_matrix(rs, d, 2.0), DomainError);
}

TEST_CASE("formal monodromy") {
    auto w = test_weight();
    auto d = semiclassical_data(w);
    auto s = build_system(w, 8);
    for (int n = 0; n <= 6; ++n) {
        auto fm = formal_monodromy(residue_set(s, d, n), s, d);
        CHECK(std::abs(fm.classical_residual) < 1e-14);
        for (const auto& b : fm.blocks) CHECK(b.residual < 1e-9);
        CHECK(fm.infinity.residual < 1e-9);
    }
}

TEST_CASE("bilinear products") {
    auto w = test_weight();
    auto d = semiclassical_data(w);
    auto s = build_system(w, 8);
    for (int n = 0; n <= 6; ++n)
        for (int j = 1; j <= 2; ++j) {
            auto b = bilinear_products(s, d, n, j);
            for (double r : {b.res_d, b.res_e, b.res_g, b.res_h, b.res_i, b.res_j}) CHECK(r < 1e-9);
            // Casoratian at the singular point
            auto e = point_eval(s, n, d.z(j));
            auto e1 = point_eval(s, n + 1, d.z(j));
            cplx lhs = e1.phi * e.xi - e.phi * e1.xi;
            CHECK(rel_diff(lhs, 2.0 * s.phi(n + 1).coeff(0) / s.kappa(n) * ipow(d.z(j), n)) < 1e-9);
        }
    auto one = build_system(WeightSpec{}, 4);
    CHECK_THROWS_AS(bilinear_products(one, semiclassical_data(WeightSpec{}), 1, 1), InputError);
}

TEST_CASE("deformation derivatives against finite differences") {
    auto w = test_weight();
    auto d = semiclassical_data(w);
    const int N = 7;
    auto s = build_system(w, N);
    auto p = moved(w, s, delta, N), m = moved(w, s, -delta, N);
    for (int n = 0; n <= 6; ++n) {
        auto dd = deformation_derivatives(s, d, n, velocities);
        cplx kfd = (p.sign * p.s.kappa(n) - m.sign * m.s.kappa(n)) / (2.0 * delta * s.kappa(n));
        CHECK(std::abs(dd.kappa_dot_over_kappa - kfd) < 1e-6);
        CHECK(std::abs(dd.r_dot - (p.s.r(n) - m.s.r(n)) / (2.0 * delta)) < 1e-6);
        CHECK(std::abs(dd.rbar_dot - (p.s.rbar(n) - m.s.rbar(n)) / (2.0 * delta)) < 1e-6);
        for (int j = 1; j <= 2; ++j) {
            auto ratio_P = [&](const Moved& x) { return x.s.phis_at(n, x.d.z(j)) / x.s.phi_at(n, x.d.z(j)); };
            auto ratio_Q = [&](const Moved& x) { return x.s.xi(n, x.d.z(j)) / x.s.xis(n, x.d.z(j)); };
            CHECK(rel_diff(dd.P_dot[static_cast<std::size_t>(j)], (ratio_P(p) - ratio_P(m)) / (2.0 * delta)) < 1e-6);
            CHECK(rel_diff(dd.Q_dot[static_cast<std::size_t>(j)], (ratio_Q(p) - ratio_Q(m)) / (2.0 * delta)) < 1e-6);
        }
    }
}

TEST_CASE("r_dot vanishes for a weight with vanishing r") {
    WeightSpec w;
    w.factors = {{FactorKind::outer, 2.0, 0.4}};
    auto d = semiclassical_data(w);
    auto s = build_system(w, 6);
    std::vector<cplx> vel = {1.0};
    auto sp = build_system(moved_weight(w, vel, delta), 6), sm = build_system(moved_weight(w, vel, -delta), 6);
    for (int n = 1; n <= 5; ++n) {
        CHECK(std::abs(deformation_derivatives(s, d, n, vel).r_dot) < 1e-8);
        CHECK(std::abs((sp.r(n) - sm.r(n)) / (2.0 * delta)) < 1e-8);
    }
}

TEST_CASE("deformation matrix and Schlesinger equations") {
    auto w = test_weight();
    auto d = semiclassical_data(w);
    const int N = 7;
    auto s = build_system(w, N);
    auto p = moved(w, s, delta, N), m = moved(w, s, -delta, N);
    for (int n = 0; n <= 6; ++n) {
        auto rs = residue_set(s, d, n);
        CHECK(max_abs(deformation_matrix(rs, s, d, {0.0, 0.0}, zs[0])) == 0.0);
        for (cplx z : zs) {
            Mat2 dY = (p.sign * y_matrix(p.s, p.w, n, z).entries - m.sign * y_matrix(m.s, m.w, n, z).entries) / (2.0 * delta);
            CHECK(rel(dY, deformation_matrix(rs, s, d, velocities, z) * y_matrix(s, w, n, z).entries) < 1e-5);
        }
        auto rhs = schlesinger_rhs(rs, s, d, velocities);
        auto rp = residue_set(p.s, p.d, n), rm = residue_set(m.s, m.d, n);
        for (int j = 1; j <= 2; ++j) {
            Mat2 dA = (rp.A[static_cast<std::size_t>(j)] - rm.A[static_cast<std::size_t>(j)]) / (2.0 * delta);
            CHECK(rel(dA, rhs[static_cast<std::size_t>(j)]) < 1e-5);
        }
        CHECK(rel((rp.A_inf - rm.A_inf) / (2.0 * delta), rhs.back()) < 1e-5);
    }
    CHECK_THROWS_AS(deformation_derivatives(s, d, 1, {1.0}), InputError);
}
