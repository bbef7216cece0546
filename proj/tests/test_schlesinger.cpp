// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bops/schlesinger.hpp"

using namespace bops;

namespace {

WeightSpec test_weight() {
    WeightSpec w;
    w.factors = {{FactorKind::conjugated, 0.5, 0.3}, {FactorKind::outer, 2.0, 0.4}};
    return w;
}

std::vector<int> unit_shift(int j, int dir) {
    std::vector<int> s(3, 0);
    s[static_cast<std::size_t>(j)] = dir;
    return s;
}

const std::vector<cplx> zs = {cplx(0.3, 0.25), cplx(-0.4, 0.5), cplx(1.7, 0.6), cplx(-0.2, -2.2),
                              cplx(0.6, -0.3), cplx(-1.5, 0.9), cplx(0.05, 0.45), cplx(2.6, -1.0)};
const std::vector<cplx> velocities = {1.0, cplx(0.0, 0.5)};

struct Fixture {
    WeightSpec w = test_weight();
    SemiClassicalData d = semiclassical_data(w);
    ViewPtr base = std::make_shared<BopsSystem>(build_system(w, 9));
};

}  // namespace

TEST_CASE("shifted weights") {
    auto w = test_weight();
    auto up = shift_exponents(w, unit_shift(2, 1));
    for (cplx z : zs) CHECK(rel_diff(evaluate_weight(up, z), evaluate_weight(w, z) * (z - 2.0)) < 1e-13);
    auto up1 = shift_exponents(w, unit_shift(1, 1));
    for (cplx z : zs) CHECK(rel_diff(evaluate_weight(up1, z), evaluate_weight(w, z) * (z - 0.5)) < 1e-13);
    auto d = shifted_data(semiclassical_data(w), 2, 1);
    CHECK(std::abs(d.rho(2) - 1.4) < 1e-15);
    CHECK_THROWS_AS(shift_exponents(w, {0, 1}), InputError);
}

TEST_CASE_FIXTURE(Fixture, "shifted coefficients match the rebuilt system") {
    auto ref = build_system(shift_exponents(w, unit_shift(2, 1)), 4);
    auto sc = shifted_coeffs(*base, d, 2, 1, 3);
    CHECK(rel_diff(sc.kappa_sq, ref.kappa(3) * ref.kappa(3)) < 1e-8);
    for (int j = 1; j <= 2; ++j)
        for (int dir : {1, -1}) {
            auto rb = build_system(shift_exponents(w, unit_shift(j, dir)), 7);
            for (int n = 0; n <= 6; ++n) {
                auto c = shifted_coeffs(*base, d, j, dir, n);
                CHECK(rel_diff(c.kappa_sq, rb.kappa(n) * rb.kappa(n)) < 1e-8);
                CHECK(rel_diff(c.r, rb.r(n)) < 1e-8);
                CHECK(rel_diff(c.rbar, rb.rbar(n)) < 1e-8);
                if (c.has_theta_form) CHECK(c.form_residual < 1e-9);
            }
        }
}

TEST_CASE_FIXTURE(Fixture, "up then down is the identity") {
    for (int j = 1; j <= 2; ++j) {
        auto up = schlesinger_view(base, d, j, 1);
        auto dup = shifted_data(d, j, 1);
        for (int n = 0; n <= 6; ++n) {
            auto c = shifted_coeffs(*up, dup, j, -1, n);
            CHECK(rel_diff(c.kappa_sq, base->kappa(n) * base->kappa(n)) < 1e-9);
            CHECK(rel_diff(c.r, base->r(n)) < 1e-9);
            CHECK(rel_diff(c.rbar, base->rbar(n)) < 1e-9);
            auto Rp = schlesinger_matrix(*base, d, j, 1, n);
            auto Rm = schlesinger_matrix(*up, dup, j, -1, n);
            for (cplx z : zs) {
                CHECK(max_abs(Rm(z) * Rp(z) - Mat2::Identity()) < 1e-9);
                CHECK(max_abs(Rp(z) * schlesinger_inverse(*base, d, j, 1, n, z) - Mat2::Identity()) < 1e-9);
                CHECK(std::abs(Rp.det(z) * (z - d.z(j)) - 1.0) < 1e-9);
                CHECK(std::abs(Rm.det(z) / (z - d.z(j)) - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE_FIXTURE(Fixture, "down shift coincides with the denominator generator") {
    for (int n = 0; n <= 5; ++n) {
        auto R = schlesinger_matrix(*base, d, 2, -1, n);
        auto G = generator(*base, GenKind::L1, 2.0, n);
        for (cplx z : zs) CHECK(max_abs(R(z) - G(z)) < 1e-10 * std::max(1.0, max_abs(G(z))));
    }
}

TEST_CASE_FIXTURE(Fixture, "shifted evaluations") {
    for (int j = 1; j <= 2; ++j)
        for (int dir : {1, -1}) {
            auto rw = shift_exponents(w, unit_shift(j, dir));
            auto rb = build_system(rw, 7);
            for (int n = 0; n <= 6; ++n) {
                auto c = shifted_coeffs(*base, d, j, dir, n);
                double sgn = std::real(c.kappa / rb.kappa(n)) < 0.0 ? -1.0 : 1.0;
                for (const auto& v : shifted_evaluations(*base, d, j, dir, n)) {
                    CHECK(rel_diff(sgn * v.phi, rb.phi_at(n, v.z)) < 1e-8);
                    CHECK(rel_diff(sgn * v.phis, rb.phis_at(n, v.z)) < 1e-8);
                    CHECK(rel_diff(sgn * v.xi, rb.xi(n, v.z)) < 1e-8);
                    CHECK(rel_diff(sgn * v.xis, rb.xis(n, v.z)) < 1e-8);
                    if (v.k >= 1) {
                        cplx c3 = v.phi * v.xis + v.xi * v.phis - 2.0 * ipow(v.z, n);
                        CHECK(std::abs(c3) < 1e-8 * std::max(1.0, std::abs(ipow(v.z, n))));
                    }
                }
            }
        }
}

TEST_CASE_FIXTURE(Fixture, "transformed residues") {
    for (int j = 1; j <= 2; ++j)
        for (int dir : {1, -1}) {
            auto dn = shifted_data(d, j, dir);
            auto rb = build_system(shift_exponents(w, unit_shift(j, dir)), 7);
            for (int n = 0; n <= 6; ++n) {
                auto tr = transformed_residues(residue_set(*base, d, n), *base, d, j, dir, n);
                CHECK(tr.route_residual < 1e-9);
                CHECK(tr.set.inf_residual < 1e-9);
                auto direct = residue_set(rb, dn, n);
                for (int k = 0; k <= 2; ++k)
                    CHECK(rel_diff(tr.set.A[static_cast<std::size_t>(k)], direct.A[static_cast<std::size_t>(k)]) < 1e-8);
                const Mat2& Aj = tr.set.A[static_cast<std::size_t>(j)];
                CHECK(std::abs(Aj.determinant()) < 1e-8);
                CHECK(std::abs(Aj.trace() + (d.rho(j) + static_cast<double>(dir))) < 1e-8);
            }
        }
}

TEST_CASE_FIXTURE(Fixture, "compatibility with recurrence, spectral and deformation derivatives") {
    for (int j = 1; j <= 2; ++j)
        for (int dir : {1, -1})
            for (int n = 0; n <= 5; ++n)
                for (cplx z : {zs[0], zs[2], zs[5], zs[6]}) {
                    auto c = compatibility_residuals(base, w, d, j, dir, n, z, velocities);
                    CHECK(c.recurrence_rel < 1e-10);
                    CHECK(c.spectral_rel < 1e-8);
                    CHECK(c.deformation_rel < 1e-5);
                }
}

TEST_CASE_FIXTURE(Fixture, "commutativity of distinct shifts") {
    for (int n = 0; n <= 5; ++n)
        for (cplx z : zs) {
            auto pp = commutativity_residual(base, d, 1, 2, 1, 1, n, z);
            CHECK(pp.relative < 1e-9);
            CHECK(pp.kappa_residual < 1e-10);
            REQUIRE(pp.kappa_sq_formula.has_value());
            auto pm = commutativity_residual(base, d, 1, 2, 1, -1, n, z);
            CHECK(pm.relative < 1e-9);
            CHECK(pm.kappa_residual < 1e-10);
        }
    auto both = build_system(shift_exponents(w, {0, 1, 1}), 7);
    for (int n = 0; n <= 5; ++n) {
        auto pp = commutativity_residual(base, d, 1, 2, 1, 1, n, zs[0]);
        CHECK(rel_diff(pp.kappa_sq_jk, both.kappa(n) * both.kappa(n)) < 1e-8);
    }
    CHECK_THROWS_AS(commutativity_residual(base, d, 1, 1, 1, 1, 0, zs[0]), InputError);
}

TEST_CASE_FIXTURE(Fixture, "argument validation") {
    CHECK_THROWS_AS(schlesinger_matrix(*base, d, 0, 1, 1), InputError);
    CHECK_THROWS_AS(schlesinger_matrix(*base, d, 3, 1, 1), InputError);
    CHECK_THROWS_AS(schlesinger_matrix(*base, d, 1, 2, 1), InputError);
}
