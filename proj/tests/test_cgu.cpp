// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bops/cgu.hpp"

using namespace bops;

namespace {

WeightSpec test_weight() {
    WeightSpec w;
    w.factors = {{FactorKind::conjugated, 0.5, 0.3}, {FactorKind::outer, 2.0, 0.4}};
    return w;
}

WeightSpec outer(cplx zero, cplx exponent) {
    WeightSpec w;
    w.factors = {{FactorKind::outer, zero, exponent}};
    return w;
}

ViewPtr view_of(const WeightSpec& w, int n) { return std::make_shared<BopsSystem>(build_system(w, n)); }

// Largest relative difference between the transformed result and a direct
// rebuild, with polynomial coefficients compared up to a sign per degree.
double max_mismatch(const TransformResult& t, const BopsSystem& ref) {
    double worst = 0.0;
    for (const auto& d : t.degrees) {
        worst = std::max({worst, rel_diff(d.kappa_sq, ref.kappa(d.n) * ref.kappa(d.n)), rel_diff(d.r, ref.r(d.n)),
                          rel_diff(d.rbar, ref.rbar(d.n))});
        double sgn = std::real(d.kappa / ref.kappa(d.n)) < 0.0 ? -1.0 : 1.0;
        for (int k = 0; k <= d.n; ++k) {
            worst = std::max(worst, rel_diff(sgn * d.phi.coeff(k), ref.phi(d.n).coeff(k)));
            worst = std::max(worst, rel_diff(sgn * d.phibar.coeff(k), ref.phibar(d.n).coeff(k)));
        }
    }
    return worst;
}

const std::vector<cplx> zs = {cplx(0.3, 0.2), cplx(-0.4, 0.5), cplx(1.7, 0.3), cplx(-0.2, -2.2), cplx(0.6, -0.1),
                              cplx(-1.5, 0.9), cplx(0.05, 0.45), cplx(2.6, -1.0)};

}  // namespace

TEST_CASE("generator examples on the Lebesgue weight") {
    auto one = view_of(WeightSpec{}, 6);
    auto g = generator(*one, GenKind::K1, 2.0, 1);
    for (cplx z : zs) {
        Mat2 expected = (I_unit / std::sqrt(2.0)) / (z - 2.0) * mat2(z - 2.0, 0.0, z / 2.0, -2.0);
        CHECK(max_abs(g(z) - expected) < 1e-13);
    }
    auto k3 = transformed_coeffs(*one, GenKind::K1, 2.0, 3);
    CHECK(std::abs(k3.kappa_sq + 0.5) < 1e-13);
    CHECK(std::abs(k3.r) < 1e-13);
    CHECK(std::abs(k3.rbar - 0.125) < 1e-13);

    auto l2 = transformed_coeffs(*one, GenKind::L1, 2.0, 2);
    CHECK(std::abs(l2.kappa_sq + 2.0) < 1e-13);
    CHECK(std::abs(l2.r) < 1e-13);
    CHECK(std::abs(l2.rbar) < 1e-13);
    auto l1 = transformed_coeffs(*one, GenKind::L1, 2.0, 1);
    CHECK(std::abs(l1.kappa_sq + 2.0) < 1e-13);
    CHECK(std::abs(l1.rbar + 0.5) < 1e-13);
    auto gl = generator(*one, GenKind::L1, 2.0, 1);
    CHECK(std::abs(gl.scale + 1.0 / std::sqrt(cplx(-2.0))) < 1e-13);
}

TEST_CASE("transformed coefficients match direct rebuilds") {
    auto w = test_weight();
    auto base = view_of(w, 9);
    struct Case {
        GenKind kind;
        cplx a;
        CguShift shift;
    };
    std::vector<Case> cases = {{GenKind::K1, 4.0, {{4.0}, {}, {}, {}}},
                               {GenKind::L1, 3.0, {{}, {}, {3.0}, {}}},
                               {GenKind::K1star, cplx(0.3, 0.1), {{}, {cplx(0.3, 0.1)}, {}, {}}},
                               {GenKind::L1star, 0.4, {{}, {}, {}, {0.4}}}};
    for (const auto& c : cases) {
        auto ref = build_system(apply_shift(w, c.shift), 8);
        for (int n = 0; n <= 7; ++n) {
            auto t = transformed_coeffs(*base, c.kind, c.a, n);
            CHECK(rel_diff(t.kappa_sq, ref.kappa(n) * ref.kappa(n)) < 1e-10);
            CHECK(rel_diff(t.r, ref.r(n)) < 1e-10);
            CHECK(rel_diff(t.rbar, ref.rbar(n)) < 1e-10);
            CHECK(rel_diff(t.kappa_sq, ref.I(n) / ref.I(n + 1)) < 1e-10);
        }
    }
}

TEST_CASE("generator inverses and determinants") {
    auto w = test_weight();
    auto base = view_of(w, 8);
    for (GenKind kind : {GenKind::K1, GenKind::L1, GenKind::K1star, GenKind::L1star}) {
        cplx a = raises_degree(kind) ? (kind == GenKind::K1 ? cplx(4.0) : cplx(0.3, 0.1)) : (kind == GenKind::L1 ? cplx(3.0) : cplx(0.4));
        for (int n = 0; n <= 5; ++n) {
            auto g = generator(*base, kind, a, n);
            std::vector<cplx> dets;
            for (cplx z : zs) {
                Mat2 prod = g(z) * generator_inverse(*base, kind, a, n, z);
                CHECK(max_abs(prod - Mat2::Identity()) < 1e-10);
                dets.push_back(g.det(z) * weight_ratio(kind, a, z));
            }
            // det R times the weight ratio is independent of z
            for (auto d : dets) CHECK(rel_diff(d, dets.front()) < 1e-10);
        }
    }
}

TEST_CASE("transform_system equals the direct rebuild") {
    SUBCASE("alphas = [2] on the Lebesgue weight") {
        auto t = transform_system(view_of(WeightSpec{}, 10), {{2.0}, {}, {}, {}}, 8);
        CHECK(max_mismatch(t, build_system(outer(2.0, 1.0), 8)) < 1e-10);
    }
    SUBCASE("betas = [3] on (z-2)^0.4 including n = 0") {
        auto w = outer(2.0, 0.4);
        CguShift sh{{}, {}, {3.0}, {}};
        auto t = transform_system(view_of(w, 10), sh, 8);
        CHECK(max_mismatch(t, build_system(apply_shift(w, sh), 8)) < 1e-10);
    }
    SUBCASE("composite shift on the Lebesgue weight") {
        CguShift sh{{2.0}, {0.5}, {3.0}, {0.4}};
        auto t = transform_system(view_of(WeightSpec{}, 12), sh, 8);
        CHECK(max_mismatch(t, build_system(apply_shift(WeightSpec{}, sh), 8)) < 1e-8);
    }
    SUBCASE("two betas exercise degrees below L") {
        auto w = test_weight();
        CguShift sh{{}, {}, {2.5, -3.0}, {}};
        auto ref = build_system(apply_shift(w, sh), 8);
        auto det = transform_system(view_of(w, 10), sh, 8, TransformRoute::determinant);
        auto chain = transform_system(view_of(w, 10), sh, 8, TransformRoute::chain);
        CHECK(det.degrees[0].route == "determinant");
        CHECK(max_mismatch(det, ref) < 1e-9);
        CHECK(max_mismatch(chain, ref) < 1e-9);
    }
    SUBCASE("composite shift on the test weight, both routes") {
        auto w = test_weight();
        CguShift sh{{4.0}, {cplx(0.3, 0.1)}, {3.0}, {0.4}};
        auto ref = build_system(apply_shift(w, sh), 8);
        CHECK(max_mismatch(transform_system(view_of(w, 12), sh, 8, TransformRoute::determinant), ref) < 1e-8);
        CHECK(max_mismatch(transform_system(view_of(w, 12), sh, 8, TransformRoute::chain), ref) < 1e-8);
    }
}

TEST_CASE("successive elementary shifts commute") {
    auto w = test_weight();
    auto base = view_of(w, 10);
    auto ab = chain_transform(base, {{4.0}, {}, {3.0}, {}});
    auto one = std::make_shared<TransformedView>(std::make_shared<TransformedView>(base, GenKind::L1, 3.0), GenKind::K1, 4.0);
    for (int n = 0; n <= 6; ++n) {
        CHECK(rel_diff(ab->kappa(n) * ab->kappa(n), one->kappa(n) * one->kappa(n)) < 1e-10);
        CHECK(rel_diff(ab->r(n), one->r(n)) < 1e-10);
        CHECK(rel_diff(ab->rbar(n), one->rbar(n)) < 1e-10);
    }
}

TEST_CASE("recurrence compatibility of the generators") {
    CHECK(max_abs(recurrence_compat_residual(view_of(WeightSpec{}, 6), GenKind::K1, 2.0, 1, 0.3)) < 1e-12);
    CHECK(max_abs(recurrence_compat_residual(view_of(outer(3.0, -1.0), 6), GenKind::L1, 2.0, 2, 1.7)) < 1e-10);
    auto base = view_of(test_weight(), 9);
    for (int n = 0; n <= 5; ++n)
        for (int i = 0; i < 8; ++i) {
            cplx z1 = std::polar(0.5, 2.0 * std::numbers::pi * (i + 0.3) / 8.0);
            cplx z2 = std::polar(2.0, 2.0 * std::numbers::pi * (i + 0.3) / 8.0);
            CHECK(max_abs(recurrence_compat_residual(base, GenKind::K1, 4.0, n, z1)) < 1e-10);
            CHECK(max_abs(recurrence_compat_residual(base, GenKind::L1, 3.0, n, z2)) < 1e-10);
        }
}

TEST_CASE("spectral compatibility of the generators") {
    auto w = test_weight();
    auto d = semiclassical_data(w);
    auto base = view_of(w, 9);
    CHECK(max_abs(spectral_compat_residual(base, w, d, GenKind::K1, 2.0, 2, 0.7)) < 1e-8);
    CHECK(max_abs(spectral_compat_residual(base, w, d, GenKind::L1, 2.0, 3, cplx(0.0, 1.5))) < 1e-8);
    CHECK(max_abs(spectral_compat_residual(base, w, d, GenKind::K1, 4.0, 2, cplx(0.3, -0.4))) < 1e-8);
    CHECK(max_abs(spectral_compat_residual(base, w, d, GenKind::K1star, cplx(0.3, 0.1), 2, cplx(1.4, 0.6))) < 1e-8);
    CHECK(max_abs(spectral_compat_residual(base, w, d, GenKind::L1star, 0.5, 2, cplx(-0.3, 0.2))) < 1e-8);
}

TEST_CASE("shift validation") {
    CHECK_THROWS_AS(validate_shift({{cplx(0.6, 0.8)}, {}, {}, {}}), DomainError);
    CHECK_THROWS_AS(validate_shift({{0.0}, {}, {}, {}}), InputError);
    CHECK_THROWS_AS(transform_system(view_of(WeightSpec{}, 3), {{2.0}, {}, {}, {}}, 3), InputError);
}
