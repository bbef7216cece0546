// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bops/weight.hpp"
#include "oracles.hpp"

using namespace bops;

namespace {

WeightSpec test_weight() {
    WeightSpec w;
    w.factors = {{FactorKind::conjugated, 0.5, 0.3}, {FactorKind::outer, 2.0, 0.4}};
    return w;
}

// Binomial series coefficient of x^m in (1 + x)^a.
double binomial(double a, int m) {
    double c = 1.0;
    for (int i = 0; i < m; ++i) c *= (a - i) / (i + 1);
    return c;
}

}  // namespace

TEST_CASE("evaluate_weight on simple factors") {
    CHECK(std::abs(evaluate_weight(WeightSpec{}, cplx(0.3, 0.4)) - 1.0) < 1e-15);
    WeightSpec lin;
    lin.factors = {{FactorKind::outer, 2.0, 1.0}};
    CHECK(std::abs(evaluate_weight(lin, I_unit) - (I_unit - 2.0)) < 1e-14);
    WeightSpec root;
    root.factors = {{FactorKind::conjugated, 0.5, 0.5}};
    CHECK(std::abs(evaluate_weight(root, 1.0) - std::sqrt(0.5)) < 1e-14);
    CHECK_THROWS_AS(evaluate_weight(lin, 2.0), DomainError);
}

TEST_CASE("Fourier coefficients of elementary weights") {
    auto one = fourier_coefficients(WeightSpec{});
    CHECK(std::abs(one.at(0) - 1.0) < 1e-14);
    for (int k = 1; k <= 5; ++k) CHECK(std::abs(one.at(k)) + std::abs(one.at(-k)) < 1e-14);

    WeightSpec lin;
    lin.factors = {{FactorKind::outer, 2.0, 1.0}};
    auto tl = fourier_coefficients(lin);
    CHECK(std::abs(tl.at(0) + 2.0) < 1e-13);
    CHECK(std::abs(tl.at(1) - 1.0) < 1e-13);
    CHECK(std::abs(tl.at(2)) + std::abs(tl.at(-1)) < 1e-13);

    WeightSpec root;
    root.factors = {{FactorKind::conjugated, 0.5, 0.5}};
    auto tr = fourier_coefficients(root);
    CHECK(std::abs(tr.at(-1) + 0.25) < 1e-13);
    CHECK(std::abs(tr.at(-2) + 0.03125) < 1e-13);
    for (int m = 0; m <= 12; ++m) CHECK(std::abs(tr.at(-m) - binomial(0.5, m) * std::pow(-0.5, m)) < 1e-13);
    for (int k = 1; k <= 5; ++k) CHECK(std::abs(tr.at(k)) < 1e-13);
    CHECK(tr.tail_bound < 1e-12);
}

TEST_CASE("Fourier table agrees with direct quadrature and reproduces the weight") {
    auto w = test_weight();
    auto t = fourier_coefficients(w);
    auto f = oracle::weight_fn(w);
    for (int k = -8; k <= 8; ++k) CHECK(std::abs(t.at(k) - oracle::fourier(f, k)) < 1e-12);
    for (int j = 0; j < 128; ++j) {
        cplx z = std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / 128.0);
        CHECK(std::abs(fourier_series(t, z) - evaluate_weight(w, z)) < 1e-11);
    }
}

TEST_CASE("Caratheodory function matches the kernel integral") {
    auto one = fourier_coefficients(WeightSpec{});
    CHECK(std::abs(caratheodory(one, 0.5) - 1.0) < 1e-14);
    CHECK(std::abs(caratheodory(one, 2.0) + 1.0) < 1e-14);
    WeightSpec root;
    root.factors = {{FactorKind::conjugated, 0.5, 0.5}};
    auto tr = fourier_coefficients(root);
    CHECK(std::abs(caratheodory(tr, 0.0) - 1.0) < 1e-13);
    auto w = test_weight();
    auto t = fourier_coefficients(w);
    for (cplx z : {cplx(0.3, 0.2), cplx(-0.6, 0.1), cplx(1.8, -0.7), cplx(-2.5, 0.3)})
        CHECK(std::abs(caratheodory(t, z) - oracle::kernel(oracle::weight_fn(w), z)) < 1e-11);
    CHECK_THROWS_AS(caratheodory(t, 1.0), DomainError);
}

TEST_CASE("g moments match direct quadrature of the Cauchy moment") {
    auto one = fourier_coefficients(WeightSpec{});
    CHECK(std::abs(g_moment(one, 1, 0.5) - 1.0) < 1e-14);
    CHECK(std::abs(g_moment(one, 0, cplx(0.3, 0.1))) < 1e-14);
    WeightSpec lin;
    lin.factors = {{FactorKind::outer, 2.0, 1.0}};
    auto tl = fourier_coefficients(lin);
    // 2z * average of zeta^j w(zeta) zeta / (zeta - z)
    auto direct = [&](int j, cplx z) {
        cplx s = 0.0;
        const int N = 4096;
        for (int i = 0; i < N; ++i) {
            cplx x = std::polar(1.0, 2.0 * std::numbers::pi * i / N);
            s += std::pow(x, j) * evaluate_weight(lin, x) / (x - z);
        }
        return 2.0 * z * s / static_cast<double>(N);
    };
    CHECK(std::abs(g_moment(tl, 1, 0.25) - direct(1, 0.25)) < 1e-12);
    CHECK(std::abs(g_moment(tl, 1, 0.25) - (-0.875)) < 1e-13);
    CHECK(std::abs(g_moment(tl, 3, cplx(0.2, -0.4)) - direct(3, cplx(0.2, -0.4))) < 1e-12);
    CHECK_THROWS_AS(g_moment(tl, 1, 1.5), DomainError);
}

TEST_CASE("modify_weight folds rational factors") {
    auto a = modify_weight(WeightSpec{}, {2.0}, {}, {}, {});
    for (cplx z : {cplx(0.3, 0.1), cplx(1.5, -2.0)}) CHECK(std::abs(evaluate_weight(a, z) - (z - 2.0)) < 1e-14);

    WeightSpec base;
    base.factors = {{FactorKind::outer, 2.0, 0.3}};
    auto merged = modify_weight(base, {2.0}, {}, {}, {});
    REQUIRE(merged.factors.size() == 1);
    CHECK(std::abs(merged.factors[0].exponent - 1.3) < 1e-15);

    auto pole = modify_weight(WeightSpec{}, {}, {}, {2.0}, {});
    auto tp = fourier_coefficients(pole);
    for (int k = 0; k <= 10; ++k) CHECK(std::abs(tp.at(k) + std::pow(2.0, -k - 1)) < 1e-13);
    for (int k = 1; k <= 5; ++k) CHECK(std::abs(tp.at(-k)) < 1e-13);

    auto conj = modify_weight(test_weight(), {}, {0.5}, {}, {});
    for (cplx z : {cplx(0.7, 0.2), cplx(-1.4, 0.5)})
        CHECK(std::abs(evaluate_weight(conj, z) - evaluate_weight(test_weight(), z) * (1.0 - 0.5 / z)) < 1e-13);
}

TEST_CASE("weight validation") {
    CHECK_THROWS_AS(modify_weight(WeightSpec{}, {cplx(0.6, 0.8)}, {}, {}, {}), DomainError);
    CHECK_THROWS_AS(modify_weight(WeightSpec{}, {2.0}, {}, {2.0}, {}), InputError);
    WeightSpec bad;
    bad.factors = {{FactorKind::outer, 0.5, 1.0}};
    CHECK_THROWS_AS(validate_weight(bad), InputError);
    bad.factors = {{FactorKind::monomial, 0.0, 0.5}};
    CHECK_THROWS_AS(validate_weight(bad), InputError);
}
