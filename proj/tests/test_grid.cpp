#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hrf/grid.hpp"
#include "oracles.hpp"

using namespace hrf;

TEST(Window, PresetNorms) {
    EXPECT_NEAR(window_preset("box", 4096, 0.0, 1.0).norm(), 1.0, 1e-10);
    EXPECT_NEAR(window_preset("half-box-sqrt2", 4096, 0.0, 1.0).norm(), 1.0, 1e-10);
    // Reference: midpoint rule on 2^22 nodes of the pointwise Gaussian.
    const double ref = std::sqrt(oracle::midpoint(
                                     [](double x) { return std::sqrt(2.0) * std::exp(-2.0 * oracle::pi * x * x); },
                                     -8.0, 8.0, 1L << 22)
                                     .real());
    const double n = window_preset("gaussian", 4096, -8.0, 8.0).norm();
    EXPECT_NEAR(n, ref, 1e-8);
    EXPECT_NEAR(n, 1.0, 1e-8);
}

TEST(Window, Validation) {
    EXPECT_THROW(window_preset("triangle", 16, 0.0, 1.0), Error);
    try {
        SampledWindow(std::vector<cplx>(4, 1.0), 0.0, 0.25, 0.0, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unsupported_dimension);
    }
    EXPECT_THROW(SampledWindow(std::vector<cplx>(4, 1.0), 0.0, 0.0), Error);
    EXPECT_THROW(SampledWindow(std::vector<cplx>(1, 1.0), 0.0, 1.0), Error);
}

TEST(InnerProduct, Examples) {
    const auto box = window_preset("box", 4096, 0.0, 1.0);
    const auto half = window_preset("half-box-sqrt2", 4096, 0.0, 1.0);
    EXPECT_NEAR(std::abs(inner_product(box, half) - cplx(std::sqrt(0.5), 0.0)), 0.0, 1e-8);
    for (const char* p : {"box", "half-box-sqrt2", "gaussian", "hat"}) {
        const auto v = window_preset(p, 512, -2.0, 3.0);
        const cplx s = inner_product(v, v);
        EXPECT_GE(s.real(), 0.0);
        EXPECT_EQ(s.imag(), 0.0);
    }
    EXPECT_EQ(inner_product(box, SampledWindow::zeros(4096, 0.0, 1.0 / 4096)), cplx{});
}

TEST(InnerProduct, ConjugateSymmetry) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<cplx> a(37), b(53);
        for (auto& x : a) x = {n(rng), n(rng)};
        for (auto& x : b) x = {n(rng), n(rng)};
        const SampledWindow u(a, n(rng), 0.05, n(rng));
        const SampledWindow v(b, n(rng), 0.03, n(rng));
        const GridPolicy quiet{true, false};
        const cplx uv = inner_product(u, v, quiet);
        const cplx vu = inner_product(v, u, quiet);
        EXPECT_LT(std::abs(uv - std::conj(vu)), 1e-14 * (1.0 + std::abs(uv)));
    }
}

TEST(InnerProduct, GridMismatchPolicy) {
    const auto u = window_preset("box", 64, 0.0, 1.0);
    const auto v = window_preset("box", 48, 0.0, 1.0);
    try {
        inner_product(u, v, GridPolicy{false, false});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::grid_mismatch);
    }
    EXPECT_NEAR(std::abs(inner_product(u, v, GridPolicy{true, false})), 1.0, 1e-14);
}

TEST(Ambiguity, BoxClosedForm) {
    const auto box = window_preset("box", 1000, 0.0, 1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> s(-1.5, 1.5), nu(-6.0, 6.0);
    for (int trial = 0; trial < 200; ++trial) {
        // Shifts on the cell lattice keep the cell model exact.
        const double shift = std::round(s(rng) * 1000.0) / 1000.0;
        const double f = nu(rng);
        EXPECT_LT(std::abs(ambiguity(box, box, shift, f) - oracle::box_ambiguity(shift, f)), 1e-12);
    }
}

TEST(Ambiguity, GaussianClosedForm) {
    const auto g = window_preset("gaussian", 4096, -8.0, 8.0);
    for (double s : {-0.7, 0.0, 0.31, 1.2})
        for (double nu : {-1.5, 0.0, 0.4, 2.0})
            EXPECT_LT(std::abs(ambiguity(g, g, s, nu) - oracle::gaussian_ambiguity(s, nu, 0.0)), 2e-5);
}

TEST(Ambiguity, MixedWidthsAgainstAlignedQuadrature) {
    // Cell widths 1/8 and 1/12 share the refinement 1/24; the integrand is
    // smooth on each refined piece, so a fine midpoint rule is accurate.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<cplx> a(8), b(12);
    for (auto& x : a) x = {n(rng), n(rng)};
    for (auto& x : b) x = {n(rng), n(rng)};
    const SampledWindow v(a, 0.0, 1.0 / 8.0, 0.3);
    const SampledWindow w(b, 0.0, 1.0 / 12.0, -0.2);
    const double shift = 5.0 / 24.0;
    const double nu = 1.7;
    const cplx got = ambiguity(v, w, shift, nu, GridPolicy{true, false});
    const cplx ref = oracle::midpoint(
        [&](double u) { return v(u - shift) * std::conj(w(u)) * oracle::expi(-2.0 * oracle::pi * nu * u); }, 0.0, 1.0,
        24 * 2000);
    EXPECT_LT(std::abs(got - ref), 1e-8);
}

TEST(ModulatedCorrelation, LongSumsMatchNaive) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<cplx> a(5000), b(5000);
    for (auto& x : a) x = {n(rng), n(rng)};
    for (auto& x : b) x = {n(rng), n(rng)};
    const double step = 2.345;
    const long offset = 17;
    cplx naive{};
    for (long j = 0; j < 5000; ++j)
        if (j + offset >= 0 && j + offset < 5000)
            naive += a[static_cast<std::size_t>(j)] * std::conj(b[static_cast<std::size_t>(j + offset)])
                     * oracle::expi(step * static_cast<double>(j));
    const cplx fast = detail::modulated_correlation(a, b, offset, step);
    EXPECT_LT(std::abs(fast - naive), 1e-10 * std::abs(naive) + 1e-10);
}

TEST(InnerProduct, GaussianQuadratureConvergence) {
    // <g, M_nu g> against a grid four times finer than the finest tested grid.
    const double nu = 0.6;
    auto value = [&](std::size_t n) {
        const auto g = window_preset("gaussian", n, -8.0, 8.0);
        return ambiguity(g, g, 0.0, nu);
    };
    const cplx ref = value(4 * 512);
    const double e1 = std::abs(value(256) - ref);
    const double e2 = std::abs(value(512) - ref);
    EXPECT_GE(e1 / e2, 3.5);
}

TEST(Quadrature, RulesAndEstimate) {
    const QuadratureRule mid{QuadratureKind::riemann_midpoint};
    const QuadratureRule trap{QuadratureKind::trapezoid};
    auto f = [](double x) { return x * x; };
    EXPECT_NEAR(mid.integrate(f, 0.0, 1.0, 100), 1.0 / 3.0, 1e-5);
    EXPECT_NEAR(trap.integrate(f, 0.0, 1.0, 100), 1.0 / 3.0, 2e-5);
    const auto r = mid.integrate_with_estimate(f, 0.0, 1.0, 100);
    EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-5);
    EXPECT_GT(r.error_estimate, 0.0);
    EXPECT_LT(r.error_estimate, 1e-4);
    EXPECT_EQ(parse_quadrature_kind("trapezoid"), QuadratureKind::trapezoid);
    EXPECT_THROW(parse_quadrature_kind("simpson"), Error);
}

TEST(Torus, MidpointGridAvoidsZero) {
    for (std::size_t n : {1u, 2u, 7u, 512u}) {
        const auto g = TorusGrid::midpoint(n);
        ASSERT_EQ(g.size(), n);
        for (double a : g.points()) {
            EXPECT_GT(a, 0.0);
            EXPECT_LT(a, 1.0);
        }
        EXPECT_DOUBLE_EQ(g.weight() * static_cast<double>(n), 1.0);
    }
    EXPECT_THROW(TorusGrid::points({0.0}), Error);
    EXPECT_NO_THROW(TorusGrid::points({1.0}));
}

TEST(Lattice, IntegralityRule) {
    EXPECT_NO_THROW(LatticeSpec::make(1.0, 2.0, 4));
    EXPECT_NO_THROW(LatticeSpec::make(0.5, 4.0, 2));
    try {
        LatticeSpec::make(1.0, 1.5, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.key(), "lattice.a*lattice.b");
    }
    EXPECT_EQ(LatticeSpec::box(2).size(), 25u);
    EXPECT_EQ(LatticeSpec::shell(2).size(), 16u);
}
