#pragma once

// Independent reference computations for the test suites: closed forms,
// brute-force quadrature of pointwise formulas, and dense linear algebra
// through different Eigen decompositions than the library uses.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hrf/fiber_frames.hpp"
#include "hrf/grid.hpp"

namespace oracle {

using cplx = std::complex<double>;
constexpr double pi = 3.14159265358979323846;

inline cplx expi(double p) { return {std::cos(p), std::sin(p)}; }

/// int_lo^hi e^{-2 pi i nu u} du.
inline cplx exp_integral(double lo, double hi, double nu) {
    if (hi <= lo) return {};
    if (nu == 0.0) return hi - lo;
    return (expi(-2.0 * pi * nu * hi) - expi(-2.0 * pi * nu * lo)) / cplx(0.0, -2.0 * pi * nu);
}

/// Ambiguity function of the unit box on [0, 1) with itself.
inline cplx box_ambiguity(double s, double nu) {
    return exp_integral(std::max(0.0, s), std::min(1.0, 1.0 + s), nu);
}

/// Ambiguity function of 2^{1/4} e^{-pi (x - c)^2} with itself.
inline cplx gaussian_ambiguity(double s, double nu, double c) {
    return std::exp(-pi * s * s / 2.0) * std::exp(-pi * nu * nu / 2.0) * expi(-2.0 * pi * nu * (c + s / 2.0));
}

/// Composite midpoint rule with n nodes for a complex integrand.
inline cplx midpoint(const std::function<cplx(double)>& f, double lo, double hi, long n) {
    const double h = (hi - lo) / static_cast<double>(n);
    cplx acc{};
    for (long j = 0; j < n; ++j) acc += f(lo + (static_cast<double>(j) + 0.5) * h);
    return acc * h;
}

/// <pi_sigma(x, y, z) v_sigma, w_sigma> by brute-force quadrature of the
/// pointwise formulas, without any change of variables.
inline cplx gabor_inner_bruteforce(const hrf::SampledWindow& v, const hrf::SampledWindow& w, double sigma,
                                   double x, double y, double z, long n) {
    const double s = std::abs(sigma);
    auto vs = [&](double t) { return std::sqrt(s) * v(sigma * t); };
    auto ws = [&](double t) { return std::sqrt(s) * w(sigma * t); };
    auto f = [&](double t) {
        return expi(2.0 * pi * sigma * z) * expi(-2.0 * pi * sigma * y * t) * vs(t - x) * std::conj(ws(t));
    };
    // Support of w_sigma.
    double a = w.support_begin() / sigma;
    double b = w.support_end() / sigma;
    if (a > b) std::swap(a, b);
    return midpoint(f, a, b, n);
}

/// Moore-Penrose pseudo-inverse through a complete orthogonal decomposition.
inline Eigen::MatrixXcd pinv(const Eigen::MatrixXcd& A) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(A);
    cod.setThreshold(1e-10);
    return cod.pseudoInverse();
}

inline Eigen::Index rank(const Eigen::MatrixXcd& A, double threshold = 1e-9) {
    if (A.size() == 0) return 0;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(A);
    cod.setThreshold(threshold);
    return cod.rank();
}

struct Bounds {
    double A = 0.0;
    double B = 0.0;
};

/// Frame bounds from the eigenvalues of the weighted Gram matrix.
inline Bounds frame_bounds(const hrf::FiberSystem& s) {
    Eigen::MatrixXcd Phi = s.vectors;
    for (Eigen::Index i = 0; i < Phi.cols(); ++i) Phi.col(i) *= std::sqrt(s.weights[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXcd G = Phi.adjoint() * Phi;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    const auto& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    double low = top;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > 1e-12 * top) low = std::min(low, ev(i));
    return {low, top};
}

struct DualFlags {
    bool alternate = false;
    bool type_I = false;
    bool type_II = false;
};

/// Dual flags from the projection P_J = Phi Phi^+ and pseudo-inverse rank tests.
inline DualFlags dual_flags(const hrf::FiberSystem& a, const hrf::FiberSystem& b, double tol) {
    const Eigen::MatrixXcd& Phi = a.vectors;
    const Eigen::MatrixXcd& Psi = b.vectors;
    Eigen::VectorXd w(static_cast<Eigen::Index>(a.weights.size()));
    for (std::size_t i = 0; i < a.weights.size(); ++i) w(static_cast<Eigen::Index>(i)) = a.weights[i];
    const Eigen::MatrixXcd P = Phi * pinv(Phi);
    const Eigen::Index D = Phi.rows();
    const Eigen::MatrixXcd E = (Phi * w.asDiagonal() * Psi.adjoint() - Eigen::MatrixXcd::Identity(D, D)) * P;
    DualFlags f;
    f.alternate = E.jacobiSvd().singularValues()(0) <= tol;
    if (!f.alternate) return f;
    const Eigen::MatrixXcd outside = (Eigen::MatrixXcd::Identity(D, D) - P) * Psi;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < outside.cols(); ++i) worst = std::max(worst, outside.col(i).norm());
    f.type_I = worst <= tol;
    const Eigen::MatrixXcd PA = Phi.adjoint() * P;
    const Eigen::MatrixXcd PB = Psi.adjoint() * P;
    Eigen::MatrixXcd stacked(PA.rows(), PA.cols() + PB.cols());
    stacked << PA, PB;
    f.type_II = rank(stacked) == rank(PA);
    return f;
}

enum class DualCategory { canonical, outside_component, kernel_modified, perturbed };

struct DualInstance {
    hrf::FiberSystem a;
    hrf::FiberSystem b;
    DualCategory category;
    DualFlags expected;
};

inline Eigen::MatrixXcd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXcd M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) M(i, j) = cplx(n(rng), n(rng));
    return M;
}

inline Eigen::MatrixXcd orthonormal_columns(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_matrix(rng, rows, rows));
    return qr.householderQ() * Eigen::MatrixXcd::Identity(rows, cols);
}

/// Random system of K vectors spanning an r-dimensional subspace of C^D
/// (singular values in [0.3, 2]) together with a dual of the requested kind.
inline DualInstance make_dual_instance(std::mt19937_64& rng, DualCategory cat, Eigen::Index D, Eigen::Index K,
                                       double alpha = 0.5) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::Index rmax = std::min(D, K);
    if (cat == DualCategory::outside_component) rmax = std::min(rmax, D - 1);
    if (cat == DualCategory::kernel_modified) rmax = std::min(rmax, K - 1);
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(unit(rng) * static_cast<double>(rmax)) % rmax;
    const Eigen::MatrixXcd U = orthonormal_columns(rng, D, r);
    const Eigen::MatrixXcd V = orthonormal_columns(rng, K, r);
    Eigen::VectorXd s(r);
    for (Eigen::Index i = 0; i < r; ++i) s(i) = 0.3 + 1.7 * unit(rng);
    const Eigen::MatrixXcd Phi = U * s.asDiagonal() * V.adjoint();
    std::vector<double> weights(static_cast<std::size_t>(K));
    for (double& x : weights) x = 0.5 + 1.5 * unit(rng);
    Eigen::VectorXd w(K);
    for (Eigen::Index i = 0; i < K; ++i) w(i) = weights[static_cast<std::size_t>(i)];

    const Eigen::MatrixXcd S = Phi * w.asDiagonal() * Phi.adjoint();
    Eigen::MatrixXcd Psi = pinv(S) * Phi;
    DualFlags expect{true, true, true};
    switch (cat) {
    case DualCategory::canonical: break;
    case DualCategory::outside_component: {
        const Eigen::MatrixXcd R = random_matrix(rng, D, K);
        Psi += R - U * (U.adjoint() * R);
        expect.type_I = false;
        break;
    }
    case DualCategory::kernel_modified: {
        // Columns of N span part of ker Phi; X = U N^* W^{-1} keeps Phi W X^* = 0 on J.
        const Eigen::MatrixXcd Pker = Eigen::MatrixXcd::Identity(K, K) - V * V.adjoint();
        const Eigen::MatrixXcd N = Pker * random_matrix(rng, K, r);
        Psi += U * N.adjoint() * w.cwiseInverse().asDiagonal();
        expect.type_II = false;
        break;
    }
    case DualCategory::perturbed:
        Psi += 1e-3 * random_matrix(rng, D, K);
        expect = {false, false, false};
        break;
    }
    return {hrf::FiberSystem::from_matrix(alpha, Phi, weights), hrf::FiberSystem::from_matrix(alpha, Psi, weights),
            cat, expect};
}

}  // namespace oracle
