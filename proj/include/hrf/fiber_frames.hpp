#pragma once

// Finite-dimensional fibre systems {pi~_alpha(lambda) F phi_k(alpha)}: Gram
// matrices, frame bounds, dual checks and type-I / type-II classification.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hrf/bracket.hpp"
#include "hrf/error.hpp"
#include "hrf/heisenberg.hpp"
#include "hrf/operator_field.hpp"

namespace hrf {

inline constexpr Eigen::Index max_fiber_dimension = 64;

/// Finite sample of Lambda_1 with quadrature weights. Lattice samples use the
/// counting measure; continuous boxes use lower-left nodes with weight hx*hy.
struct Lambda1Sample {
    std::vector<GroupElement> points;
    std::vector<double> weights;

    static Lambda1Sample identity() { return {{GroupElement{}}, {1.0}}; }

    static Lambda1Sample lattice(const LatticeSpec& lattice, int radius) {
        Lambda1Sample s;
        for (auto [m, n] : LatticeSpec::box(radius)) {
            s.points.push_back(GroupElement::lattice(m, n, lattice));
            s.weights.push_back(1.0);
        }
        return s;
    }

    static Lambda1Sample box(double x_lo, double x_hi, double y_lo, double y_hi, int nx, int ny) {
        if (nx < 1 || ny < 1 || !(x_hi > x_lo) || !(y_hi > y_lo))
            throw Error(ErrorCode::parameter, "continuous Lambda_1 box needs positive extent and sample counts");
        Lambda1Sample s;
        const double hx = (x_hi - x_lo) / nx;
        const double hy = (y_hi - y_lo) / ny;
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                s.points.push_back({x_lo + i * hx, y_lo + j * hy, 0.0});
                s.weights.push_back(hx * hy);
            }
        return s;
    }

    std::size_t size() const { return points.size(); }
};

struct SystemLabel {
    int generator = 0;
    GroupElement lambda{};
};

/// A fibre system in coordinates: column i of `vectors` is the i-th system
/// vector, carrying quadrature weight weights[i].
struct FiberSystem {
    double alpha = 0.0;
    Eigen::MatrixXcd vectors;
    std::vector<double> weights;
    std::vector<SystemLabel> labels;

    static FiberSystem from_matrix(double alpha, Eigen::MatrixXcd vectors, std::vector<double> weights = {}) {
        FiberSystem s;
        s.alpha = alpha;
        if (weights.empty()) weights.assign(static_cast<std::size_t>(vectors.cols()), 1.0);
        if (weights.size() != static_cast<std::size_t>(vectors.cols()))
            throw Error(ErrorCode::index_mismatch, "one weight per system vector is required");
        for (double w : weights)
            if (!(w > 0.0)) throw Error(ErrorCode::parameter, "system weights must be > 0");
        if (vectors.rows() > max_fiber_dimension)
            throw Error(ErrorCode::dimension_cap, "fibre dimension " + std::to_string(vectors.rows())
                                                      + " exceeds the cap of " + std::to_string(max_fiber_dimension));
        s.vectors = std::move(vectors);
        s.weights = std::move(weights);
        for (Eigen::Index i = 0; i < s.vectors.cols(); ++i) s.labels.push_back({static_cast<int>(i), {}});
        return s;
    }

    Eigen::Index dimension() const { return vectors.rows(); }
    Eigen::Index size() const { return vectors.cols(); }

    Eigen::VectorXd sqrt_weights() const {
        Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
        for (std::size_t i = 0; i < weights.size(); ++i) w(static_cast<Eigen::Index>(i)) = std::sqrt(weights[i]);
        return w;
    }

    /// Phi W^{1/2}.
    Eigen::MatrixXcd weighted() const { return vectors * sqrt_weights().asDiagonal(); }
};

/// System vectors kept as fibre elements of operator fields.
struct FiberFamily {
    double alpha = 0.0;
    int M = 1;
    std::vector<OperatorField> generators;
    Lambda1Sample sample;
    std::vector<SystemLabel> labels;
    std::vector<double> weights;

    std::size_t size() const { return labels.size(); }

    FiberElement element(std::size_t i) const {
        const auto& l = labels.at(i);
        return fiberize(generators.at(static_cast<std::size_t>(l.generator)), alpha, M).translated(l.lambda);
    }
};

inline FiberFamily build_fiber_system(std::vector<OperatorField> generators, Lambda1Sample sample, double alpha,
                                      int M = 1) {
    if (generators.empty() || sample.size() == 0)
        throw Error(ErrorCode::empty_family, "fibre system needs at least one generator and one lattice point");
    if (sample.weights.size() != sample.points.size())
        throw Error(ErrorCode::index_mismatch, "one weight per lattice point is required");
    FiberFamily f;
    f.alpha = alpha;
    f.M = M;
    f.generators = std::move(generators);
    f.sample = std::move(sample);
    for (std::size_t k = 0; k < f.generators.size(); ++k)
        for (std::size_t i = 0; i < f.sample.size(); ++i) {
            f.labels.push_back({static_cast<int>(k), f.sample.points[i]});
            f.weights.push_back(f.sample.weights[i]);
        }
    return f;
}

namespace detail {

// Unweighted Gram <x_j, x_i> between the vectors of two families at the same alpha,
// through <pi(l) A, pi(l') B> = <pi(l'^{-1} l) A, B>.
inline Eigen::MatrixXcd family_cross_gram(const FiberFamily& x, const FiberFamily& y, const BracketOptions& opt) {
    if (x.alpha != y.alpha || x.M != y.M)
        throw Error(ErrorCode::truncation_mismatch, "families live at different alpha or truncation");
    Eigen::MatrixXcd G(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(x.size()));
    BracketOptions o = opt;
    o.M = x.M;
    for (std::size_t kx = 0; kx < x.generators.size(); ++kx)
        for (std::size_t ky = 0; ky < y.generators.size(); ++ky) {
            const PairingKernel K(x.generators[kx], y.generators[ky], o);
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (static_cast<std::size_t>(x.labels[j].generator) != kx) continue;
                for (std::size_t i = 0; i < y.size(); ++i) {
                    if (static_cast<std::size_t>(y.labels[i].generator) != ky) continue;
                    const GroupElement g = y.labels[i].lambda.inverse() * x.labels[j].lambda;
                    G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = K(x.alpha, g);
                }
            }
        }
    return G;
}

// Coordinates C (r x K) with C^* C = G for a Hermitian PSD G.
inline Eigen::MatrixXcd gram_coordinates(const Eigen::MatrixXcd& G) {
    const Eigen::MatrixXcd H = 0.5 * (G + G.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    const auto& ev = es.eigenvalues();
    const double top = ev.size() ? std::max(ev.maxCoeff(), 0.0) : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = ev.size() - 1; i >= 0; --i)
        if (top > 0.0 && ev(i) > 1e-14 * top) keep.push_back(i);
    if (static_cast<Eigen::Index>(keep.size()) > max_fiber_dimension)
        throw Error(ErrorCode::dimension_cap, "fibre span dimension exceeds the cap of "
                                                  + std::to_string(max_fiber_dimension));
    Eigen::MatrixXcd C(static_cast<Eigen::Index>(keep.size()), G.cols());
    for (std::size_t r = 0; r < keep.size(); ++r)
        C.row(static_cast<Eigen::Index>(r)) = std::sqrt(ev(keep[r])) * es.eigenvectors().col(keep[r]).adjoint();
    return C;
}

inline FiberSystem system_from_coordinates(const FiberFamily& f, Eigen::MatrixXcd coords) {
    FiberSystem s;
    s.alpha = f.alpha;
    s.vectors = std::move(coords);
    s.weights = f.weights;
    s.labels = f.labels;
    return s;
}

}  // namespace detail

/// Coordinates of a family in an orthonormal basis of its span.
inline FiberSystem materialize(const FiberFamily& family, const BracketOptions& options = {}) {
    const Eigen::MatrixXcd G = detail::family_cross_gram(family, family, options);
    return detail::system_from_coordinates(family, detail::gram_coordinates(G));
}

/// Coordinates of two families in an orthonormal basis of their joint span.
inline std::pair<FiberSystem, FiberSystem> materialize_joint(const FiberFamily& a, const FiberFamily& b,
                                                             const BracketOptions& options = {}) {
    const auto Ka = static_cast<Eigen::Index>(a.size());
    const auto Kb = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXcd G(Ka + Kb, Ka + Kb);
    G.topLeftCorner(Ka, Ka) = detail::family_cross_gram(a, a, options);
    G.bottomRightCorner(Kb, Kb) = detail::family_cross_gram(b, b, options);
    const Eigen::MatrixXcd Gab = detail::family_cross_gram(a, b, options);  // <a_j, b_i> at (i, j)
    G.bottomLeftCorner(Kb, Ka) = Gab;
    G.topRightCorner(Ka, Kb) = Gab.adjoint();
    // G(i, j) must be <x_j, x_i> = (x_i^* x_j) for C^* C = G.
    const Eigen::MatrixXcd C = detail::gram_coordinates(G);
    return {detail::system_from_coordinates(a, C.leftCols(Ka)), detail::system_from_coordinates(b, C.rightCols(Kb))};
}

/// W^{1/2} Phi^* Phi W^{1/2}.
inline Eigen::MatrixXcd fiber_gram(const FiberSystem& s) {
    const Eigen::MatrixXcd P = s.weighted();
    return P.adjoint() * P;
}

struct RangeBasis {
    double alpha = 0.0;
    Eigen::MatrixXcd basis;  // orthonormal columns
    Eigen::Index rank = 0;
    double svd_cutoff = 1e-9;
    Eigen::VectorXd singular_values;
};

/// Orthonormal basis of J(alpha) = span of the system vectors; singular values
/// below svd_cutoff * largest are treated as zero.
inline RangeBasis range_basis(const FiberSystem& s, double svd_cutoff = 1e-9) {
    RangeBasis r;
    r.alpha = s.alpha;
    r.svd_cutoff = svd_cutoff;
    if (s.dimension() == 0 || s.size() == 0) {
        r.basis = Eigen::MatrixXcd(s.dimension(), 0);
        return r;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.weighted(), Eigen::ComputeThinU);
    r.singular_values = svd.singularValues();
    const double top = r.singular_values.size() ? r.singular_values(0) : 0.0;
    for (Eigen::Index i = 0; i < r.singular_values.size(); ++i)
        if (top > 0.0 && r.singular_values(i) > svd_cutoff * top) ++r.rank;
    r.basis = svd.matrixU().leftCols(r.rank);
    return r;
}

struct FrameBounds {
    double A = 0.0;
    double B = 0.0;
};

/// Smallest nonzero and largest squared singular value of Phi W^{1/2}.
inline FrameBounds fiber_frame_bounds(const FiberSystem& s, double svd_cutoff = 1e-9) {
    const RangeBasis r = range_basis(s, svd_cutoff);
    if (r.rank == 0) throw Error(ErrorCode::undefined_bounds, "frame bounds of a zero system are undefined");
    const double top = r.singular_values(0);
    const double low = r.singular_values(r.rank - 1);
    return {low * low, top * top};
}

/// value(i) = <f, x_i>.
inline Eigen::VectorXcd fiber_coefficients(const Eigen::VectorXcd& f, const FiberSystem& s) {
    if (f.size() != s.dimension())
        throw Error(ErrorCode::dimension_mismatch, "coefficient vector and system have different dimensions");
    return s.vectors.adjoint() * f;
}

inline Eigen::VectorXcd fiber_coefficients(const FiberElement& f, const FiberFamily& family,
                                           const GridPolicy& policy = {}) {
    if (f.truncation() != family.M || f.alpha() != family.alpha)
        throw Error(ErrorCode::truncation_mismatch, "fibre element and family use different alpha or truncation");
    Eigen::VectorXcd c(static_cast<Eigen::Index>(family.size()));
    for (std::size_t i = 0; i < family.size(); ++i)
        c(static_cast<Eigen::Index>(i)) = fiber_inner(f, family.element(i), policy);
    return c;
}

struct DualCheck {
    bool alternate = false;
    bool oblique = false;
    double residual = 0.0;          // max_j ||Phi W Psi^* q_j - q_j||, q_j ON basis of J
    double oblique_residual = 0.0;  // roles swapped
    Eigen::Index rank = 0;
    Eigen::Index rank_prime = 0;
    double tolerance = 1e-6;
};

namespace detail {

inline void require_matching(const FiberSystem& a, const FiberSystem& b) {
    if (a.size() != b.size() || a.weights != b.weights)
        throw Error(ErrorCode::index_mismatch, "dual systems need identical index sets and weights");
    if (a.dimension() != b.dimension())
        throw Error(ErrorCode::dimension_mismatch, "dual systems live in different fibre dimensions");
    for (std::size_t i = 0; i < a.labels.size() && i < b.labels.size(); ++i) {
        const auto& la = a.labels[i];
        const auto& lb = b.labels[i];
        if (la.generator != lb.generator || la.lambda.x != lb.lambda.x || la.lambda.y != lb.lambda.y
            || la.lambda.z != lb.lambda.z)
            throw Error(ErrorCode::index_mismatch, "dual systems are indexed differently");
    }
}

inline Eigen::VectorXd weight_vector(const FiberSystem& s) {
    return Eigen::Map<const Eigen::VectorXd>(s.weights.data(), static_cast<Eigen::Index>(s.weights.size()));
}

inline double reproduction_residual(const FiberSystem& syn, const FiberSystem& ana, const RangeBasis& J) {
    double worst = 0.0;
    if (J.rank == 0) return 0.0;
    const Eigen::MatrixXcd S = syn.vectors * weight_vector(syn).asDiagonal() * ana.vectors.adjoint();
    const Eigen::MatrixXcd R = S * J.basis - J.basis;
    for (Eigen::Index j = 0; j < R.cols(); ++j) worst = std::max(worst, R.col(j).norm());
    return worst;
}

}  // namespace detail

/// Alternate duality on J(alpha): h = sum_i w_i <h, psi_i> phi_i for every h
/// in J; the oblique check swaps the roles on J'(alpha).
inline DualCheck check_fiber_dual(const FiberSystem& a, const FiberSystem& a_prime, double tol = 1e-6,
                                  double svd_cutoff = 1e-9) {
    detail::require_matching(a, a_prime);
    const RangeBasis J = range_basis(a, svd_cutoff);
    const RangeBasis Jp = range_basis(a_prime, svd_cutoff);
    DualCheck d;
    d.tolerance = tol;
    d.rank = J.rank;
    d.rank_prime = Jp.rank;
    d.residual = detail::reproduction_residual(a, a_prime, J);
    d.oblique_residual = detail::reproduction_residual(a_prime, a, Jp);
    d.alternate = d.residual <= tol;
    d.oblique = d.alternate && d.oblique_residual <= tol;
    return d;
}

struct DualReport {
    double alpha = 0.0;
    DualCheck dual;
    bool classified = false;  // types are only defined for alternate duals
    bool type_I = false;
    bool type_II = false;
    double type_I_residual = 0.0;   // max_i ||(I - QQ^*) psi_i||
    double type_II_residual = 0.0;  // max_j distance of Psi^* q_j from range(Phi^* Q)
    Eigen::Index analysis_rank = 0;
    Eigen::Index stacked_rank = 0;
};

namespace detail {

inline Eigen::Index numerical_rank(const Eigen::MatrixXcd& M, double svd_cutoff) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(0) > 0.0 && s(i) > svd_cutoff * s(0)) ++r;
    return r;
}

}  // namespace detail

/// Dual check plus type flags; never throws on a failed prerequisite.
inline DualReport evaluate_dual(const FiberSystem& a, const FiberSystem& a_prime, double tol = 1e-6,
                                double svd_cutoff = 1e-9) {
    DualReport r;
    r.alpha = a.alpha;
    r.dual = check_fiber_dual(a, a_prime, tol, svd_cutoff);
    if (!r.dual.alternate) return r;
    r.classified = true;
    const RangeBasis J = range_basis(a, svd_cutoff);
    const Eigen::MatrixXcd& Q = J.basis;
    const Eigen::MatrixXcd outside = a_prime.vectors - Q * (Q.adjoint() * a_prime.vectors);
    for (Eigen::Index i = 0; i < outside.cols(); ++i) r.type_I_residual = std::max(r.type_I_residual, outside.col(i).norm());
    r.type_I = r.type_I_residual <= tol;

    const Eigen::MatrixXcd PA = a.vectors.adjoint() * Q;
    const Eigen::MatrixXcd PB = a_prime.vectors.adjoint() * Q;
    Eigen::MatrixXcd stacked(PA.rows(), PA.cols() + PB.cols());
    stacked << PA, PB;
    r.analysis_rank = detail::numerical_rank(PA, svd_cutoff);
    r.stacked_rank = detail::numerical_rank(stacked, svd_cutoff);
    r.type_II = r.analysis_rank == r.stacked_rank;
    if (PA.size() > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(PA, Eigen::ComputeThinU);
        const Eigen::MatrixXcd U = svd.matrixU().leftCols(r.analysis_rank);
        const Eigen::MatrixXcd rest = PB - U * (U.adjoint() * PB);
        for (Eigen::Index j = 0; j < rest.cols(); ++j) r.type_II_residual = std::max(r.type_II_residual, rest.col(j).norm());
    }
    return r;
}

/// Type-I: every psi_i lies in J(alpha). Type-II: the analysis range of the
/// dual on J(alpha) lies in that of the system (rank of the stacked
/// coefficient matrices). Requires an alternate dual.
inline DualReport classify_dual_type(const FiberSystem& a, const FiberSystem& a_prime, double tol = 1e-6,
                                     double svd_cutoff = 1e-9) {
    DualReport r = evaluate_dual(a, a_prime, tol, svd_cutoff);
    if (!r.classified)
        throw Error(ErrorCode::prerequisite_failure,
                    "not an alternate dual (residual " + std::to_string(r.dual.residual) + ")");
    return r;
}

}  // namespace hrf
