#pragma once

// Hilbert-Schmidt operators on the window space, operator fields
// sigma -> H(sigma) and their fiberization over the torus.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hrf/error.hpp"
#include "hrf/grid.hpp"
#include "hrf/heisenberg.hpp"

namespace hrf {

/// coeff * (left (x) right), acting as h -> coeff <h, right> left.
struct RankOneTerm {
    cplx coeff;
    SampledWindow left;
    SampledWindow right;
};

/// A Hilbert-Schmidt operator kept as a finite sum of rank-one terms. Dense
/// matrices on a window grid are stored column by column against the
/// orthonormal cell basis e_k = chi_k / sqrt(dx).
class HsOperator {
public:
    HsOperator() = default;

    static HsOperator rank_one(cplx coeff, SampledWindow left, SampledWindow right) {
        HsOperator op;
        if (coeff != cplx{}) op.terms_.push_back({coeff, std::move(left), std::move(right)});
        return op;
    }

    /// Operator whose matrix in the cell basis of the grid (x0, dx, n) is A.
    static HsOperator from_dense(const Eigen::MatrixXcd& A, double x0, double dx) {
        if (A.rows() != A.cols())
            throw Error(ErrorCode::dimension_mismatch, "dense operator must be square");
        const auto n = static_cast<std::size_t>(A.rows());
        const double inv_sqrt_dx = 1.0 / std::sqrt(dx);
        HsOperator op;
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<cplx> col(n), unit(n, cplx{});
            bool nonzero = false;
            for (std::size_t j = 0; j < n; ++j) {
                col[j] = A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * inv_sqrt_dx;
                nonzero = nonzero || col[j] != cplx{};
            }
            if (!nonzero) continue;
            unit[k] = inv_sqrt_dx;
            op.terms_.push_back({1.0, SampledWindow(std::move(col), x0, dx), SampledWindow(std::move(unit), x0, dx)});
        }
        return op;
    }

    const std::vector<RankOneTerm>& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }

    HsOperator scaled(cplx factor) const {
        if (factor == cplx{}) return {};
        HsOperator op(*this);
        for (auto& t : op.terms_) t.coeff *= factor;
        return op;
    }

    friend HsOperator operator+(HsOperator a, const HsOperator& b) {
        a.terms_.insert(a.terms_.end(), b.terms_.begin(), b.terms_.end());
        return a;
    }

    /// pi_sigma(g) o A.
    HsOperator represented(double sigma, const GroupElement& g) const {
        HsOperator op;
        op.terms_.reserve(terms_.size());
        for (const auto& t : terms_) op.terms_.push_back({t.coeff, schrodinger_apply(sigma, g, t.left), t.right});
        return op;
    }

    /// Matrix in the cell basis of the grid (x0, dx, n). Every factor must live
    /// on that grid without carrier.
    Eigen::MatrixXcd to_dense(double x0, double dx, std::size_t n) const {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const SampledWindow grid = SampledWindow::zeros(n, x0, dx);
        for (const auto& t : terms_) {
            if (!t.left.same_grid(grid) || !t.right.same_grid(grid) || t.left.carrier() != 0.0
                || t.right.carrier() != 0.0)
                throw Error(ErrorCode::dimension_mismatch, "operator factor does not live on the requested grid");
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) +=
                        t.coeff * dx * t.left.samples()[j] * std::conj(t.right.samples()[k]);
        }
        return A;
    }

private:
    std::vector<RankOneTerm> terms_;
};

/// tr(B^* A). Rank-one pairs reduce to c conj(c') <u, w> conj(<u', w'>).
inline cplx hs_inner(const HsOperator& A, const HsOperator& B, const GridPolicy& policy = {}) {
    cplx acc{};
    for (const auto& s : A.terms())
        for (const auto& t : B.terms())
            acc += s.coeff * std::conj(t.coeff) * inner_product(s.left, t.left, policy)
                   * std::conj(inner_product(s.right, t.right, policy));
    return acc;
}

inline cplx hs_inner_dense(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw Error(ErrorCode::dimension_mismatch, "HS inner product of matrices with different shapes");
    return (A.array() * B.conjugate().array()).sum();
}

inline double hs_norm_squared(const HsOperator& A, const GridPolicy& policy = {}) {
    return hs_inner(A, A, policy).real();
}

/// |sigma|^d, the Plancherel density of the d-dimensional Heisenberg group.
inline double pfaffian_weight(double sigma, int d = 1) { return std::pow(std::abs(sigma), d); }

/// Per-sigma scalar c |sigma|^p. Covers the constant (p = 0) and power (c = 1)
/// scale expressions.
struct ScaleExpr {
    double c = 1.0;
    double p = 0.0;

    double operator()(double sigma) const { return p == 0.0 ? c : c * std::pow(std::abs(sigma), p); }
    bool is_identity() const { return c == 1.0 && p == 0.0; }
};

/// Half-open interval (lo, hi].
struct SigmaInterval {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(double s) const { return s > lo && s <= hi; }
};

/// sigma -> scale(sigma) * (left_sigma (x) right_sigma) on the support, 0 elsewhere.
struct RankOneFieldTerm {
    SampledWindow left;
    SampledWindow right;
    SigmaInterval support;
    ScaleExpr scale;
};

/// sigma -> scale(sigma) * A on the support, with A a matrix in the cell basis
/// of the grid (x0, dx, A.rows()).
struct DenseFieldPiece {
    SigmaInterval support;
    Eigen::MatrixXcd matrix;
    ScaleExpr scale;
};

class OperatorField {
public:
    enum class Kind { rank_one, dense, mixed, zero };

    OperatorField() = default;

    static OperatorField zero() { return {}; }

    static OperatorField rank_one(SampledWindow left, SampledWindow right, SigmaInterval support,
                                  ScaleExpr scale = {}) {
        if (!(support.hi > support.lo))
            throw Error(ErrorCode::parameter, "field support must satisfy lo < hi");
        OperatorField f;
        f.rank_one_.push_back({std::move(left), std::move(right), support, scale});
        return f;
    }

    static OperatorField dense(double x0, double dx, std::vector<DenseFieldPiece> pieces) {
        if (!(dx > 0.0)) throw Error(ErrorCode::parameter, "dense field grid spacing must be > 0");
        OperatorField f;
        f.grid_ = std::make_pair(x0, dx);
        for (auto& p : pieces) {
            if (p.matrix.rows() != p.matrix.cols() || p.matrix.rows() < 2)
                throw Error(ErrorCode::dimension_mismatch, "dense field pieces must be square with size >= 2");
            if (!(p.support.hi > p.support.lo))
                throw Error(ErrorCode::parameter, "field support must satisfy lo < hi");
            f.dense_.push_back(std::move(p));
        }
        return f;
    }

    Kind kind() const {
        if (rank_one_.empty() && dense_.empty()) return Kind::zero;
        if (dense_.empty()) return Kind::rank_one;
        return rank_one_.empty() ? Kind::dense : Kind::mixed;
    }

    const std::vector<RankOneFieldTerm>& rank_one_terms() const noexcept { return rank_one_; }
    const std::vector<DenseFieldPiece>& dense_pieces() const noexcept { return dense_; }

    /// H(sigma).
    HsOperator at(double sigma) const {
        HsOperator op;
        if (sigma == 0.0) return op;
        for (const auto& t : rank_one_) {
            if (!t.support.contains(sigma)) continue;
            op = op + HsOperator::rank_one(t.scale(sigma), dilate(t.left, sigma), dilate(t.right, sigma));
        }
        for (const auto& p : dense_) {
            if (!p.support.contains(sigma)) continue;
            op = op + HsOperator::from_dense(p.matrix, grid_->first, grid_->second).scaled(p.scale(sigma));
        }
        return op;
    }

    OperatorField scaled(cplx factor) const {
        OperatorField f(*this);
        for (auto& t : f.rank_one_) t.left = t.left.scaled(factor);
        for (auto& p : f.dense_) p.matrix *= factor;
        return f;
    }

    friend OperatorField operator+(OperatorField a, const OperatorField& b) {
        if (!b.dense_.empty()) {
            if (a.grid_ && b.grid_ && *a.grid_ != *b.grid_)
                throw Error(ErrorCode::grid_mismatch, "dense fields on different grids cannot be added");
            a.grid_ = b.grid_;
        }
        a.rank_one_.insert(a.rank_one_.end(), b.rank_one_.begin(), b.rank_one_.end());
        a.dense_.insert(a.dense_.end(), b.dense_.begin(), b.dense_.end());
        return a;
    }

private:
    std::vector<RankOneFieldTerm> rank_one_;
    std::vector<DenseFieldPiece> dense_;
    std::optional<std::pair<double, double>> grid_;
};

/// The field sigma -> scale(sigma) (v_sigma (x) v_sigma) supported on (t, 1].
inline OperatorField build_Ht(const SampledWindow& v, double t, ScaleExpr scale = {}) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::parameter, "t must lie in (0, 1)", "field.t");
    if (v.is_zero()) throw Error(ErrorCode::parameter, "generator window must be nonzero");
    return OperatorField::rank_one(v, v, {t, 1.0}, scale);
}

namespace detail {

// int_lo^hi |s|^q ds.
inline double power_integral(double lo, double hi, double q) {
    if (lo < 0.0 && hi > 0.0) return power_integral(lo, 0.0, q) + power_integral(0.0, hi, q);
    if ((lo == 0.0 || hi == 0.0) && q <= -1.0) return std::numeric_limits<double>::infinity();
    if (q == -1.0) return std::abs(std::log(std::abs(hi)) - std::log(std::abs(lo)));
    auto F = [q](double s) { return std::copysign(std::pow(std::abs(s), q + 1.0) / (q + 1.0), s); };
    return F(hi) - F(lo);
}

}  // namespace detail

/// int ||H(sigma)||_HS^2 |sigma|^d d sigma by quadrature over the support.
inline double field_norm_squared_quadrature(const OperatorField& field, const QuadratureRule& rule = {},
                                            std::size_t n = 4096) {
    double total = 0.0;
    std::vector<SigmaInterval> pieces;
    for (const auto& t : field.rank_one_terms()) pieces.push_back(t.support);
    for (const auto& p : field.dense_pieces()) pieces.push_back(p.support);
    std::vector<double> cuts;
    for (const auto& s : pieces) {
        cuts.push_back(s.lo);
        cuts.push_back(s.hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += rule.integrate(
            [&](double s) { return s == 0.0 ? 0.0 : hs_norm_squared(field.at(s)) * pfaffian_weight(s); },
            cuts[i], cuts[i + 1], n);
    }
    return total;
}

/// Field norm squared. Closed form for a single rank-one term
/// (|c|^2 ||v||^2 ||v'||^2 int |sigma|^{2p+d}), quadrature otherwise.
inline double field_norm_squared(const OperatorField& field, const QuadratureRule& rule = {},
                                 std::size_t n = 4096) {
    if (field.kind() == OperatorField::Kind::zero) return 0.0;
    if (field.kind() == OperatorField::Kind::rank_one && field.rank_one_terms().size() == 1) {
        const auto& t = field.rank_one_terms().front();
        return t.scale.c * t.scale.c * t.left.norm_squared() * t.right.norm_squared()
               * detail::power_integral(t.support.lo, t.support.hi, 2.0 * t.scale.p + 1.0);
    }
    return field_norm_squared_quadrature(field, rule, n);
}

/// Value of the periodized field at alpha: entry(m) = H(alpha + m) |alpha + m|^{d/2}
/// for m = -M..M.
class FiberElement {
public:
    FiberElement(double alpha, int M, std::vector<HsOperator> entries)
        : alpha_(alpha), M_(M), entries_(std::move(entries)) {
        if (M_ < 0 || entries_.size() != static_cast<std::size_t>(2 * M_ + 1))
            throw Error(ErrorCode::truncation_mismatch, "fiber element needs 2M+1 entries");
    }

    static FiberElement zero(double alpha, int M) {
        return FiberElement(alpha, M, std::vector<HsOperator>(static_cast<std::size_t>(2 * M + 1)));
    }

    double alpha() const noexcept { return alpha_; }
    int truncation() const noexcept { return M_; }
    const HsOperator& entry(int m) const { return entries_.at(static_cast<std::size_t>(m + M_)); }
    const std::vector<HsOperator>& entries() const noexcept { return entries_; }

    bool is_zero() const {
        return std::all_of(entries_.begin(), entries_.end(), [](const HsOperator& e) { return e.is_zero(); });
    }

    /// pi~_alpha(g): entry(m) -> pi_{alpha+m}(g) o entry(m).
    FiberElement translated(const GroupElement& g) const {
        std::vector<HsOperator> out(entries_.size());
        for (int m = -M_; m <= M_; ++m) {
            const double sigma = alpha_ + m;
            const auto& e = entry(m);
            if (!e.is_zero()) out[static_cast<std::size_t>(m + M_)] = e.represented(sigma, g);
        }
        return FiberElement(alpha_, M_, std::move(out));
    }

    FiberElement scaled(cplx c) const {
        std::vector<HsOperator> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.scaled(c));
        return FiberElement(alpha_, M_, std::move(out));
    }

    friend FiberElement operator+(const FiberElement& a, const FiberElement& b) {
        a.require_compatible(b);
        std::vector<HsOperator> out;
        out.reserve(a.entries_.size());
        for (std::size_t i = 0; i < a.entries_.size(); ++i) out.push_back(a.entries_[i] + b.entries_[i]);
        return FiberElement(a.alpha_, a.M_, std::move(out));
    }

    void require_compatible(const FiberElement& other) const {
        if (M_ != other.M_ || alpha_ != other.alpha_)
            throw Error(ErrorCode::truncation_mismatch, "fiber elements have different alpha or truncation");
    }

private:
    double alpha_;
    int M_;
    std::vector<HsOperator> entries_;
};

/// sum_m <F(m), G(m)>_HS.
inline cplx fiber_inner(const FiberElement& F, const FiberElement& G, const GridPolicy& policy = {}) {
    F.require_compatible(G);
    cplx acc{};
    for (std::size_t i = 0; i < F.entries().size(); ++i) acc += hs_inner(F.entries()[i], G.entries()[i], policy);
    return acc;
}

inline FiberElement fiberize(const OperatorField& field, double alpha, int M = 1, int d = 1) {
    if (M < 0) throw Error(ErrorCode::parameter, "truncation M must be >= 0");
    std::vector<HsOperator> entries(static_cast<std::size_t>(2 * M + 1));
    for (int m = -M; m <= M; ++m) {
        const double sigma = alpha + m;
        if (sigma == 0.0) continue;
        HsOperator op = field.at(sigma);
        if (!op.is_zero()) entries[static_cast<std::size_t>(m + M)] = op.scaled(std::sqrt(pfaffian_weight(sigma, d)));
    }
    return FiberElement(alpha, M, std::move(entries));
}

}  // namespace hrf
