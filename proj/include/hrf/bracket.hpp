#pragma once

// Bracket map [phi, psi](alpha) and the checks built on it: Omega sets,
// orthogonality, biorthogonality, reproducing formulas, Bessel bounds and
// the Parseval splitting of finitely generated spaces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hrf/error.hpp"
#include "hrf/grid.hpp"
#include "hrf/heisenberg.hpp"
#include "hrf/operator_field.hpp"
#include "hrf/parallel.hpp"

namespace hrf {

enum class Route { fast, direct };

struct BracketOptions {
    int M = 1;
    int jobs = 1;
    Route route = Route::fast;
    GridPolicy policy{};
};

struct TorusFunction {
    TorusGrid grid;
    std::vector<cplx> values;

    double max_abs() const {
        double m = 0.0;
        for (const cplx& v : values) m = std::max(m, std::abs(v));
        return m;
    }

    /// Grid-weighted integral over the torus, summed pairwise.
    cplx integral() const { return pairwise_sum(values) * grid.weight(); }
};

/// Evaluates [L_g phi, psi](alpha) = sum_m <pi_{alpha+m}(g) F phi(alpha+m), F psi(alpha+m)> |alpha+m|^d.
class PairingKernel {
public:
    PairingKernel(const OperatorField& phi, const OperatorField& psi, BracketOptions options = {})
        : phi_(phi), psi_(psi), opt_(options) {
        if (opt_.M < 0) throw Error(ErrorCode::parameter, "truncation M must be >= 0");
        const auto& a = phi_.rank_one_terms();
        const auto& b = psi_.rank_one_terms();
        right_.resize(a.size() * b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                right_[i * b.size() + j] = std::conj(inner_product(a[i].right, b[j].right, opt_.policy));
    }

    const BracketOptions& options() const noexcept { return opt_; }

    cplx operator()(double alpha, const GroupElement& g = {}) const {
        if (opt_.route == Route::direct) {
            return fiber_inner(fiberize(phi_, alpha, opt_.M).translated(g), fiberize(psi_, alpha, opt_.M),
                               opt_.policy);
        }
        cplx acc{};
        for (int m = -opt_.M; m <= opt_.M; ++m) {
            const double sigma = alpha + m;
            if (sigma == 0.0) continue;
            const cplx v = fiber_term(sigma, g);
            if (v != cplx{}) acc += v * pfaffian_weight(sigma);
        }
        return acc;
    }

private:
    cplx fiber_term(double sigma, const GroupElement& g) const {
        const auto& a = phi_.rank_one_terms();
        const auto& b = psi_.rank_one_terms();
        cplx acc{};
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].support.contains(sigma)) continue;
            const double ci = a[i].scale(sigma);
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (!b[j].support.contains(sigma)) continue;
                const cplx r = right_[i * b.size() + j];
                if (r == cplx{}) continue;
                acc += ci * b[j].scale(sigma) * gabor_inner(a[i].left, b[j].left, sigma, g, opt_.policy) * r;
            }
        }
        if (!phi_.dense_pieces().empty() || !psi_.dense_pieces().empty()) {
            // Pairs involving dense pieces go through explicit operators.
            const HsOperator full_phi = phi_.at(sigma);
            const HsOperator full_psi = psi_.at(sigma);
            const OperatorField phi_r = rank_one_part(phi_);
            const OperatorField psi_r = rank_one_part(psi_);
            const HsOperator rphi = phi_r.at(sigma).represented(sigma, g);
            const HsOperator rpsi = psi_r.at(sigma);
            acc += hs_inner(full_phi.represented(sigma, g), full_psi, opt_.policy) - hs_inner(rphi, rpsi, opt_.policy);
        }
        return acc;
    }

    static OperatorField rank_one_part(const OperatorField& f) {
        OperatorField out;
        for (const auto& t : f.rank_one_terms()) out = out + OperatorField::rank_one(t.left, t.right, t.support, t.scale);
        return out;
    }

    const OperatorField& phi_;
    const OperatorField& psi_;
    BracketOptions opt_;
    std::vector<cplx> right_;
};

/// [phi, psi] on every grid point.
inline TorusFunction bracket(const OperatorField& phi, const OperatorField& psi, const TorusGrid& grid,
                             const BracketOptions& options = {}) {
    const PairingKernel K(phi, psi, options);
    std::vector<cplx> values(grid.size());
    parallel_for(grid.size(), options.jobs, [&](std::size_t j) { values[j] = K(grid[j]); });
    return {grid, std::move(values)};
}

/// [L_lambda phi, psi] on every grid point.
inline TorusFunction translated_bracket(const OperatorField& phi, const OperatorField& psi,
                                        const GroupElement& lambda, const TorusGrid& grid,
                                        const BracketOptions& options = {}) {
    const PairingKernel K(phi, psi, options);
    std::vector<cplx> values(grid.size());
    parallel_for(grid.size(), options.jobs, [&](std::size_t j) { values[j] = K(grid[j], lambda); });
    return {grid, std::move(values)};
}

/// Pairings at one alpha for every lattice difference within `radius`:
/// T(i, j) = [L_{(i a, j b, 0)} phi, psi](alpha).
class LatticePairings {
public:
    LatticePairings(const PairingKernel& K, double alpha, const LatticeSpec& lattice, int radius)
        : alpha_(alpha), lattice_(lattice), radius_(radius), side_(2 * radius + 1),
          values_(static_cast<std::size_t>(side_ * side_)) {
        for (int i = -radius; i <= radius; ++i)
            for (int j = -radius; j <= radius; ++j)
                values_[index(i, j)] = K(alpha, GroupElement::lattice(i, j, lattice));
    }

    int radius() const noexcept { return radius_; }

    cplx delta(int i, int j) const { return values_.at(index(i, j)); }

    /// [L_mu phi, L_lambda psi](alpha) for lattice points mu = (mi a, mj b),
    /// lambda = (li a, lj b): the central part of lambda^{-1} mu is an
    /// integer multiple of a b, so only e^{2 pi i alpha z} survives the m-sum.
    cplx between(int mi, int mj, int li, int lj) const {
        const cplx t = delta(mi - li, mj - lj);
        const long z = lattice_.ab() * static_cast<long>(li) * static_cast<long>(lj - mj);
        return z == 0 ? t : t * expi(two_pi * alpha_ * static_cast<double>(z));
    }

private:
    std::size_t index(int i, int j) const {
        if (std::abs(i) > radius_ || std::abs(j) > radius_)
            throw Error(ErrorCode::parameter, "lattice difference outside the cached radius");
        return static_cast<std::size_t>((i + radius_) * side_ + (j + radius_));
    }

    double alpha_;
    LatticeSpec lattice_;
    int radius_;
    int side_;
    std::vector<cplx> values_;
};

// ---------------------------------------------------------------------------
// Omega sets and check reports

struct OmegaSet {
    std::vector<bool> mask;
    double threshold = 0.0;
    TorusFunction self;

    std::size_t count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)); }
};

/// Omega_phi = {alpha : [phi, phi](alpha) > epsilon}. Without an explicit
/// epsilon the threshold is omega_rel times the largest self-bracket.
inline OmegaSet omega_set(const OperatorField& phi, const TorusGrid& grid, std::optional<double> epsilon = {},
                          const BracketOptions& options = {}, double omega_rel = 1e-10) {
    if (epsilon && *epsilon < 0.0) throw Error(ErrorCode::parameter, "epsilon must be >= 0");
    OmegaSet out{{}, 0.0, bracket(phi, phi, grid, options)};
    double peak = 0.0;
    for (const cplx& v : out.self.values) peak = std::max(peak, v.real());
    out.threshold = epsilon ? *epsilon : omega_rel * peak;
    out.mask.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) out.mask[j] = out.self.values[j].real() > out.threshold;
    return out;
}

enum class CheckStatus { pass, fail, hypothesis_failure };

inline std::string_view to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::hypothesis_failure: return "hypothesis-failure";
    }
    return "fail";
}

/// Exit status convention of the command-line front end.
inline int exit_code(CheckStatus s) {
    return s == CheckStatus::pass ? 0 : s == CheckStatus::fail ? 1 : 2;
}

struct Witness {
    double alpha = std::numeric_limits<double>::quiet_NaN();
    bool has_lattice = false;
    int m = 0;
    int n = 0;
    cplx value{};
};

struct CheckReport {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    bool verdict = true;
    double max_violation = 0.0;
    Witness worst;
    double tolerance = 1e-6;
    double truncation_residual = 0.0;
    std::vector<std::pair<std::string, double>> diagnostics;
    std::string message;

    void finish() {
        verdict = max_violation <= tolerance;
        if (status != CheckStatus::hypothesis_failure) status = verdict ? CheckStatus::pass : CheckStatus::fail;
    }
};

struct CheckOptions {
    double tol = 1e-6;
    double omega_rel = 1e-10;
    BracketOptions bracket{};
};

namespace detail {

struct PointMax {
    double value = 0.0;
    Witness witness;
    double shell = 0.0;
};

// First strict maximum in grid order, so the witness does not depend on jobs.
inline void reduce_max(const std::vector<PointMax>& points, CheckReport& report) {
    for (const auto& p : points) {
        if (p.value > report.max_violation || (std::isnan(report.worst.alpha) && p.value == report.max_violation
                                                && !std::isnan(p.witness.alpha))) {
            report.max_violation = p.value;
            report.worst = p.witness;
        }
        report.truncation_residual = std::max(report.truncation_residual, p.shell);
    }
}

inline void require_radius(const LatticeSpec& lattice) {
    lattice.validate();
    if (lattice.k_max < 1) throw Error(ErrorCode::parameter, "k_max must be >= 1", "lattice.k_max");
}

}  // namespace detail

/// O_phi: max over lambda != 0 (|m|, |n| <= k_max) and alpha in Omega_phi of
/// |[L_lambda phi, phi](alpha)|. The truncation residual is the same maximum
/// over the next shell.
inline CheckReport check_orthogonality(const OperatorField& phi, const LatticeSpec& lattice, const TorusGrid& grid,
                                       const CheckOptions& options = {}) {
    detail::require_radius(lattice);
    const OmegaSet omega = omega_set(phi, grid, {}, options.bracket, options.omega_rel);
    const PairingKernel K(phi, phi, options.bracket);
    const int k = lattice.k_max;
    std::vector<detail::PointMax> points(grid.size());
    parallel_for(grid.size(), options.bracket.jobs, [&](std::size_t a) {
        if (!omega.mask[a]) return;
        const double alpha = grid[a];
        auto& out = points[a];
        for (int m = -k - 1; m <= k + 1; ++m) {
            for (int n = -k - 1; n <= k + 1; ++n) {
                if (m == 0 && n == 0) continue;
                const cplx v = K(alpha, GroupElement::lattice(m, n, lattice));
                const double mag = std::abs(v);
                if (std::max(std::abs(m), std::abs(n)) > k) {
                    out.shell = std::max(out.shell, mag);
                } else if (mag > out.value || std::isnan(out.witness.alpha)) {
                    out.value = std::max(out.value, mag);
                    if (mag >= out.value) out.witness = {alpha, true, m, n, v};
                }
            }
        }
    });
    CheckReport r;
    r.name = "orthogonality";
    r.tolerance = options.tol;
    detail::reduce_max(points, r);
    r.diagnostics = {{"omega_threshold", omega.threshold}, {"omega_points", static_cast<double>(omega.count())}};
    r.finish();
    return r;
}

enum class BiorthogonalityDomain { omega, torus };

/// max |[phi, L_lambda psi](alpha) - delta_{lambda,0}| over the lattice box
/// and alpha in Omega_phi (or the whole grid).
inline CheckReport check_biorthogonality(const OperatorField& phi, const OperatorField& psi,
                                         const LatticeSpec& lattice, const TorusGrid& grid,
                                         const CheckOptions& options = {},
                                         BiorthogonalityDomain domain = BiorthogonalityDomain::omega) {
    detail::require_radius(lattice);
    const OmegaSet omega = omega_set(phi, grid, {}, options.bracket, options.omega_rel);
    const PairingKernel K(psi, phi, options.bracket);
    const int k = lattice.k_max;
    std::vector<detail::PointMax> points(grid.size());
    parallel_for(grid.size(), options.bracket.jobs, [&](std::size_t a) {
        if (domain == BiorthogonalityDomain::omega && !omega.mask[a]) return;
        const double alpha = grid[a];
        auto& out = points[a];
        bool first = true;
        for (int m = -k - 1; m <= k + 1; ++m) {
            for (int n = -k - 1; n <= k + 1; ++n) {
                const cplx v = std::conj(K(alpha, GroupElement::lattice(m, n, lattice)));
                const double dev = std::abs(v - (m == 0 && n == 0 ? 1.0 : 0.0));
                if (std::max(std::abs(m), std::abs(n)) > k) {
                    out.shell = std::max(out.shell, dev);
                } else if (first || dev > out.value) {
                    first = false;
                    out.value = dev;
                    out.witness = {alpha, true, m, n, v};
                }
            }
        }
    });
    CheckReport r;
    r.name = "biorthogonality";
    r.tolerance = options.tol;
    detail::reduce_max(points, r);
    r.diagnostics = {{"omega_threshold", omega.threshold},
                     {"domain_is_torus", domain == BiorthogonalityDomain::torus ? 1.0 : 0.0}};
    r.finish();
    return r;
}

// ---------------------------------------------------------------------------
// Finite Lambda-combinations f = sum c L_{(lambda_1, k)} phi

struct LatticeCoefficient {
    int i = 0;  // lambda_1 = (i a, j b, 0)
    int j = 0;
    int k = 0;  // central translation k in Lambda_0
    cplx c{};
};

using TestVector = std::vector<LatticeCoefficient>;

/// Seeded test vectors with 1..max_points terms, lattice indices in the box
/// of the given radius and central indices in [-central_range, central_range].
inline std::vector<TestVector> random_test_vectors(std::uint64_t seed, int trials, int radius, int central_range,
                                                   int max_points = 5) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(1, std::max(1, max_points));
    std::uniform_int_distribution<int> lat(-radius, radius);
    std::uniform_int_distribution<int> cen(-central_range, central_range);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<TestVector> out(static_cast<std::size_t>(std::max(trials, 0)));
    for (auto& f : out) {
        const int n = count(rng);
        for (int p = 0; p < n; ++p) {
            LatticeCoefficient c;
            c.i = lat(rng);
            c.j = lat(rng);
            c.k = cen(rng);
            const double re = coef(rng);
            const double im = coef(rng);
            c.c = {re, im};
            f.push_back(c);
        }
    }
    return out;
}

/// Lambda_1 symbol of f at alpha: p(i, j) = sum_k c e^{2 pi i alpha k}, on the
/// box of the given radius (row-major, (i + r)(2r + 1) + j + r).
inline std::vector<cplx> lattice_symbol(const TestVector& f, double alpha, int radius) {
    const int side = 2 * radius + 1;
    std::vector<cplx> p(static_cast<std::size_t>(side * side));
    for (const auto& t : f) {
        if (std::abs(t.i) > radius || std::abs(t.j) > radius)
            throw Error(ErrorCode::parameter, "test vector outside the lattice box");
        p[static_cast<std::size_t>((t.i + radius) * side + (t.j + radius))] +=
            t.c * expi(two_pi * alpha * static_cast<double>(t.k));
    }
    return p;
}

namespace detail {

// sum_{mu, lambda} x_mu conj(y_lambda) [L_mu phi, L_lambda phi'](alpha) over the box.
inline cplx gram_form(const LatticePairings& P, const std::vector<cplx>& x, const std::vector<cplx>& y, int radius) {
    const int side = 2 * radius + 1;
    cplx acc{};
    for (int mi = -radius; mi <= radius; ++mi)
        for (int mj = -radius; mj <= radius; ++mj) {
            const cplx xm = x[static_cast<std::size_t>((mi + radius) * side + (mj + radius))];
            if (xm == cplx{}) continue;
            for (int li = -radius; li <= radius; ++li)
                for (int lj = -radius; lj <= radius; ++lj) {
                    const cplx yl = y[static_cast<std::size_t>((li + radius) * side + (lj + radius))];
                    if (yl == cplx{}) continue;
                    acc += xm * std::conj(yl) * P.between(mi, mj, li, lj);
                }
        }
    return acc;
}

// q(lambda) = [f, L_lambda psi](alpha) = sum_mu p_mu [L_mu phi, L_lambda psi](alpha).
inline std::vector<cplx> analysis(const LatticePairings& P, const std::vector<cplx>& p, int radius) {
    const int side = 2 * radius + 1;
    std::vector<cplx> q(p.size());
    for (int li = -radius; li <= radius; ++li)
        for (int lj = -radius; lj <= radius; ++lj) {
            cplx acc{};
            for (int mi = -radius; mi <= radius; ++mi)
                for (int mj = -radius; mj <= radius; ++mj) {
                    const cplx pm = p[static_cast<std::size_t>((mi + radius) * side + (mj + radius))];
                    if (pm != cplx{}) acc += pm * P.between(mi, mj, li, lj);
                }
            q[static_cast<std::size_t>((li + radius) * side + (lj + radius))] = acc;
        }
    return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reproducing formula

struct ReproducingOptions {
    CheckOptions check{};
    int trials = 20;
    std::uint64_t seed = 1;
    /// Restrict both the test vectors and the expansion to lambda_1 = 0.
    bool lambda0_only = false;
};

/// Per-alpha residuals of the reproducing formula.
struct ReproducingProfile {
    std::vector<double> residual_A;  // |[phi, psi](alpha) - 1|
    std::vector<double> residual_B;  // max over test vectors of ||F f - F g|| / ||F f||
    TorusFunction bracket;
    OmegaSet omega;
};

/// Residual (B) compares F f(alpha) with the fibre of
/// g = sum_lambda <f, L_lambda psi> L_lambda phi, where lambda runs over
/// Lambda_0 x (lattice box) and the Lambda_0 sum is summed in closed form.
inline ReproducingProfile reproducing_profile(const OperatorField& phi, const OperatorField& psi,
                                              const LatticeSpec& lattice, const TorusGrid& grid,
                                              const ReproducingOptions& options) {
    lattice.validate();
    const int radius = options.lambda0_only ? 0 : lattice.k_max;
    const auto vectors = random_test_vectors(options.seed, options.trials, radius, lattice.central_range);
    const BracketOptions& bo = options.check.bracket;
    ReproducingProfile out{std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0),
                           bracket(phi, psi, grid, bo),
                           omega_set(phi, grid, {}, bo, options.check.omega_rel)};
    const PairingKernel Kpp(phi, phi, bo);
    const PairingKernel Kps(phi, psi, bo);
    parallel_for(grid.size(), bo.jobs, [&](std::size_t a) {
        if (!out.omega.mask[a]) return;
        const double alpha = grid[a];
        out.residual_A[a] = std::abs(out.bracket.values[a] - 1.0);
        const LatticePairings Ppp(Kpp, alpha, lattice, 2 * radius);
        const LatticePairings Pps(Kps, alpha, lattice, 2 * radius);
        double worst = 0.0;
        for (const auto& f : vectors) {
            const auto p = lattice_symbol(f, alpha, radius);
            const auto q = detail::analysis(Pps, p, radius);
            std::vector<cplx> d(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) d[i] = p[i] - q[i];
            const double num = detail::gram_form(Ppp, d, d, radius).real();
            const double den = detail::gram_form(Ppp, p, p, radius).real();
            if (den <= 0.0) continue;
            worst = std::max(worst, std::sqrt(std::max(num, 0.0) / den));
        }
        out.residual_B[a] = worst;
    });
    return out;
}

struct ReproducingReport {
    CheckReport report;
    CheckReport hypothesis_phi;
    CheckReport hypothesis_psi;
    double residual_A = 0.0;
    double residual_B = 0.0;
    Witness witness_A;
    Witness witness_B;
    /// (A <= tol) == (B <= 10 tol)
    bool consistent = true;
    /// max over lambda != 0 and Omega_phi of |[phi, L_lambda psi]|.
    double cross_orthogonality = 0.0;
    ReproducingProfile profile;
};

/// Reproducing check: [phi, psi] = 1 on Omega_phi against the fibre-side
/// reproducing residual. Both orthogonality conditions are hypotheses.
inline ReproducingReport check_reproducing(const OperatorField& phi, const OperatorField& psi,
                                           const LatticeSpec& lattice, const TorusGrid& grid,
                                           const ReproducingOptions& options = {}) {
    ReproducingReport out;
    const double tol = options.check.tol;
    out.hypothesis_phi = check_orthogonality(phi, lattice, grid, options.check);
    out.hypothesis_psi = check_orthogonality(psi, lattice, grid, options.check);
    out.profile = reproducing_profile(phi, psi, lattice, grid, options);
    const auto& prof = out.profile;
    for (std::size_t a = 0; a < grid.size(); ++a) {
        if (!prof.omega.mask[a]) continue;
        if (prof.residual_A[a] > out.residual_A || std::isnan(out.witness_A.alpha)) {
            out.residual_A = std::max(out.residual_A, prof.residual_A[a]);
            if (prof.residual_A[a] >= out.residual_A) out.witness_A = {grid[a], false, 0, 0, prof.bracket.values[a]};
        }
        if (prof.residual_B[a] > out.residual_B || std::isnan(out.witness_B.alpha)) {
            out.residual_B = std::max(out.residual_B, prof.residual_B[a]);
            if (prof.residual_B[a] >= out.residual_B) out.witness_B = {grid[a], false, 0, 0, prof.residual_B[a]};
        }
    }
    if (prof.omega.count() == 0) {
        // Omega_phi empty: the bracket vanishes identically.
        out.residual_A = 1.0;
    }
    {
        const PairingKernel K(psi, phi, options.check.bracket);
        const int k = options.lambda0_only ? 0 : lattice.k_max;
        std::vector<double> cross(grid.size(), 0.0);
        parallel_for(grid.size(), options.check.bracket.jobs, [&](std::size_t a) {
            if (!prof.omega.mask[a]) return;
            for (int m = -k; m <= k; ++m)
                for (int n = -k; n <= k; ++n)
                    if (m != 0 || n != 0)
                        cross[a] = std::max(cross[a], std::abs(K(grid[a], GroupElement::lattice(m, n, lattice))));
        });
        for (double c : cross) out.cross_orthogonality = std::max(out.cross_orthogonality, c);
    }
    out.consistent = (out.residual_A <= tol) == (out.residual_B <= 10.0 * tol);

    CheckReport& r = out.report;
    r.name = options.lambda0_only ? "reproducing_lambda0" : "reproducing";
    r.tolerance = tol;
    r.max_violation = std::max(out.residual_A, out.residual_B);
    r.worst = out.residual_A >= out.residual_B ? out.witness_A : out.witness_B;
    r.truncation_residual = std::max(out.hypothesis_phi.truncation_residual, out.hypothesis_psi.truncation_residual);
    r.diagnostics = {{"residual_A", out.residual_A},
                     {"residual_B", out.residual_B},
                     {"consistent", out.consistent ? 1.0 : 0.0},
                     {"cross_orthogonality", out.cross_orthogonality},
                     {"orthogonality_phi", out.hypothesis_phi.max_violation},
                     {"orthogonality_psi", out.hypothesis_psi.max_violation}};
    if (!out.hypothesis_phi.verdict || !out.hypothesis_psi.verdict) {
        r.status = CheckStatus::hypothesis_failure;
        r.message = !out.hypothesis_phi.verdict ? "orthogonality condition fails for phi"
                                                : "orthogonality condition fails for psi";
    }
    r.finish();
    return out;
}

// ---------------------------------------------------------------------------
// Bessel bound and Parseval splitting

/// Largest self-bracket on the grid.
inline double bessel_bound(const OperatorField& phi, const TorusGrid& grid, const BracketOptions& options = {}) {
    const auto self = bracket(phi, phi, grid, options);
    double b = 0.0;
    for (const cplx& v : self.values) b = std::max(b, v.real());
    return b;
}

struct SeededCheckOptions {
    CheckOptions check{};
    int trials = 20;
    std::uint64_t seed = 1;
};

/// sum_lambda |[f, L_lambda phi](alpha)|^2 <= B ||F f(alpha)||^2 (1 + 1e-6) for
/// seeded finite combinations f; the violation is the relative excess.
inline CheckReport check_bessel(const OperatorField& phi, const LatticeSpec& lattice, const TorusGrid& grid,
                                const SeededCheckOptions& options = {}) {
    CheckReport hyp = check_orthogonality(phi, lattice, grid, options.check);
    const auto& bo = options.check.bracket;
    const double B = bessel_bound(phi, grid, bo);
    const int radius = lattice.k_max;
    const auto vectors = random_test_vectors(options.seed, options.trials, radius, lattice.central_range);
    const OmegaSet omega = omega_set(phi, grid, {}, bo, options.check.omega_rel);
    const PairingKernel K(phi, phi, bo);
    std::vector<detail::PointMax> points(grid.size());
    parallel_for(grid.size(), bo.jobs, [&](std::size_t a) {
        if (!omega.mask[a]) return;
        const double alpha = grid[a];
        const LatticePairings P(K, alpha, lattice, 2 * radius);
        for (const auto& f : vectors) {
            const auto p = lattice_symbol(f, alpha, radius);
            const auto q = detail::analysis(P, p, radius);
            double lhs = 0.0;
            for (const cplx& v : q) lhs += std::norm(v);
            const double norm2 = detail::gram_form(P, p, p, radius).real();
            const double bound = B * norm2;
            if (bound <= 0.0) continue;
            const double excess = std::max(0.0, lhs / bound - 1.0);
            if (excess > points[a].value || std::isnan(points[a].witness.alpha)) {
                points[a].value = std::max(points[a].value, excess);
                points[a].witness = {alpha, false, 0, 0, lhs / bound};
            }
        }
    });
    CheckReport r;
    r.name = "bessel";
    r.tolerance = 1e-6;
    detail::reduce_max(points, r);
    r.truncation_residual = hyp.truncation_residual;
    r.diagnostics = {{"bessel_bound", B}, {"orthogonality_phi", hyp.max_violation}};
    if (!hyp.verdict) {
        r.status = CheckStatus::hypothesis_failure;
        r.message = "orthogonality condition fails for phi";
    }
    r.finish();
    return r;
}

/// <f, g> = sum_{lambda_1} <f_{lambda_1}, g_{lambda_1}> for seeded finite
/// combinations f, g: compares the full fibre pairing against its
/// lambda_1-diagonal part, integrated over the torus, relative to ||f|| ||g||.
inline CheckReport decomposition_parseval_check(const OperatorField& phi, const LatticeSpec& lattice,
                                                const TorusGrid& grid, const SeededCheckOptions& options = {}) {
    CheckReport hyp = check_orthogonality(phi, lattice, grid, options.check);
    const auto& bo = options.check.bracket;
    const int radius = lattice.k_max;
    const auto fs = random_test_vectors(options.seed, options.trials, radius, lattice.central_range);
    const auto gs = random_test_vectors(options.seed + 0x9E3779B97F4A7C15ULL, options.trials, radius,
                                        lattice.central_range);
    const std::size_t T = fs.size();
    const PairingKernel K(phi, phi, bo);
    // Per alpha and trial: full pairing, diagonal pairing, ||F f||^2, ||F g||^2.
    std::vector<std::vector<cplx>> full(T, std::vector<cplx>(grid.size()));
    std::vector<std::vector<cplx>> diag(T, std::vector<cplx>(grid.size()));
    std::vector<std::vector<double>> nf(T, std::vector<double>(grid.size()));
    std::vector<std::vector<double>> ng(T, std::vector<double>(grid.size()));
    parallel_for(grid.size(), bo.jobs, [&](std::size_t a) {
        const double alpha = grid[a];
        const LatticePairings P(K, alpha, lattice, 2 * radius);
        const int side = 2 * radius + 1;
        for (std::size_t t = 0; t < T; ++t) {
            const auto p = lattice_symbol(fs[t], alpha, radius);
            const auto q = lattice_symbol(gs[t], alpha, radius);
            full[t][a] = detail::gram_form(P, p, q, radius);
            cplx d{};
            for (int i = -radius; i <= radius; ++i)
                for (int j = -radius; j <= radius; ++j) {
                    const auto idx = static_cast<std::size_t>((i + radius) * side + (j + radius));
                    d += p[idx] * std::conj(q[idx]) * P.between(i, j, i, j);
                }
            diag[t][a] = d;
            nf[t][a] = detail::gram_form(P, p, p, radius).real();
            ng[t][a] = detail::gram_form(P, q, q, radius).real();
        }
    });
    CheckReport r;
    r.name = "parseval";
    r.tolerance = options.check.tol;
    for (std::size_t t = 0; t < T; ++t) {
        const cplx lhs = pairwise_sum(full[t]) * grid.weight();
        const cplx rhs = pairwise_sum(diag[t]) * grid.weight();
        const double scale = std::sqrt(pairwise_sum(nf[t]) * pairwise_sum(ng[t])) * grid.weight();
        const double v = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
        if (v > r.max_violation || std::isnan(r.worst.alpha)) {
            r.max_violation = std::max(r.max_violation, v);
            r.worst = {std::numeric_limits<double>::quiet_NaN(), false, static_cast<int>(t), 0, lhs - rhs};
        }
    }
    r.truncation_residual = hyp.truncation_residual;
    r.diagnostics = {{"orthogonality_phi", hyp.max_violation}};
    if (!hyp.verdict) {
        r.status = CheckStatus::hypothesis_failure;
        r.message = "orthogonality condition fails for phi";
    }
    r.finish();
    return r;
}

// ---------------------------------------------------------------------------
// Gabor application

struct GaborScanRow {
    double t = 0.0;
    double alpha = 0.0;
    bool hypothesis_ok = true;
    double condition_profile = 0.0;  // |alpha^{d/2} <v_alpha, w_alpha>| - 1
    double residual_A = 0.0;
    double residual_B = 0.0;
};

struct GaborScanReport {
    CheckReport report;  // verdict: both sides of the equivalence agree
    std::vector<GaborScanRow> rows;
    bool hypothesis_ok = true;
    double first_hypothesis_failure = std::numeric_limits<double>::quiet_NaN();
    bool condition_holds = true;
    bool reproducing_holds = true;
    double max_condition_deviation = 0.0;
    double residual_A = 0.0;
    double residual_B = 0.0;
};

/// For each grid alpha in (t, 1]: Gabor orthonormality of v and w at alpha,
/// the condition profile and the reproducing residuals of H_t(v), H_t(w).
/// The verdict is the agreement of "condition holds on (t, 1]" with
/// "reproducing formula holds".
inline GaborScanReport gabor_application_scan(const SampledWindow& v, const SampledWindow& w,
                                              const LatticeSpec& lattice, double t, const TorusGrid& grid,
                                              const ReproducingOptions& options = {}) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::parameter, "t must lie in (0, 1)", "field.t");
    lattice.validate();
    const double tol = options.check.tol;
    GaborScanReport out;
    out.report.name = "gabor_scan";
    out.report.tolerance = tol;
    if (std::abs(v.norm() - 1.0) > 1e-6 || std::abs(w.norm() - 1.0) > 1e-6) {
        out.hypothesis_ok = false;
        out.report.status = CheckStatus::hypothesis_failure;
        out.report.message = "windows must have unit norm";
        out.report.verdict = false;
        return out;
    }
    const OperatorField phi = build_Ht(v, t);
    const OperatorField psi = build_Ht(w, t);
    const ReproducingProfile prof = reproducing_profile(phi, psi, lattice, grid, options);
    const cplx vw = inner_product(v, w, options.check.bracket.policy);
    const int k = lattice.k_max;

    std::vector<std::size_t> idx;
    for (std::size_t a = 0; a < grid.size(); ++a)
        if (grid[a] > t) idx.push_back(a);
    out.rows.resize(idx.size());
    parallel_for(idx.size(), options.check.bracket.jobs, [&](std::size_t r) {
        const std::size_t a = idx[r];
        const double alpha = grid[a];
        double worst = 0.0;
        for (int m = -k; m <= k; ++m)
            for (int n = -k; n <= k; ++n) {
                const GroupElement g = GroupElement::lattice(m, n, lattice);
                const double delta = (m == 0 && n == 0) ? 1.0 : 0.0;
                worst = std::max(worst, std::abs(gabor_inner(v, v, alpha, g) - delta));
                worst = std::max(worst, std::abs(gabor_inner(w, w, alpha, g) - delta));
            }
        auto& row = out.rows[r];
        row.t = t;
        row.alpha = alpha;
        row.hypothesis_ok = worst <= tol;
        row.condition_profile = std::abs(std::sqrt(alpha) * vw) - 1.0;
        row.residual_A = prof.residual_A[a];
        row.residual_B = prof.residual_B[a];
        if (!prof.omega.mask[a]) {
            row.residual_A = 1.0;
            row.residual_B = 0.0;
        }
    });

    for (const auto& row : out.rows) {
        if (!row.hypothesis_ok && out.hypothesis_ok) {
            out.hypothesis_ok = false;
            out.first_hypothesis_failure = row.alpha;
        }
        out.max_condition_deviation = std::max(out.max_condition_deviation, std::abs(row.condition_profile));
        out.residual_A = std::max(out.residual_A, row.residual_A);
        out.residual_B = std::max(out.residual_B, row.residual_B);
    }
    out.condition_holds = out.max_condition_deviation <= tol;
    out.reproducing_holds = out.residual_A <= tol && out.residual_B <= tol;

    CheckReport& r = out.report;
    r.diagnostics = {{"condition_holds", out.condition_holds ? 1.0 : 0.0},
                     {"reproducing_holds", out.reproducing_holds ? 1.0 : 0.0},
                     {"max_condition_deviation", out.max_condition_deviation},
                     {"residual_A", out.residual_A},
                     {"residual_B", out.residual_B}};
    r.max_violation = out.condition_holds == out.reproducing_holds ? 0.0 : 1.0;
    if (!out.hypothesis_ok) {
        r.status = CheckStatus::hypothesis_failure;
        r.worst.alpha = out.first_hypothesis_failure;
        r.message = "Gabor family is not orthonormal at some alpha in (t, 1]";
    }
    r.finish();
    return out;
}

}  // namespace hrf
