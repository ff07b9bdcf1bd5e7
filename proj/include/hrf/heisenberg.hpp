#pragma once

// Schrodinger representation of the Heisenberg group on L^2(R), dilations and
// the Gabor inner products built from them.

#include <cmath>
#include <utility>
#include <vector>

#include "hrf/error.hpp"
#include "hrf/grid.hpp"

namespace hrf {

/// Point (x, y, z) of the Heisenberg group, d = 1.
///
/// Product: (x, y, z)(x', y', z') = (x + x', y + y', z + z' + x y'), the law
/// under which pi_sigma below is a homomorphism.
struct GroupElement {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend GroupElement operator*(const GroupElement& g, const GroupElement& h) {
        return {g.x + h.x, g.y + h.y, g.z + h.z + g.x * h.y};
    }

    GroupElement inverse() const { return {-x, -y, -z + x * y}; }

    bool is_identity() const { return x == 0.0 && y == 0.0 && z == 0.0; }

    /// Lattice point (m a, n b, 0) of Lambda_1.
    static GroupElement lattice(int m, int n, const LatticeSpec& lattice) {
        return {m * lattice.a, n * lattice.b, 0.0};
    }
};

inline void require_frequency(double sigma) {
    if (sigma == 0.0 || !std::isfinite(sigma))
        throw Error(ErrorCode::invalid_frequency, "sigma must be a finite nonzero real");
}

/// pi_sigma(x, y, z) f (x') = e^{2 pi i sigma z} e^{-2 pi i sigma y x'} f(x' - x).
/// Exact on the cell model: the grid moves by x, the carrier absorbs the
/// modulation and the remaining constant phase multiplies the samples.
inline SampledWindow schrodinger_apply(double sigma, const GroupElement& g, const SampledWindow& f) {
    require_frequency(sigma);
    const cplx phase = expi(two_pi * (sigma * g.z + f.carrier() * g.x));
    std::vector<cplx> s(f.samples().begin(), f.samples().end());
    if (phase != cplx{1.0, 0.0})
        for (cplx& c : s) c *= phase;
    return SampledWindow(std::move(s), f.x0() + g.x, f.dx(), f.carrier() + sigma * g.y, f.dimension());
}

/// v_y(x) = |y|^{1/2} v(y x).
inline SampledWindow dilate(const SampledWindow& v, double y) {
    if (y == 0.0 || !std::isfinite(y))
        throw Error(ErrorCode::invalid_dilation, "dilation parameter must be a finite nonzero real");
    if (y == 1.0) return v;
    const double amp = std::sqrt(std::abs(y));
    const std::size_t n = v.size();
    std::vector<cplx> s(n);
    const auto src = v.samples();
    if (y > 0.0) {
        for (std::size_t j = 0; j < n; ++j) s[j] = src[j] * amp;
        return SampledWindow(std::move(s), v.x0() / y, v.dx() / y, v.carrier() * y, v.dimension());
    }
    for (std::size_t j = 0; j < n; ++j) s[j] = src[n - 1 - j] * amp;
    return SampledWindow(std::move(s), v.support_end() / y, v.dx() / -y, v.carrier() * y, v.dimension());
}

/// <pi_sigma(g) v_sigma, w_sigma> through the ambiguity function:
/// e^{2 pi i sigma z} A(sigma x, y).
inline cplx gabor_inner(const SampledWindow& v, const SampledWindow& w, double sigma, const GroupElement& g,
                        const GridPolicy& policy = {}) {
    require_frequency(sigma);
    const cplx a = ambiguity(v, w, sigma * g.x, g.y, policy);
    return g.z == 0.0 ? a : a * expi(two_pi * sigma * g.z);
}

/// Same value computed by dilating, applying the representation and
/// integrating. Slower; kept as the reference route.
inline cplx gabor_inner_direct(const SampledWindow& v, const SampledWindow& w, double sigma,
                               const GroupElement& g, const GridPolicy& policy = {}) {
    require_frequency(sigma);
    return inner_product(schrodinger_apply(sigma, g, dilate(v, sigma)), dilate(w, sigma), policy);
}

/// <v_alpha, w_alpha>, which equals <v, w> for every alpha != 0.
inline cplx dilation_invariant_inner(const SampledWindow& v, const SampledWindow& w, double alpha,
                                     const GridPolicy& policy = {}) {
    return inner_product(dilate(v, alpha), dilate(w, alpha), policy);
}

}  // namespace hrf
