#pragma once

// Grids, quadrature, lattices and the sampled-window model shared by the
// rest of the library.
//
// A SampledWindow is the piecewise-constant function that takes the value
// samples[j] on the cell [x0 + j*dx, x0 + (j+1)*dx), multiplied by an
// optional carrier exp(-2*pi*i*carrier*x). Every integral in the library is
// evaluated exactly for this model, so shifting, dilating and modulating a
// window never introduces resampling error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iostream>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hrf/error.hpp"

namespace hrf {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// exp(i * phase)
inline cplx expi(double phase) { return {std::cos(phase), std::sin(phase)}; }

/// Normalised sinc, sin(pi x) / (pi x).
inline double sinc(double x) {
    const double px = pi * x;
    if (std::abs(px) < 1e-5) return 1.0 - px * px / 6.0;
    return std::sin(px) / px;
}

// ---------------------------------------------------------------------------
// Quadrature

enum class QuadratureKind { riemann_midpoint, trapezoid };

inline std::string_view to_string(QuadratureKind kind) {
    return kind == QuadratureKind::trapezoid ? "trapezoid" : "riemann-midpoint";
}

inline QuadratureKind parse_quadrature_kind(std::string_view name, const std::string& key = {}) {
    if (name == "riemann-midpoint" || name == "midpoint") return QuadratureKind::riemann_midpoint;
    if (name == "trapezoid") return QuadratureKind::trapezoid;
    throw Error(ErrorCode::config, "unknown quadrature rule '" + std::string(name) + "'", key);
}

struct QuadratureResult {
    double value = 0.0;
    /// |I(n) - I(n/2)|, a Richardson-style error report.
    double error_estimate = 0.0;
};

/// Composite rule on [lo, hi] with n nodes. Weights are applied as
/// (hi - lo) / N * sum, so integrating 1 over [0, 1] is exact for both kinds.
struct QuadratureRule {
    QuadratureKind kind = QuadratureKind::riemann_midpoint;

    std::vector<double> nodes(double lo, double hi, std::size_t n) const {
        check(lo, hi, n);
        std::vector<double> x(n);
        if (kind == QuadratureKind::riemann_midpoint) {
            const double h = (hi - lo) / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) x[j] = lo + (static_cast<double>(j) + 0.5) * h;
        } else {
            const double h = (hi - lo) / static_cast<double>(n - 1);
            for (std::size_t j = 0; j < n; ++j) x[j] = lo + static_cast<double>(j) * h;
            x[n - 1] = hi;
        }
        return x;
    }

    template <class F>
    auto integrate(F&& f, double lo, double hi, std::size_t n) const {
        const auto x = nodes(lo, hi, n);
        using R = decltype(f(0.0));
        R sum{};
        if (kind == QuadratureKind::riemann_midpoint) {
            for (double xi : x) sum += f(xi);
            return sum * ((hi - lo) / static_cast<double>(n));
        }
        for (std::size_t j = 1; j + 1 < n; ++j) sum += f(x[j]);
        sum += (f(x.front()) + f(x.back())) * 0.5;
        return sum * ((hi - lo) / static_cast<double>(n - 1));
    }

    template <class F>
    QuadratureResult integrate_with_estimate(F&& f, double lo, double hi, std::size_t n) const {
        const double fine = integrate(f, lo, hi, n);
        const double coarse = integrate(f, lo, hi, std::max<std::size_t>(n / 2, 2));
        return {fine, std::abs(fine - coarse)};
    }

private:
    void check(double lo, double hi, std::size_t n) const {
        if (!(hi > lo)) throw Error(ErrorCode::parameter, "quadrature interval must satisfy lo < hi");
        if (n < (kind == QuadratureKind::trapezoid ? 2u : 1u))
            throw Error(ErrorCode::parameter, "too few quadrature nodes");
    }
};

// ---------------------------------------------------------------------------
// Sampled windows

/// Grid compatibility policy for inner products between windows whose cell
/// widths differ. Offsets between grids of equal width are always exact.
struct GridPolicy {
    bool allow_mismatch = true;
    bool warn = true;
};

class SampledWindow {
public:
    SampledWindow(std::vector<cplx> samples, double x0, double dx, double carrier = 0.0, int d = 1)
        : samples_(std::move(samples)), x0_(x0), dx_(dx), carrier_(carrier), d_(d) {
        if (d_ != 1)
            throw Error(ErrorCode::unsupported_dimension,
                        "only d = 1 is supported, got d = " + std::to_string(d_));
        if (samples_.size() < 2) throw Error(ErrorCode::parameter, "a window needs at least 2 samples");
        if (!(dx_ > 0.0) || !std::isfinite(dx_)) throw Error(ErrorCode::parameter, "window spacing dx must be > 0");
        if (!std::isfinite(x0_) || !std::isfinite(carrier_))
            throw Error(ErrorCode::parameter, "window origin and carrier must be finite");
        for (const cplx& s : samples_)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                throw Error(ErrorCode::parameter, "window samples must be finite");
    }

    static SampledWindow zeros(std::size_t n, double x0, double dx) {
        return SampledWindow(std::vector<cplx>(n, cplx{}), x0, dx);
    }

    std::span<const cplx> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double x0() const noexcept { return x0_; }
    double dx() const noexcept { return dx_; }
    double carrier() const noexcept { return carrier_; }
    int dimension() const noexcept { return d_; }
    double support_begin() const noexcept { return x0_; }
    double support_end() const noexcept { return x0_ + static_cast<double>(samples_.size()) * dx_; }

    /// Cell centre of sample j.
    double center(std::size_t j) const noexcept { return x0_ + (static_cast<double>(j) + 0.5) * dx_; }

    /// Pointwise value of the modelled function.
    cplx operator()(double x) const {
        const double u = (x - x0_) / dx_;
        if (u < 0.0 || u >= static_cast<double>(samples_.size())) return {};
        const auto j = static_cast<std::size_t>(u);
        return samples_[j] * expi(-two_pi * carrier_ * x);
    }

    double norm_squared() const {
        double s = 0.0;
        for (const cplx& c : samples_) s += std::norm(c);
        return s * dx_;
    }
    double norm() const { return std::sqrt(norm_squared()); }

    bool is_zero() const {
        return std::all_of(samples_.begin(), samples_.end(), [](const cplx& c) { return c == cplx{}; });
    }

    SampledWindow scaled(cplx factor) const {
        std::vector<cplx> s(samples_);
        for (cplx& c : s) c *= factor;
        return SampledWindow(std::move(s), x0_, dx_, carrier_, d_);
    }

    bool same_grid(const SampledWindow& other, double rel = 1e-12) const {
        return samples_.size() == other.samples_.size()
               && std::abs(x0_ - other.x0_) <= rel * std::max(1.0, std::abs(x0_))
               && std::abs(dx_ - other.dx_) <= rel * dx_;
    }

private:
    std::vector<cplx> samples_;
    double x0_;
    double dx_;
    double carrier_;
    int d_;
};

namespace detail {

inline bool same_width(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

// Sum_j a[j] * conj(b[j + offset]) * z^j over the valid index range, with
// z = exp(i * step). Powers of z are re-seeded every 64 terms.
inline cplx modulated_correlation(std::span<const cplx> a, std::span<const cplx> b, long offset,
                                  double step) {
    const long na = static_cast<long>(a.size());
    const long nb = static_cast<long>(b.size());
    const long j0 = std::max(0L, -offset);
    const long j1 = std::min(na, nb - offset);
    if (j1 <= j0) return {};
    if (step == 0.0) {
        cplx acc{};
        for (long j = j0; j < j1; ++j) acc += a[j] * std::conj(b[j + offset]);
        return acc;
    }
    const cplx z = expi(step);
    cplx acc{};
    for (long block = j0; block < j1; block += 64) {
        cplx zj = expi(step * static_cast<double>(block));
        const long end = std::min(j1, block + 64);
        cplx part{};
        for (long j = block; j < end; ++j) {
            part += a[j] * std::conj(b[j + offset]) * zj;
            zj *= z;
        }
        acc += part;
    }
    return acc;
}

/// Exact value of  int U(x - shift) conj(V(x)) exp(-2 pi i nu x) dx  for the
/// piecewise-constant parts U, V (carriers are handled by the callers).
inline cplx cell_overlap(std::span<const cplx> U, double ux0, double udx, double shift,
                         std::span<const cplx> V, double vx0, double vdx, double nu) {
    const double u_begin = ux0 + shift;
    const double u_end = u_begin + static_cast<double>(U.size()) * udx;
    const double v_end = vx0 + static_cast<double>(V.size()) * vdx;
    if (u_end <= vx0 || v_end <= u_begin) return {};

    if (same_width(udx, vdx)) {
        const double dx = vdx;
        const double delta = (u_begin - vx0) / dx;
        double k0 = std::floor(delta);
        double theta = delta - k0;
        if (theta < 1e-11) {
            theta = 0.0;
        } else if (theta > 1.0 - 1e-11) {
            theta = 0.0;
            k0 += 1.0;
        }
        const long offset = static_cast<long>(k0);
        const double len1 = (1.0 - theta) * dx;
        const double len2 = theta * dx;
        const double step = -two_pi * nu * dx;
        cplx result = len1 * sinc(nu * len1) * expi(-pi * nu * len1)
                      * modulated_correlation(U, V, offset, step);
        if (len2 > 0.0) {
            result += len2 * sinc(nu * len2) * expi(-two_pi * nu * (len1 + 0.5 * len2))
                      * modulated_correlation(U, V, offset + 1, step);
        }
        return result * expi(-two_pi * nu * u_begin);
    }

    // General widths: sweep the merged breakpoints.
    const long nu_cells = static_cast<long>(U.size());
    const long nv_cells = static_cast<long>(V.size());
    long i = std::max(0L, static_cast<long>(std::floor((vx0 - u_begin) / udx)));
    long k = std::max(0L, static_cast<long>(std::floor((u_begin - vx0) / vdx)));
    cplx acc{};
    while (i < nu_cells && k < nv_cells) {
        const double ua = u_begin + static_cast<double>(i) * udx;
        const double ub = u_begin + static_cast<double>(i + 1) * udx;
        const double va = vx0 + static_cast<double>(k) * vdx;
        const double vb = vx0 + static_cast<double>(k + 1) * vdx;
        const double lo = std::max(ua, va);
        const double hi = std::min(ub, vb);
        if (hi > lo) {
            const double len = hi - lo;
            acc += U[i] * std::conj(V[k]) * (len * sinc(nu * len)) * expi(-pi * nu * (lo + hi));
        }
        if (ub <= vb) ++i; else ++k;
    }
    return acc;
}

inline void check_widths(const SampledWindow& u, const SampledWindow& v, const GridPolicy& policy) {
    if (same_width(u.dx(), v.dx())) return;
    if (!policy.allow_mismatch)
        throw Error(ErrorCode::grid_mismatch, "windows have different cell widths ("
                                                  + std::to_string(u.dx()) + " vs "
                                                  + std::to_string(v.dx()) + ")");
    static std::atomic<bool> warned{false};
    if (policy.warn && !warned.exchange(true))
        std::clog << "hrf: warning: integrating windows with different cell widths; "
                     "using exact overlap of the cell models\n";
}

}  // namespace detail

/// <u, v> = int u(x) conj(v(x)) dx, conjugate-linear in v.
inline cplx inner_product(const SampledWindow& u, const SampledWindow& v, const GridPolicy& policy = {}) {
    detail::check_widths(u, v, policy);
    return detail::cell_overlap(u.samples(), u.x0(), u.dx(), 0.0, v.samples(), v.x0(), v.dx(),
                                u.carrier() - v.carrier());
}

/// Ambiguity function A(s, nu) = int v(u - s) conj(w(u)) exp(-2 pi i nu u) du.
inline cplx ambiguity(const SampledWindow& v, const SampledWindow& w, double s, double nu,
                      const GridPolicy& policy = {}) {
    detail::check_widths(v, w, policy);
    return expi(two_pi * v.carrier() * s)
           * detail::cell_overlap(v.samples(), v.x0(), v.dx(), s, w.samples(), w.x0(), w.dx(),
                                  nu + v.carrier() - w.carrier());
}

// ---------------------------------------------------------------------------
// Presets

enum class WindowPreset { box, half_box_sqrt2, gaussian, hat };

inline std::string_view to_string(WindowPreset p) {
    switch (p) {
    case WindowPreset::box: return "box";
    case WindowPreset::half_box_sqrt2: return "half-box-sqrt2";
    case WindowPreset::gaussian: return "gaussian";
    case WindowPreset::hat: return "hat";
    }
    return "box";
}

inline WindowPreset parse_window_preset(std::string_view name, const std::string& key = {}) {
    if (name == "box") return WindowPreset::box;
    if (name == "half-box-sqrt2") return WindowPreset::half_box_sqrt2;
    if (name == "gaussian") return WindowPreset::gaussian;
    if (name == "hat") return WindowPreset::hat;
    throw Error(ErrorCode::config, "unknown window preset '" + std::string(name) + "'", key);
}

/// Unit-norm analytic window sampled on n cells covering [lo, hi).
///  box:            L^{-1/2} on [lo, hi)
///  half-box-sqrt2: (2/L)^{1/2} on [lo, lo + L/2)   (sqrt(2)*chi_[0,1/2) for [0,1))
///  gaussian:       2^{1/4} exp(-pi (x - c)^2), c the midpoint of [lo, hi)
///  hat:            (3/L)^{1/2} (1 - |2(x - c)/L|)
inline SampledWindow window_preset(WindowPreset preset, std::size_t n, double lo, double hi) {
    if (n < 2) throw Error(ErrorCode::parameter, "window preset needs n >= 2");
    if (!(hi > lo)) throw Error(ErrorCode::parameter, "window support must be nonempty");
    const double len = hi - lo;
    const double dx = len / static_cast<double>(n);
    const double mid = 0.5 * (lo + hi);
    std::vector<cplx> s(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = lo + (static_cast<double>(j) + 0.5) * dx;
        double value = 0.0;
        switch (preset) {
        case WindowPreset::box: value = 1.0 / std::sqrt(len); break;
        case WindowPreset::half_box_sqrt2: value = x < lo + 0.5 * len ? std::sqrt(2.0 / len) : 0.0; break;
        case WindowPreset::gaussian:
            value = std::pow(2.0, 0.25) * std::exp(-pi * (x - mid) * (x - mid));
            break;
        case WindowPreset::hat:
            value = std::sqrt(3.0 / len) * std::max(0.0, 1.0 - std::abs(2.0 * (x - mid) / len));
            break;
        }
        s[j] = value;
    }
    return SampledWindow(std::move(s), lo, dx);
}

inline SampledWindow window_preset(std::string_view name, std::size_t n, double lo, double hi) {
    return window_preset(parse_window_preset(name), n, lo, hi);
}

// ---------------------------------------------------------------------------
// Torus grid

/// Sample points of the torus variable alpha. Midpoint grids never contain 0;
/// explicit point lists may include the closure point alpha = 1.
class TorusGrid {
public:
    TorusGrid() : TorusGrid({0.5}, true) {}

    static TorusGrid midpoint(std::size_t n_alpha) {
        if (n_alpha == 0) throw Error(ErrorCode::parameter, "torus grid needs n_alpha >= 1");
        std::vector<double> p(n_alpha);
        for (std::size_t j = 0; j < n_alpha; ++j)
            p[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n_alpha);
        return TorusGrid(std::move(p), true);
    }

    static TorusGrid points(std::vector<double> alphas) {
        if (alphas.empty()) throw Error(ErrorCode::parameter, "torus grid needs at least one point");
        for (double a : alphas)
            if (!(a > 0.0 && a <= 1.0))
                throw Error(ErrorCode::parameter, "torus points must lie in (0, 1]");
        return TorusGrid(std::move(alphas), false);
    }

    std::span<const double> points() const noexcept { return points_; }
    double operator[](std::size_t j) const noexcept { return points_[j]; }
    std::size_t size() const noexcept { return points_.size(); }
    /// Quadrature weight of every point (uniform, summing to 1).
    double weight() const noexcept { return 1.0 / static_cast<double>(points_.size()); }
    bool is_midpoint() const noexcept { return midpoint_; }

    /// Grid resolution (spacing of a midpoint grid; 0 for explicit lists).
    double resolution() const noexcept { return midpoint_ ? weight() : 0.0; }

private:
    TorusGrid(std::vector<double> p, bool midpoint) : points_(std::move(p)), midpoint_(midpoint) {}
    std::vector<double> points_;
    bool midpoint_;
};

// ---------------------------------------------------------------------------
// Lattice

/// Lambda_1 = a Z x b Z x {0} truncated to |m|, |n| <= k_max, and
/// Lambda_0 = Z truncated to |k| <= central_range.
struct LatticeSpec {
    double a = 1.0;
    double b = 1.0;
    int k_max = 1;
    int central_range = 1;

    static LatticeSpec make(double a, double b, int k_max, int central_range = 1) {
        LatticeSpec l{a, b, k_max, central_range};
        l.validate();
        return l;
    }

    void validate() const {
        if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::config, "lattice scale a must be > 0", "lattice.a");
        if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorCode::config, "lattice scale b must be > 0", "lattice.b");
        if (k_max < 0) throw Error(ErrorCode::config, "k_max must be >= 0", "lattice.k_max");
        if (central_range < 0)
            throw Error(ErrorCode::config, "central_range must be >= 0", "lattice.central_range");
        const double ab = a * b;
        if (std::abs(ab - std::round(ab)) > 1e-12)
            throw Error(ErrorCode::config, "a*b must be an integer, got " + std::to_string(ab),
                        "lattice.a*lattice.b");
    }

    /// Integer value of a*b.
    long ab() const { return std::lround(a * b); }

    /// Lattice indices (m, n) with |m|, |n| <= radius, in lexicographic order.
    static std::vector<std::pair<int, int>> box(int radius) {
        std::vector<std::pair<int, int>> out;
        for (int m = -radius; m <= radius; ++m)
            for (int n = -radius; n <= radius; ++n) out.emplace_back(m, n);
        return out;
    }

    /// The shell max(|m|, |n|) == radius.
    static std::vector<std::pair<int, int>> shell(int radius) {
        std::vector<std::pair<int, int>> out;
        for (auto [m, n] : box(radius))
            if (std::max(std::abs(m), std::abs(n)) == radius) out.emplace_back(m, n);
        return out;
    }
};

}  // namespace hrf
