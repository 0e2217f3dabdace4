#pragma once

// Spectral data of the averaging operators T_delta on S^{n-1}: eigenvalues
// phi_k (normalized Gegenbauer polynomials), multiplicities m_k, Schatten
// norms of derivatives of x -> T_x, Hölder quotients and a direct
// quadrature of T_delta on S^2.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mcert/errors.hpp"
#include "mcert/numeric.hpp"

namespace mcert::sphere {

inline constexpr double kInteriorBand = 0.95;

inline void check_dimension(int n) {
    if (n < 3) throw input_error("sphere: n must be at least 3");
}

inline double gegenbauer_parameter(int n) { return 0.5 * (n - 2); }

// C^lambda_k(x) / C^lambda_k(1) by the three-term recurrence.
inline double normalized_gegenbauer(double lambda, int k, double x) {
    if (k == 0) return 1.0;
    double r0 = 1.0, r1 = x;
    for (int m = 2; m <= k; ++m) {
        const double r2 = (2.0 * (m + lambda - 1.0) * x * r1 - (m - 1.0) * r0) / (m + 2.0 * lambda - 1.0);
        r0 = r1;
        r1 = r2;
    }
    return r1;
}

// phi_k(x): eigenvalue of T_x on degree-k spherical harmonics of S^{n-1}.
inline double phi_k(int n, int k, double x) {
    check_dimension(n);
    if (k < 0) throw input_error("phi_k: k must be nonnegative");
    if (!(std::abs(x) <= 1.0)) throw domain_error("phi_k: |x| must not exceed 1");
    return normalized_gegenbauer(gegenbauer_parameter(n), k, x);
}

// c_n int_0^pi (x + i sqrt(1 - x^2) cos t)^k (sin t)^{n-3} dt by
// Gauss-Legendre; the imaginary part is returned for inspection.
inline std::complex<double> phi_k_integral(int n, int k, double x, int nodes = 0) {
    check_dimension(n);
    if (!(std::abs(x) <= 1.0)) throw domain_error("phi_k_integral: |x| must not exceed 1");
    if (nodes <= 0) nodes = k + n + 32;
    const double c_n = std::exp(std::lgamma(0.5 * (n - 1)) - std::lgamma(0.5 * (n - 2))) / std::sqrt(pi);
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    const auto& rule = gauss_legendre(nodes);
    std::complex<double> acc = 0.0;
    for (int q = 0; q < nodes; ++q) {
        const double t = 0.5 * pi * (rule.nodes[q] + 1.0);
        const std::complex<double> base(x, s * std::cos(t));
        acc += rule.weights[q] * std::pow(base, k) * std::pow(std::sin(t), n - 3);
    }
    return c_n * 0.5 * pi * acc;
}

struct DerivativeValue {
    double value = 0.0;
    bool near_singular = false;  // |x| beyond the interior band with r >= 1
};

// d^r/dx^r C^l_k = 2^r (l)_r C^{l+r}_{k-r}; prefactor relative to C^l_k(1).
inline double derivative_prefactor(double lambda, int k, int r) {
    const double mu = lambda + r;
    const double log_v = r * std::log(2.0) + std::lgamma(lambda + r) - std::lgamma(lambda) +
                         (std::lgamma(2.0 * mu + k - r) - std::lgamma(2.0 * mu) - std::lgamma(k - r + 1.0)) -
                         (std::lgamma(2.0 * lambda + k) - std::lgamma(2.0 * lambda) - std::lgamma(k + 1.0));
    return std::exp(log_v);
}

inline DerivativeValue phi_k_derivative(int n, int k, int r, double x) {
    check_dimension(n);
    if (k < 0 || r < 0) throw input_error("phi_k_derivative: k and r must be nonnegative");
    if (!(std::abs(x) <= 1.0)) throw domain_error("phi_k_derivative: |x| must not exceed 1");
    DerivativeValue out;
    out.near_singular = r >= 1 && std::abs(x) > kInteriorBand;
    if (r == 0) {
        out.value = phi_k(n, k, x);
        return out;
    }
    if (r > k) return out;
    const double lambda = gegenbauer_parameter(n);
    out.value = derivative_prefactor(lambda, k, r) * normalized_gegenbauer(lambda + r, k - r, x);
    return out;
}

// Streams (k, d^r phi_k(x)) for k = 0..k_max in one recurrence pass.
template <class F>
void for_each_derivative(int n, int r, double x, long k_max, F&& visit) {
    const double lambda = gegenbauer_parameter(n);
    for (long k = 0; k < std::min<long>(r, k_max + 1); ++k) visit(k, 0.0);
    if (k_max < r) return;
    const double mu = lambda + r;
    double pref = r == 0 ? 1.0 : derivative_prefactor(lambda, r, r);
    double g0 = 1.0, g1 = x;  // normalized C^mu_m at m and m + 1
    for (long k = r; k <= k_max; ++k) {
        const long m = k - r;
        visit(k, pref * g0);
        // advance prefactor: C^mu_{m+1}(1)/C^mu_m(1) over C^l_{k+1}(1)/C^l_k(1)
        pref *= ((2.0 * mu + m) / (m + 1.0)) / ((2.0 * lambda + k) / (k + 1.0));
        const double next = (2.0 * (m + 1 + mu) * x * g1 - (m + 1.0) * g0) / (m + 1.0 + 2.0 * mu);
        g0 = g1;
        g1 = next;
    }
}

// m_k = (n+k-3)! (n+2k-2) / ((n-2)! k!) in exact arithmetic.
inline std::uint64_t multiplicity(int n, int k) {
    check_dimension(n);
    if (k < 0) throw input_error("multiplicity: k must be nonnegative");
    using u128 = unsigned __int128;
    const u128 limit = std::numeric_limits<std::uint64_t>::max();
    // C(n+k-3, k), each partial product is itself a binomial coefficient
    u128 c = 1;
    for (int i = 1; i <= k; ++i) {
        c = c * static_cast<u128>(n - 3 + i) / static_cast<u128>(i);
        if (c > limit) throw range_error("multiplicity: value exceeds 64 bits");
    }
    const u128 num = c * static_cast<u128>(n + 2 * k - 2);
    const u128 m = num / static_cast<u128>(n - 2);
    if (m > limit) throw range_error("multiplicity: value exceeds 64 bits");
    return static_cast<std::uint64_t>(m);
}

struct SphericalEigenSystem {
    int n = 3;
    int k_max = 0;
    std::vector<std::uint64_t> multiplicities;

    static SphericalEigenSystem make(int n, int k_max) {
        check_dimension(n);
        SphericalEigenSystem s;
        s.n = n;
        s.k_max = k_max;
        for (int k = 0; k <= k_max; ++k) s.multiplicities.push_back(multiplicity(n, k));
        return s;
    }

    double eigenvalue(int k, double x) const { return phi_k(n, k, x); }
};

// CSV with columns k, m_k, phi_k(x) for each requested x.
inline void write_spectrum_csv(std::ostream& os, const SphericalEigenSystem& s, std::span<const double> xs) {
    os << "k,m_k";
    for (double x : xs) os << ",phi_k(" << x << ")";
    os << "\n";
    os.precision(17);
    for (int k = 0; k <= s.k_max; ++k) {
        os << k << "," << s.multiplicities[k];
        for (double x : xs) os << "," << s.eigenvalue(k, x);
        os << "\n";
    }
}

struct RigidityExponents {
    int n = 3;
    double p = 0.0;
    double alpha0 = 0.0;
    double alpha = 0.0;
    std::vector<double> c;  // c_0 .. c_[alpha]

    static RigidityExponents make(int n, double p, double eps = 1e-3) {
        check_dimension(n);
        if (!(p > 2.0 + 2.0 / (n - 2)) || !std::isfinite(p))
            throw domain_error("RigidityExponents: p must exceed 2 + 2/(n-2)");
        RigidityExponents r;
        r.n = n;
        r.p = p;
        r.alpha0 = 0.5 * (n - 2) - (n - 1) / p;
        const bool integer = std::abs(r.alpha0 - std::round(r.alpha0)) < 1e-12;
        r.alpha = integer ? std::round(r.alpha0) - eps : r.alpha0;
        const double q = 1.0 - 2.0 / p;
        r.c.push_back(r.alpha > 1.0 ? n / std::floor(3.0 / q) : r.alpha * n / (n - 2.0));
        for (int k = 1; k <= static_cast<int>(std::floor(r.alpha)); ++k) r.c.push_back(n / std::floor((2.0 * k + 1.0) / q));
        return r;
    }

    int derivative_order() const { return static_cast<int>(std::floor(alpha)); }
    bool alpha0_integer() const { return std::abs(alpha0 - std::round(alpha0)) < 1e-12; }
};

inline double alpha0_of(int n, double p) { return 0.5 * (n - 2) - (n - 1) / p; }

// Streams (k, m_k as double) for k = 0..k_max.
template <class F>
void for_each_multiplicity(int n, long k_max, F&& visit) {
    double c = 1.0;  // C(n+k-3, k)
    for (long k = 0; k <= k_max; ++k) {
        if (k > 0) c *= static_cast<double>(n - 3 + k) / static_cast<double>(k);
        visit(k, c * (n + 2.0 * k - 2.0) / (n - 2.0));
    }
}

// sum_{k <= K} m_k |d^r phi_k(x)|^p, ascending k, compensated.
inline double sp_partial_sum(int n, double p, int r, double x, long k_max) {
    check_dimension(n);
    std::vector<double> mult;
    mult.reserve(k_max + 1);
    for_each_multiplicity(n, k_max, [&](long, double m) { mult.push_back(m); });
    CompensatedSum sum;
    for_each_derivative(n, r, x, k_max, [&](long k, double v) {
        if (v != 0.0) sum.add(mult[k] * std::pow(std::abs(v), p));
    });
    return sum.value();
}

struct SchattenSum {
    bool divergent = false;
    double value = 0.0;         // (sum_k m_k |d^r phi_k(x)|^p)^{1/p}
    double power_sum = 0.0;     // the truncated sum itself
    long terms = 0;             // truncation K
    double tail_bound = 0.0;    // bound on the omitted part of power_sum
    double decay_constant = 0.0;     // C' in |d^r phi_k| <= C' (1+k)^{r+1-n/2}
    double multiplicity_constant = 0.0;  // A in m_k <= A (1+k)^{n-2}
};

namespace detail {

// One pass over k = 0..K: the compensated sum of m_k |a_k - b_k|^p, where
// a_k = d^r phi_k(x) and b_k = d^r phi_k(y) (b = 0 when y is absent),
// plus the decay constants measured on k in [K/2, K].
struct PassResult {
    double sum = 0.0;
    double decay_x = 0.0;  // max |a_k| / (1+k)^{r+1-n/2}
    double decay_y = 0.0;
    double mult = 0.0;     // max m_k / (1+k)^{n-2}
};

inline PassResult stream_pass(int n, double p, int r, double x, std::optional<double> y, long k_cap) {
    PassResult out;
    const double lambda = gegenbauer_parameter(n);
    const double mu = lambda + r;
    double pref = r == 0 ? 1.0 : derivative_prefactor(lambda, r, r);
    double gx0 = 1.0, gx1 = x, gy0 = 1.0, gy1 = y.value_or(0.0);
    double c = 1.0;  // C(n+k-3, k)
    CompensatedSum sum;
    for (long k = 0; k <= k_cap; ++k) {
        if (k > 0) c *= static_cast<double>(n - 3 + k) / static_cast<double>(k);
        if (k < r) continue;
        const long m = k - r;
        const double mk = c * (n + 2.0 * k - 2.0) / (n - 2.0);
        const double a = pref * gx0, b = y ? pref * gy0 : 0.0;
        const double diff = a - b;
        if (diff != 0.0) sum.add(mk * std::pow(std::abs(diff), p));
        if (k >= k_cap / 2) {
            const double scale = std::pow(1.0 + k, r + 1.0 - 0.5 * n);
            out.decay_x = std::max(out.decay_x, std::abs(a) / scale);
            out.decay_y = std::max(out.decay_y, std::abs(b) / scale);
            out.mult = std::max(out.mult, mk / std::pow(1.0 + k, n - 2.0));
        }
        pref *= ((2.0 * mu + m) / (m + 1.0)) / ((2.0 * lambda + k) / (k + 1.0));
        const double fac = 2.0 * (m + 1 + mu), den = m + 1.0 + 2.0 * mu;
        const double nx = (fac * x * gx1 - (m + 1.0) * gx0) / den;
        gx0 = gx1;
        gx1 = nx;
        if (y) {
            const double ny = (fac * *y * gy1 - (m + 1.0) * gy0) / den;
            gy0 = gy1;
            gy1 = ny;
        }
    }
    out.sum = sum.value();
    return out;
}

// A C'^p int_K^inf (1+t)^{p(r - a0) - 1} dt with measured constants doubled
// (the decay law |d^r phi_k| <= C' (1+k)^{r+1-n/2}, m_k <= A (1+k)^{n-2}).
inline double tail_bound(int n, double p, int r, double decay, double mult, long k_cap) {
    const double gap = alpha0_of(n, p) - r;
    return 2.0 * mult * std::pow(2.0 * decay, p) * std::pow(1.0 + k_cap, -p * gap) / (p * gap);
}

}  // namespace detail

// Truncated Schatten p-norm of d^r T_x. K doubles from k_start until the
// tail bound drops below tail_tol (absolute, on the p-th power sum).
inline SchattenSum sp_derivative_norm(int n, double p, int r, double x, double tail_tol, long k_max = 1L << 24,
                                      long k_start = 64, double band = kInteriorBand) {
    check_dimension(n);
    if (r < 0) throw input_error("sp_derivative_norm: r must be nonnegative");
    if (!(p >= 1.0) || !std::isfinite(p)) throw input_error("sp_derivative_norm: p must be at least 1");
    if (!(std::abs(x) <= band)) throw domain_error("sp_derivative_norm: x outside the interior band");
    if (!(tail_tol > 0.0)) throw input_error("sp_derivative_norm: tail tolerance must be positive");
    SchattenSum out;
    if (r >= alpha0_of(n, p)) {
        out.divergent = true;
        return out;
    }
    for (long k_cap = std::max<long>(k_start, 2 * r + 4);; k_cap *= 2) {
        if (k_cap > k_max)
            throw accuracy_error("sp_derivative_norm: tail bound not reached within k_max", out.tail_bound);
        const auto pass = detail::stream_pass(n, p, r, x, std::nullopt, k_cap);
        out.tail_bound = detail::tail_bound(n, p, r, pass.decay_x, pass.mult, k_cap);
        if (out.tail_bound > tail_tol) continue;
        out.power_sum = pass.sum;
        out.value = std::pow(out.power_sum, 1.0 / p);
        out.terms = k_cap;
        out.decay_constant = 2.0 * pass.decay_x;
        out.multiplicity_constant = 2.0 * pass.mult;
        return out;
    }
}

struct HolderEstimate {
    double value = 0.0;         // ||d^[a] T_x - d^[a] T_y||_p
    double holder_ratio = 0.0;  // value / |x - y|^{a - [a]}
    double log_ratio = 0.0;     // value / (|x - y| |log|x - y||^{1/p})
    int order = 0;              // [a]
    long terms = 0;
    double tail_bound = 0.0;
};

// Schatten difference of the [alpha]-th derivatives of T_x and T_y. The
// tail uses |a - b|^p <= 2^{p-1}(|a|^p + |b|^p) and is driven below
// rel_tol times the truncated sum.
inline HolderEstimate holder_constant_Tx(int n, double p, double alpha, double x, double y, double rel_tol = 1e-3,
                                         long k_max = 1L << 25, double band = kInteriorBand) {
    check_dimension(n);
    if (!(std::abs(x) < band && std::abs(y) < band)) throw domain_error("holder_constant_Tx: points outside band");
    if (!(alpha > 0.0)) throw input_error("holder_constant_Tx: alpha must be positive");
    HolderEstimate out;
    out.order = static_cast<int>(std::floor(alpha));
    if (out.order >= alpha0_of(n, p)) throw domain_error("holder_constant_Tx: derivative order not summable");
    if (x == y) return out;
    const int r = out.order;
    for (long k_cap = 64;; k_cap *= 2) {
        if (k_cap > k_max)
            throw accuracy_error("holder_constant_Tx: tail bound not reached within k_max", out.tail_bound);
        const auto pass = detail::stream_pass(n, p, r, x, y, k_cap);
        out.tail_bound = std::pow(2.0, p - 1.0) * (detail::tail_bound(n, p, r, pass.decay_x, pass.mult, k_cap) +
                                                   detail::tail_bound(n, p, r, pass.decay_y, pass.mult, k_cap));
        if (out.tail_bound > rel_tol * pass.sum) continue;
        out.value = std::pow(pass.sum, 1.0 / p);
        const double h = std::abs(x - y);
        out.holder_ratio = out.value / std::pow(h, alpha - r);
        out.log_ratio = out.value / (h * std::pow(std::abs(std::log(h)), 1.0 / p));
        out.terms = k_cap;
        return out;
    }
}

// Quadrature nodes on S^2 at latitude/longitude cell centres.
struct SphereGrid {
    std::vector<Eigen::Vector3d> nodes;

    static SphereGrid lat_long(double resolution_deg) {
        if (!(resolution_deg > 0.0 && resolution_deg <= 90.0)) throw input_error("SphereGrid: bad resolution");
        const int nlat = static_cast<int>(std::round(180.0 / resolution_deg));
        const int nlon = 2 * nlat;
        SphereGrid g;
        for (int i = 0; i < nlat; ++i) {
            const double theta = pi * (i + 0.5) / nlat;
            for (int j = 0; j < nlon; ++j) {
                const double phi = 2.0 * pi * (j + 0.5) / nlon;
                g.nodes.emplace_back(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
            }
        }
        return g;
    }
};

struct AveragingResult {
    std::vector<double> values;  // T_delta f at the grid nodes
    double error_estimate = 0.0;  // max change against half the circle nodes
};

// T_delta f(x): mean of f over {y : <x, y> = delta} by the uniform rule
// with circle_nodes points, for n = 3.
inline AveragingResult averaging_operator_oracle(double delta, const std::function<double(const Eigen::Vector3d&)>& f,
                                                 const SphereGrid& grid, int circle_nodes = 360, double tol = 1e-6) {
    if (!(std::abs(delta) <= 1.0)) throw domain_error("averaging_operator_oracle: |delta| must not exceed 1");
    if (circle_nodes < 4 || circle_nodes % 2) throw input_error("averaging_operator_oracle: need an even node count >= 4");
    AveragingResult out;
    out.values.reserve(grid.nodes.size());
    const double s = std::sqrt(std::max(0.0, 1.0 - delta * delta));
    for (const auto& x : grid.nodes) {
        // orthonormal frame (u, v) of the tangent plane at x
        const Eigen::Vector3d a = std::abs(x[0]) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
        const Eigen::Vector3d u = (a - a.dot(x) * x).normalized();
        const Eigen::Vector3d v = x.cross(u);
        double full = 0.0, half = 0.0;
        for (int t = 0; t < circle_nodes; ++t) {
            const double ang = 2.0 * pi * t / circle_nodes;
            const double val = f(delta * x + s * (std::cos(ang) * u + std::sin(ang) * v));
            full += val;
            if (t % 2 == 0) half += val;
        }
        full /= circle_nodes;
        half /= circle_nodes / 2;
        out.values.push_back(full);
        out.error_estimate = std::max(out.error_estimate, std::abs(full - half));
    }
    if (out.error_estimate > tol)
        throw accuracy_error("averaging_operator_oracle: circle quadrature too coarse", out.error_estimate);
    return out;
}

}  // namespace mcert::sphere
