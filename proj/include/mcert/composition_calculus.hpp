#pragma once

// Higher chain rule (partial Bell polynomials, Faà di Bruno), the
// change-of-variables maps H_r and H~_r that transport regularity from
// SO(n)-biinvariant symbols to radial symbols on SL_n(R), the rank choice
// behind the decay exponents c_k, and the trace coefficients on SO(n,1).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mcert/errors.hpp"
#include "mcert/numeric.hpp"
#include "mcert/sphere_spectra.hpp"

namespace mcert::compose {

using Matrix = Eigen::MatrixXd;

// First k derivatives of a scalar function at a point: values[j - 1] = d^j.
struct DerivativeJet {
    std::vector<double> values;

    int order() const { return static_cast<int>(values.size()); }
    double operator[](int j) const { return values.at(j - 1); }
};

// Table of B_{a,b}(z_1, ...) for 0 <= b <= a <= k by
// B_{a,b} = sum_i C(a-1, i-1) z_i B_{a-i, b-1}.
inline std::vector<std::vector<double>> bell_table(int k, std::span<const double> z) {
    std::vector<std::vector<double>> b(k + 1, std::vector<double>(k + 1, 0.0));
    b[0][0] = 1.0;
    for (int a = 1; a <= k; ++a)
        for (int j = 1; j <= a; ++j) {
            double acc = 0.0;
            for (int i = 1; i <= a - j + 1; ++i)
                if (i <= static_cast<int>(z.size())) acc += binomial(a - 1, i - 1) * z[i - 1] * b[a - i][j - 1];
            b[a][j] = acc;
        }
    return b;
}

inline double bell_polynomial(int k, int j, std::span<const double> z) {
    if (j < 1 || j > k) throw input_error("bell_polynomial: need 1 <= j <= k");
    if (static_cast<int>(z.size()) < k - j + 1) throw input_error("bell_polynomial: argument list too short");
    return bell_table(k, z)[k][j];
}

// d^k (f o phi)(x) = sum_j B_{k,j}(phi', ..., phi^{(k-j+1)}) f^{(j)}(phi(x))
inline double faa_di_bruno(const DerivativeJet& f_jet, const DerivativeJet& phi_jet, int k) {
    if (k < 1) throw input_error("faa_di_bruno: k must be positive");
    if (f_jet.order() < k || phi_jet.order() < k) throw input_error("faa_di_bruno: jet too short");
    const auto b = bell_table(k, phi_jet.values);
    CompensatedSum sum;
    for (int j = 1; j <= k; ++j) sum.add(b[k][j] * f_jet[j]);
    return sum.value();
}

// Bell number: sum_j B_{k,j}(1, ..., 1), the number of set partitions.
inline double bell_coefficient_sum(int k) {
    const std::vector<double> ones(k, 1.0);
    const auto b = bell_table(k, ones);
    double sum = 0.0;
    for (int j = 1; j <= k; ++j) sum += b[k][j];
    return sum;
}

// Every monomial of B_{k,j} is prod z_s^{i_s} with sum s i_s = k, so
// |d^k (f o phi)| <= ||f||_{C^k} C_k max_s |z_s|^{k/s} with C_k the Bell number.
inline double composition_derivative_bound(double f_norm, std::span<const double> phi_jet_sups, int k) {
    if (k < 1) throw input_error("composition_derivative_bound: k must be positive");
    if (static_cast<int>(phi_jet_sups.size()) < k) throw input_error("composition_derivative_bound: jet too short");
    double m = 0.0;
    for (int s = 1; s <= k; ++s) m = std::max(m, std::pow(std::abs(phi_jet_sups[s - 1]), static_cast<double>(k) / s));
    return bell_coefficient_sum(k) * std::abs(f_norm) * m;
}

// Operator norm of a determinant-one 2x2 matrix with Hilbert-Schmidt norm
// (2 + 4x^2)^{1/2}.
inline double g_norm(double x) {
    if (!(x >= 0.0)) throw domain_error("g_norm: x must be nonnegative");
    return std::sqrt(1.0 + 2.0 * x * x + 2.0 * std::sqrt(x * x + std::pow(x, 4)));
}

// D = diag(e^r, e^s (m-1 times), e^t (n-m times)) in SL_n(R) with the
// exponent choices that make e^{r+s} g(delta sinh(r-s)) the operator norm
// of D k_delta D. m = n gives the SO(n) frame s = -r/(n-1).
struct CompositionFrame {
    int n = 3;
    int m = 3;
    double r = 0.0, s = 0.0, t = 0.0;
    double x_lo = 1.0, x_hi = 1.0;  // domain of H_r: [e^{r+s}, e^{2r}]

    static CompositionFrame make(int n, int m, double r) {
        if (n < 3 || m < 3 || m > n) throw input_error("CompositionFrame: need 3 <= m <= n");
        if (!(r > 0.0) || !std::isfinite(r)) throw input_error("CompositionFrame: r must be positive");
        CompositionFrame f;
        f.n = n;
        f.m = m;
        f.r = r;
        f.s = -static_cast<double>(n - m + 2) / (n + m - 2) * r;
        f.t = static_cast<double>(m - 2) / (n + m - 2) * r;
        f.x_lo = std::exp(r + f.s);
        f.x_hi = std::exp(2.0 * r);
        return f;
    }

    static CompositionFrame so_n(int n, double r) { return make(n, n, r); }

    // r maximal for a given x: x = e^{r+s}.
    static CompositionFrame coupled(int n, int m, double x) {
        if (!(x > 1.0)) throw domain_error("CompositionFrame::coupled: x must exceed 1");
        return make(n, m, std::log(x) * (n + m - 2) / (2.0 * (m - 2)));
    }

    double determinant_residual() const { return r + (m - 1) * s + (n - m) * t; }

    Matrix d_matrix() const {
        Eigen::VectorXd d(n);
        d[0] = std::exp(r);
        for (int i = 1; i < m; ++i) d[i] = std::exp(s);
        for (int i = m; i < n; ++i) d[i] = std::exp(t);
        return d.asDiagonal();
    }

    double a_squared() const {
        return (2.0 * std::exp(2.0 * r + 2.0 * s) + (m - 2) * std::exp(4.0 * s) + (n - m) * std::exp(4.0 * t)) / n;
    }
    double b_squared() const {
        return (std::exp(4.0 * r) + (m - 1) * std::exp(4.0 * s) + (n - m) * std::exp(4.0 * t)) / n;
    }
    // B^2 - A^2 = (e^{2r} - e^{2s})^2 / n, kept free of cancellation
    double gap_squared() const {
        const double w = std::exp(2.0 * r) - std::exp(2.0 * s);
        return w * w / n;
    }
    double a_r() const { return std::sqrt(a_squared()); }
    double b_r() const { return std::sqrt(b_squared()); }
};

// Rotation by arccos(delta) in the first two coordinates of R^n.
inline Matrix k_delta(int n, double delta) {
    if (!(std::abs(delta) <= 1.0)) throw domain_error("k_delta: |delta| must not exceed 1");
    Matrix k = Matrix::Identity(n, n);
    const double c = std::sqrt(1.0 - delta * delta);
    k(0, 0) = delta;
    k(0, 1) = -c;
    k(1, 0) = c;
    k(1, 1) = delta;
    return k;
}

inline void check_hr_domain(const CompositionFrame& f, double x) {
    const double slack = 1e-12 * f.x_hi;
    if (!(x >= f.x_lo - slack && x <= f.x_hi + slack)) throw domain_error("H_r: x outside [e^{r+s}, e^{2r}]");
}

// H_r(x) = (x/e^{r+s} - e^{r+s}/x) / (2 sinh(r - s))
inline double H_r(const CompositionFrame& f, double x) {
    check_hr_domain(f, x);
    const double e = std::exp(f.r + f.s);
    return (x / e - e / x) / (2.0 * std::sinh(f.r - f.s));
}

inline double H_r_derivative(const CompositionFrame& f, int j, double x) {
    if (j < 0) throw input_error("H_r_derivative: order must be nonnegative");
    if (j == 0) return H_r(f, x);
    check_hr_domain(f, x);
    if (j == 1) return (1.0 + std::exp(2.0 * f.r + 2.0 * f.s) / (x * x)) / (std::exp(2.0 * f.r) - std::exp(2.0 * f.s));
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;  // (-1)^{j-1}
    return sign * std::tgamma(j + 1.0) / ((std::exp(-2.0 * f.s) - std::exp(-2.0 * f.r)) * std::pow(x, j + 1.0));
}

// max_{1 <= j <= k} |d^j H_r(x)|^{k/j} in the coupled frame x = e^{r+s}.
inline double H_r_jet_profile(int n, int m, int k, double x) {
    const auto f = CompositionFrame::coupled(n, m, x);
    double v = 0.0;
    for (int j = 1; j <= k; ++j) v = std::max(v, std::pow(std::abs(H_r_derivative(f, j, x)), static_cast<double>(k) / j));
    return v;
}

// Polynomials with d^j sqrt(u^2 - 1) = P_j(u) (u^2 - 1)^{1/2 - j}:
// P_1 = u, P_{j+1} = P_j' (u^2 - 1) + (1 - 2j) u P_j. Coefficients ascending.
inline std::vector<double> sqrt_derivative_polynomial(int j) {
    std::vector<double> p = {0.0, 1.0};
    for (int i = 1; i < j; ++i) {
        std::vector<double> next(p.size() + 1, 0.0);
        for (std::size_t d = 1; d < p.size(); ++d) {
            // P' (u^2 - 1)
            next[d + 1] += d * p[d];
            next[d - 1] -= d * p[d];
        }
        for (std::size_t d = 0; d < p.size(); ++d) next[d + 1] += (1.0 - 2.0 * i) * p[d];
        p = std::move(next);
    }
    return p;
}

inline double eval_polynomial(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
}

inline void check_htilde_domain(const CompositionFrame& f, double x) {
    const double a = f.a_r(), b = f.b_r();
    const double slack = 1e-12 * b;
    if (!(x >= a - slack && x <= b + slack)) throw domain_error("H_tilde_r: x outside [A_r, B_r]");
}

// H~_r(x) = sqrt((x^2/A^2 - 1) / (B^2/A^2 - 1))
inline double H_tilde_r(const CompositionFrame& f, double x) {
    check_htilde_domain(f, x);
    const double a = f.a_r();
    return std::sqrt(std::max(0.0, (x - a) * (x + a) / f.gap_squared()));
}

// d^j H~_r = A / sqrt(B^2 - A^2) A^{-j} H^{(j)}(x / A), H(u) = sqrt(u^2 - 1).
inline double H_tilde_r_derivative(const CompositionFrame& f, int j, double x) {
    if (j < 0) throw input_error("H_tilde_r_derivative: order must be nonnegative");
    if (j == 0) return H_tilde_r(f, x);
    check_htilde_domain(f, x);
    const double a = f.a_r();
    const double u = x / a;
    if (!(u > 1.0)) throw domain_error("H_tilde_r_derivative: singular at x = A_r");
    const auto p = sqrt_derivative_polynomial(j);
    const double hj = eval_polynomial(p, u) * std::pow(u * u - 1.0, 0.5 - j);
    return a / std::sqrt(f.gap_squared()) * std::pow(a, -j) * hj;
}

struct RankChoice {
    int m = 0;
    double c_k = 0.0;
    double beta = 0.0;
};

inline double rank_beta(int m, double p) { return 0.5 * (m - 2) - (m - 1) / p; }

// Smallest m with beta = (m-2)/2 - (m-1)/p > k; m - 2 = [(2k+1)/(1-2/p)]
// and c_k = n/(m-2).
inline RankChoice rank_choice(int k, double p, int n) {
    if (k < 1) throw input_error("rank_choice: k must be at least 1");
    const auto ex = sphere::RigidityExponents::make(n, p);
    if (!(k < ex.alpha)) throw range_error("rank_choice: k must be below alpha");
    RankChoice out;
    out.m = static_cast<int>(std::floor((2.0 * k + 1.0) / (1.0 - 2.0 / p))) + 2;
    int searched = 3;
    while (!(rank_beta(searched, p) > k)) ++searched;
    if (searched != out.m) throw numeric_error("rank_choice: closed form disagrees with search");
    out.beta = rank_beta(out.m, p);
    if (!(out.beta <= k + 0.5 - 1.0 / p + 1e-12)) throw numeric_error("rank_choice: beta above k + 1/2 - 1/p");
    if (std::abs(out.beta - std::round(out.beta)) < 1e-12) throw numeric_error("rank_choice: beta is an integer");
    out.c_k = static_cast<double>(n) / (out.m - 2);
    return out;
}

// tr((D k_delta D)^T (D k_delta D)) = a delta^2 + b delta + c on SO(n,1),
// D = D(r) the boost in coordinates 1 and n+1.
struct SoN1Coefficients {
    int n = 3;
    double r = 0.0;
    double a = 0.0, b = 0.0, c = 0.0;

    static SoN1Coefficients make(int n, double r) {
        if (n < 2) throw input_error("SoN1Coefficients: n must be at least 2");
        if (!(r >= 0.0) || !std::isfinite(r)) throw input_error("SoN1Coefficients: r must be nonnegative");
        SoN1Coefficients k;
        k.n = n;
        k.r = r;
        k.a = 4.0 * std::pow(std::sinh(r), 4);
        k.b = 2.0 * std::pow(std::sinh(2.0 * r), 2);
        k.c = n - 3.0 + 4.0 * std::pow(std::cosh(r), 4);
        return k;
    }

    double trace(double delta) const { return (a * delta + b) * delta + c; }

    // g_r = inverse of delta -> trace on [0, 1]; written as
    // 2(x - c) / (b + sqrt(b^2 + 4a(x - c))) to avoid cancellation.
    double inverse(double x) const {
        const double lo = c, hi = a + b + c;
        const double slack = 1e-12 * hi;
        if (!(x >= lo - slack && x <= hi + slack)) throw domain_error("SoN1Coefficients::inverse: x out of range");
        const double y = std::max(0.0, x - c);
        const double den = b + std::sqrt(b * b + 4.0 * a * y);
        return den > 0.0 ? 2.0 * y / den : 0.0;
    }

    static Matrix boost(int n, double r) {
        Matrix d = Matrix::Identity(n + 1, n + 1);
        d(0, 0) = d(n, n) = std::cosh(r);
        d(0, n) = d(n, 0) = std::sinh(r);
        return d;
    }
};

}  // namespace mcert::compose
