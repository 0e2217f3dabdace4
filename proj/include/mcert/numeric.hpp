#pragma once

// Small numerical kernels shared by the modules: Gauss-Legendre rules,
// compensated sums, central finite differences with Richardson
// extrapolation, least-squares line fits and a seeded random source.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "mcert/errors.hpp"

namespace mcert {

inline constexpr double pi = std::numbers::pi;

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline QuadratureRule compute_gauss_legendre(int n) {
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    if (n == 1) {
        rule.weights[0] = 2.0;
        return rule;
    }
    // Legendre P_n and its derivative at x
    auto legendre = [n](double x) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return std::pair<double, double>{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace detail

// Gauss-Legendre rule on [-1, 1]; cached per order.
inline const QuadratureRule& gauss_legendre(int n) {
    if (n < 1) throw input_error("gauss_legendre: order must be positive");
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
    return it->second;
}

// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
    const auto& rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Step fraction balancing O(h^4) truncation (after one Richardson level)
// against eps / h^order rounding.
inline double richardson_step(int order) {
    return std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (order + 4.0));
}

// Mixed central difference of F at the origin of R^d. orders[i] is the
// derivative order in variable i; F receives an offset vector. One
// Richardson level is applied, so the error is O(h^4).
template <class T, class F>
T mixed_central_difference(F&& f, std::span<const int> orders, double h) {
    const std::size_t d = orders.size();
    auto single = [&](double step) {
        // enumerate the tensor stencil
        std::vector<int> m(d, 0);
        std::vector<double> offset(d, 0.0);
        T acc{};
        while (true) {
            double w = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                const int k = orders[i];
                w *= ((m[i] % 2) ? -1.0 : 1.0) * binomial(k, m[i]);
                offset[i] = (0.5 * k - m[i]) * step;
            }
            acc += w * f(offset);
            std::size_t i = 0;
            while (i < d) {
                if (++m[i] <= orders[i]) break;
                m[i] = 0;
                ++i;
            }
            if (i == d) break;
        }
        int total = 0;
        for (int k : orders) total += k;
        return acc / std::pow(step, total);
    };
    const T coarse = single(h);
    const T fine = single(0.5 * h);
    return (4.0 * fine - coarse) / 3.0;
}

// Derivative of order k of a scalar function at x (central, one Richardson
// level).
template <class F>
double central_derivative(F&& f, double x, int k, double h) {
    if (k == 0) return f(x);
    const int orders[1] = {k};
    return mixed_central_difference<double>(
        [&](const std::vector<double>& off) { return f(x + off[0]); },
        std::span<const int>(orders, 1), h);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw input_error("fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw input_error("fit_line: degenerate abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

inline std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out(count);
    if (count == 1) { out[0] = lo; return out; }
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * i / (count - 1));
    return out;
}

inline std::vector<double> lin_spaced(double lo, double hi, int count) {
    std::vector<double> out(count);
    if (count == 1) { out[0] = lo; return out; }
    for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
    return out;
}

// Seeded random source. All stochastic routines take one explicitly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(engine_); }
    double normal() { return normal_(engine_); }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mcert
