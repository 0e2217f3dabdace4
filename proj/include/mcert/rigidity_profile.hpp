#pragma once

// Finite checks of the necessary conditions on a radial profile phi(x),
// x > 1, of an S_p-bounded radial Schur multiplier on SL_n(R): existence of
// a limit at infinity, the decay rates x^{-c_k} of phi - phi_inf and of the
// derivatives, and local Hoelder regularity of the top derivative.
//
// Each condition involves an unspecified constant, so a check measures the
// best constant on a grid and asks whether it stays bounded: a measured
// constant that keeps growing at the end of the grid is a failure.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mcert/errors.hpp"
#include "mcert/numeric.hpp"
#include "mcert/report.hpp"
#include "mcert/sphere_spectra.hpp"

namespace mcert::rigidity {

using Profile = std::function<double(double)>;

struct ProfileGrid {
    double t_min = 1e-3;   // x - 1 at the left end
    double x_max = 1e6;
    int per_decade = 10;
    double limit_x_max = std::ldexp(1.0, 60);
    double fail_growth = 0.1;      // decades of growth per decade of x
    double inconclusive_growth = 0.02;

    void validate() const {
        if (!(t_min > 0.0) || !(x_max > 100.0) || per_decade < 2 || !(limit_x_max > x_max))
            throw input_error("ProfileGrid: invalid grid");
    }

    std::vector<double> points() const {
        const int count = static_cast<int>(std::ceil(std::log10((x_max - 1.0) / t_min) * per_decade)) + 1;
        std::vector<double> xs;
        for (double t : log_spaced(t_min, x_max - 1.0, count)) xs.push_back(1.0 + t);
        return xs;
    }
};

// k-th derivative by central differences; the stencil half width k h / 2
// stays inside (1, infinity).
inline double profile_derivative(const Profile& phi, int k, double x) {
    if (k == 0) return phi(x);
    return central_derivative(phi, x, k, std::min(richardson_step(k) * x, (x - 1.0) / k));
}

struct LimitEstimate {
    bool exists = false;
    double value = std::numeric_limits<double>::quiet_NaN();
    double tail_spread = 0.0;  // oscillation over the last octaves
    double cauchy_slope = 0.0; // log-log slope of successive octave differences
};

// phi_inf from octave samples phi(2^i (1 + j/8)); the limit exists when the
// octave differences vanish or decay like a power of x.
inline LimitEstimate estimate_limit(const Profile& phi, double x_max = std::ldexp(1.0, 60)) {
    const int top = static_cast<int>(std::floor(std::log2(x_max)));
    std::vector<double> xs, diffs;
    double spread = 0.0, scale = 0.0;
    for (int i = top / 3; i < top; ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int j = 0; j <= 8; ++j) {
            const double v = phi(std::ldexp(1.0 + j / 8.0, i));
            if (!std::isfinite(v)) return {};
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            scale = std::max(scale, std::abs(v));
        }
        xs.push_back(std::ldexp(1.0, i));
        diffs.push_back(hi - lo);
        if (i >= top - 4) spread = std::max(spread, hi - lo);
    }
    LimitEstimate out;
    out.tail_spread = spread;
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
    const double last = phi(std::ldexp(1.0, top));
    if (spread <= floor) {
        out.exists = true;
        out.value = last;
        return out;
    }
    // slope over the second half of the octaves, ignoring differences at round-off level
    std::vector<double> lx, ld;
    for (std::size_t i = xs.size() / 2; i < xs.size(); ++i)
        if (diffs[i] > floor) {
            lx.push_back(std::log(xs[i]));
            ld.push_back(std::log(diffs[i]));
        }
    if (lx.size() < 3) {
        out.exists = true;
        out.value = last;
        return out;
    }
    out.cauchy_slope = fit_line(lx, ld).slope;
    if (out.cauchy_slope < -0.05) {
        out.exists = true;
        // the remaining tail is at most a geometric series in the octave differences
        const double q = std::exp2(out.cauchy_slope);
        const double d_last = phi(std::ldexp(1.0, top)) - phi(std::ldexp(1.0, top - 1));
        out.value = last + d_last * q / (1.0 - q);
    }
    return out;
}

struct GrowthMeasure {
    double sup = 0.0;     // largest measured constant on the grid
    double growth = 0.0;  // log10(max over last decade / max over the decade before)
    bool degenerate = false;  // measured quantity identically zero
};

inline GrowthMeasure measure_growth(const std::vector<double>& xs, const std::vector<double>& c) {
    GrowthMeasure g;
    const double x_end = xs.back();
    double last = 0.0, before = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        g.sup = std::max(g.sup, c[i]);
        if (xs[i] >= x_end / 10.0) last = std::max(last, c[i]);
        else if (xs[i] >= x_end / 100.0) before = std::max(before, c[i]);
    }
    if (last == 0.0 && before == 0.0) {
        g.degenerate = true;
        return g;
    }
    g.growth = before > 0.0 ? std::log10(last / before) : std::numeric_limits<double>::infinity();
    return g;
}

inline Verdict growth_verdict(const GrowthMeasure& g, const ProfileGrid& grid) {
    if (g.degenerate) return Verdict::pass;
    if (!std::isfinite(g.sup)) return Verdict::fail;
    if (g.growth > grid.fail_growth) return Verdict::fail;
    if (g.growth > grid.inconclusive_growth) return Verdict::inconclusive;
    return Verdict::pass;
}

inline CheckRecord limit_record(const LimitEstimate& lim) {
    CheckRecord r;
    r.name = "limit_at_infinity";
    r.anchor = "phi has a limit phi_inf as x -> infinity";
    r.measured = lim.tail_spread;
    r.bound = 0.0;
    r.tolerance = 0.05;
    r.verdict = lim.exists ? Verdict::pass : Verdict::fail;
    r.detail = {{"phi_inf", json_number(lim.value)}, {"cauchy_slope", json_number(lim.cauchy_slope)}};
    return r;
}

// |phi(x) - phi_inf| x^{c_0} bounded on (1, infinity).
inline CheckRecord decay_record(const Profile& phi, const LimitEstimate& lim, double c0, const ProfileGrid& grid) {
    CheckRecord r;
    r.name = "decay_k0";
    r.anchor = "|phi(x) - phi_inf| <= C x^{-c_0}";
    r.tolerance = grid.fail_growth;
    r.detail["c"] = c0;
    if (!lim.exists) {
        r.verdict = Verdict::inconclusive;
        r.measured = std::numeric_limits<double>::quiet_NaN();
        r.detail["reason"] = "no limit at infinity";
        return r;
    }
    const auto xs = grid.points();
    std::vector<double> c(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) c[i] = std::abs(phi(xs[i]) - lim.value) * std::pow(xs[i], c0);
    const auto g = measure_growth(xs, c);
    r.measured = g.sup;
    r.bound = g.sup;
    r.verdict = growth_verdict(g, grid);
    r.detail["growth_per_decade"] = json_number(g.growth);
    return r;
}

// |d^k phi(x)| (x - 1)^k x^{c_k} bounded on (1, infinity).
inline CheckRecord derivative_record(const Profile& phi, int k, double ck, const ProfileGrid& grid) {
    CheckRecord r;
    r.name = "decay_k" + std::to_string(k);
    r.anchor = "|d^k phi(x)| <= C (x - 1)^{-k} x^{-c_k}";
    r.tolerance = grid.fail_growth;
    r.detail["c"] = ck;
    r.detail["k"] = k;
    const auto xs = grid.points();
    std::vector<double> c(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        c[i] = std::abs(profile_derivative(phi, k, xs[i])) * std::pow(xs[i] - 1.0, k) * std::pow(xs[i], ck);
    const auto g = measure_growth(xs, c);
    r.measured = g.sup;
    r.bound = g.sup;
    r.verdict = growth_verdict(g, grid);
    r.detail["growth_per_decade"] = json_number(g.growth);
    return r;
}

// Hoelder quotient |D(x + h) - D(x)| / h^{theta} of D = d^k phi, theta the
// fractional part of alpha, swept over x in [x_lo, x_hi] with spacing h.
// Bounded regularity means the sup does not grow as h shrinks.
inline CheckRecord holder_record(const Profile& phi, int k, double theta, double x_lo = 1.5, double x_hi = 16.0,
                                 int coarsest = 3, int finest = 10) {
    CheckRecord r;
    r.name = "holder_k" + std::to_string(k);
    r.anchor = "|d^k phi(x) - d^k phi(y)| <= C |x - y|^{alpha - [alpha]} locally";
    r.tolerance = 0.1;
    r.detail["k"] = k;
    r.detail["theta"] = theta;
    std::vector<double> lh, ls;
    double sup_all = 0.0;
    for (int e = coarsest; e <= finest; ++e) {
        const double h = std::ldexp(1.0, -e);
        double sup = 0.0;
        double prev = profile_derivative(phi, k, x_lo);
        for (double x = x_lo; x + h <= x_hi; x += h) {
            const double next = profile_derivative(phi, k, x + h);
            sup = std::max(sup, std::abs(next - prev));
            prev = next;
        }
        sup /= std::pow(h, theta);
        sup_all = std::max(sup_all, sup);
        if (sup > 0.0) {
            lh.push_back(std::log(1.0 / h));
            ls.push_back(std::log(sup));
        }
    }
    r.measured = sup_all;
    r.bound = sup_all;
    if (lh.size() < 3) {
        r.verdict = Verdict::pass;  // D constant on the sweep
        return r;
    }
    // slope over the finest half of the sweep
    const std::size_t half = lh.size() / 2;
    const double slope = fit_line(std::span<const double>(lh).subspan(half), std::span<const double>(ls).subspan(half)).slope;
    r.detail["growth_slope"] = slope;
    r.verdict = slope > 0.1 ? Verdict::fail : (slope > 0.02 ? Verdict::inconclusive : Verdict::pass);
    return r;
}

// All profile records for the exponents of (n, p).
inline std::vector<CheckRecord> profile_records(const Profile& phi, int n, double p, const ProfileGrid& grid = {},
                                                double eps = 1e-3) {
    grid.validate();
    const auto ex = sphere::RigidityExponents::make(n, p, eps);
    std::vector<CheckRecord> out;
    const auto lim = estimate_limit(phi, grid.limit_x_max);
    out.push_back(limit_record(lim));
    out.push_back(decay_record(phi, lim, ex.c[0], grid));
    for (int k = 1; k <= ex.derivative_order(); ++k) out.push_back(derivative_record(phi, k, ex.c[k], grid));
    const double theta = ex.alpha - ex.derivative_order();
    if (theta > 0.0) out.push_back(holder_record(phi, ex.derivative_order(), theta));
    return out;
}

}  // namespace mcert::rigidity
