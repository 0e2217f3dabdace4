#pragma once

// Symbol analysis on R^d: Littlewood-Paley partitions, the fractional
// laplacian length psi_eps, Mikhlin constants by finite differences,
// transform-based Sobolev norms, local inversion of matrices and the
// homogeneous twisted symbols |xi|^eps / |g xi|^eps.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "mcert/errors.hpp"
#include "mcert/group_geometry.hpp"
#include "mcert/numeric.hpp"

namespace mcert::euclid {

using Point = Eigen::VectorXd;
using Complex = std::complex<double>;

struct EuclideanSymbol {
    int d = 1;
    std::function<Complex(const Point&)> eval;
    std::optional<double> support_radius;  // M vanishes for |xi| > support_radius
    std::optional<double> support_inner;   // M vanishes for |xi| < support_inner

    Complex operator()(const Point& xi) const { return eval(xi); }
};

// e^{-1/u} glued into a C^infinity step: 1 on [0, 1], 0 on [2, inf).
inline double smooth_plateau(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double a = std::exp(-1.0 / (2.0 - t));
    const double b = std::exp(-1.0 / (t - 1.0));
    return a / (a + b);
}

struct DyadicPartition {
    std::function<double(double)> eta = smooth_plateau;  // radial profile of eta
    int j_min = -60;
    int j_max = 60;

    static DyadicPartition standard() { return {}; }
};

// phi_j(xi) = (eta(2^{-j} xi) - eta(2^{1-j} xi))^{1/2}
inline double lp_partition_value(const DyadicPartition& p, int j, const Point& xi) {
    const double r = xi.norm();
    const double v = p.eta(std::ldexp(r, -j)) - p.eta(std::ldexp(r, 1 - j));
    return std::sqrt(std::max(0.0, v));
}

// sigma_j = (2N + 1)^{-1} sum_{k = j-N}^{j+N} phi_k^2
inline double sigma_partition_value(const DyadicPartition& p, int n_width, int j, const Point& xi) {
    if (n_width < 1) throw input_error("sigma_partition_value: N must be at least 1");
    double sum = 0.0;
    for (int k = j - n_width; k <= j + n_width; ++k) {
        const double phi = lp_partition_value(p, k, xi);
        sum += phi * phi;
    }
    return sum / (2 * n_width + 1);
}

// psi_eps(xi) = 2 int (1 - cos(2 pi <xi, x>)) dx / |x|^{d + 2 eps} = c_{d,eps} |xi|^{2 eps}.
class FracLaplacianLength {
public:
    FracLaplacianLength(int d, double eps) : d_(d), eps_(eps) {
        if (d < 1) throw input_error("FracLaplacianLength: d must be positive");
        if (!(eps > 0.0 && eps < 1.0)) throw domain_error("FracLaplacianLength: eps must lie in (0, 1)");
        constant_ = 2.0 * std::pow(2.0 * pi, 2.0 * eps) * radial_integral(eps) * sphere_moment(d, eps);
    }

    int d() const { return d_; }
    double eps() const { return eps_; }
    double constant() const { return constant_; }

    double operator()(const Point& xi) const {
        const double r = xi.norm();
        return r == 0.0 ? 0.0 : constant_ * std::pow(r, 2.0 * eps_);
    }

    // int_0^inf (1 - cos t) t^{-1-2 eps} dt: Gauss-Legendre on dyadic pieces
    // of [0, 1] plus the tail 1/(2 eps) - int_1^inf cos t t^{-1-2 eps} dt, the
    // latter rotated onto t = 1 + iu where it decays like e^{-u}.
    static double radial_integral(double eps) {
        const double beta = 1.0 + 2.0 * eps;
        auto body = [beta](double t) {
            // 1 - cos t without cancellation
            const double s = std::sin(0.5 * t);
            return 2.0 * s * s * std::pow(t, -beta);
        };
        CompensatedSum head;
        const int pieces = 60;
        for (int k = 0; k < pieces; ++k)
            head.add(integrate_gl(body, std::ldexp(1.0, -k - 1), std::ldexp(1.0, -k), 20));
        const double delta = std::ldexp(1.0, -pieces);
        head.add(std::pow(delta, 2.0 - 2.0 * eps) / (2.0 * (2.0 - 2.0 * eps)));

        auto rotated = [beta](double u) { return std::exp(-u) * std::pow(Complex(1.0, u), -beta); };
        Complex rot = 0.0;
        for (int k = 0; k < 12; ++k) {
            const double a = 4.0 * k, b = 4.0 * (k + 1);
            const auto& rule = gauss_legendre(32);
            Complex part = 0.0;
            for (int q = 0; q < 32; ++q) part += rule.weights[q] * rotated(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[q]);
            rot += 0.5 * (b - a) * part;
        }
        const Complex cos_tail = Complex(0.0, 1.0) * std::exp(Complex(0.0, 1.0)) * rot;
        return head.value() + 1.0 / (2.0 * eps) - cos_tail.real();
    }

    // int_{S^{d-1}} |omega_1|^{2 eps} d omega
    static double sphere_moment(int d, double eps) {
        return 2.0 * std::pow(pi, 0.5 * (d - 1)) * std::tgamma(eps + 0.5) / std::tgamma(0.5 * d + eps);
    }

private:
    int d_;
    double eps_;
    double constant_;
};

inline double frac_laplacian_length(int d, double eps, const Point& xi) { return FracLaplacianLength(d, eps)(xi); }

struct GridSpec {
    int d = 1;
    std::vector<double> radii;        // strictly increasing
    int directions = 2;               // angular nodes per level
    int fft_points = 256;             // per axis, transform-based norms
    double box_half_width = 0.0;      // 0: derive from support metadata
    std::uint64_t seed = 1;           // for d >= 3 direction designs

    static GridSpec standard(int d) {
        GridSpec g;
        g.d = d;
        g.radii = log_spaced(std::ldexp(1.0, -12), std::ldexp(1.0, 12), 25);
        g.directions = d == 1 ? 2 : (d == 2 ? 32 : 48);
        g.fft_points = d == 1 ? 4096 : (d == 2 ? 256 : (d == 3 ? 64 : 16));
        return g;
    }

    void validate() const {
        if (d < 1) throw input_error("GridSpec: d must be positive");
        if (radii.empty() || directions < 1 || fft_points < 8) throw input_error("GridSpec: counts must be positive");
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!(radii[i] > 0.0)) throw input_error("GridSpec: radii must be positive");
            if (i > 0 && !(radii[i] > radii[i - 1])) throw input_error("GridSpec: radii must increase");
        }
    }

    // Unit directions: +-1 for d = 1, equispaced angles for d = 2, seeded
    // Gaussian directions plus the coordinate axes otherwise.
    std::vector<Point> direction_design() const {
        std::vector<Point> out;
        if (d == 1) {
            out.push_back(Point::Constant(1, 1.0));
            out.push_back(Point::Constant(1, -1.0));
            return out;
        }
        if (d == 2) {
            for (int i = 0; i < directions; ++i) {
                const double t = 2.0 * pi * (i + 0.5) / directions;
                Point p(2);
                p << std::cos(t), std::sin(t);
                out.push_back(p);
            }
            return out;
        }
        for (int i = 0; i < d; ++i) out.push_back(Point::Unit(d, i));
        Rng rng(seed);
        while (static_cast<int>(out.size()) < std::max(directions, d)) {
            Point p(d);
            for (int i = 0; i < d; ++i) p[i] = rng.normal();
            out.push_back(p / p.norm());
        }
        return out;
    }
};

// All gamma in N^d with |gamma| <= order.
inline std::vector<std::vector<int>> multi_indices(int d, int order) {
    std::vector<std::vector<int>> out;
    std::vector<int> g(d, 0);
    std::function<void(int, int)> rec = [&](int axis, int left) {
        if (axis == d) {
            out.push_back(g);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            g[axis] = k;
            rec(axis + 1, left - k);
        }
        g[axis] = 0;
    };
    rec(0, order);
    return out;
}

// d^gamma M at xi by central differences with step tau_k |xi|.
inline Complex symbol_partial(const EuclideanSymbol& m, const Point& xi, std::span<const int> gamma) {
    std::vector<int> axes, orders;
    int total = 0;
    for (std::size_t i = 0; i < gamma.size(); ++i)
        if (gamma[i] > 0) {
            axes.push_back(static_cast<int>(i));
            orders.push_back(gamma[i]);
            total += gamma[i];
        }
    if (total == 0) return m(xi);
    const double h = richardson_step(total) * xi.norm();
    Point x = xi;
    return mixed_central_difference<Complex>(
        [&](const std::vector<double>& off) {
            for (std::size_t a = 0; a < axes.size(); ++a) x[axes[a]] = xi[axes[a]] + off[a];
            return m(x);
        },
        std::span<const int>(orders), h);
}

struct MikhlinResult {
    double value = 0.0;                 // grid sup of |xi|^|gamma| |d^gamma M(xi)|
    bool unbounded = false;             // sup still growing at an end of the radial range
    std::vector<double> level_sup;      // per radius
    long singular_points = 0;           // non-finite derivatives, excluded
    double worst_radius = 0.0;
    std::vector<int> worst_gamma;
};

inline MikhlinResult mikhlin_constant(const EuclideanSymbol& m, int order, const GridSpec& grid) {
    grid.validate();
    if (order < 0) throw input_error("mikhlin_constant: order must be nonnegative");
    if (grid.d != m.d) throw input_error("mikhlin_constant: grid dimension mismatch");
    const auto dirs = grid.direction_design();
    const auto gammas = multi_indices(m.d, order);
    MikhlinResult out;
    out.level_sup.assign(grid.radii.size(), 0.0);
    for (std::size_t l = 0; l < grid.radii.size(); ++l) {
        const double r = grid.radii[l];
        for (const auto& w : dirs) {
            const Point xi = r * w;
            for (const auto& gamma : gammas) {
                int k = 0;
                for (int v : gamma) k += v;
                const Complex dv = symbol_partial(m, xi, gamma);
                if (!std::isfinite(dv.real()) || !std::isfinite(dv.imag())) {
                    ++out.singular_points;
                    continue;
                }
                const double val = std::pow(r, k) * std::abs(dv);
                if (val > out.level_sup[l]) out.level_sup[l] = val;
                if (val > out.value) {
                    out.value = val;
                    out.worst_radius = r;
                    out.worst_gamma = gamma;
                }
            }
        }
    }
    // growth test on the outer and inner quarters of the radial range
    const std::size_t levels = grid.radii.size();
    const std::size_t span_len = std::max<std::size_t>(3, levels / 4);
    if (levels >= 4) {
        auto slope = [&](std::size_t from) {
            std::vector<double> x, y;
            for (std::size_t i = from; i < from + span_len && i < levels; ++i) {
                x.push_back(std::log(grid.radii[i]));
                y.push_back(std::log(std::max(out.level_sup[i], 1e-300)));
            }
            return fit_line(x, y).slope;
        };
        out.unbounded = slope(levels - span_len) > 0.05 || slope(0) < -0.05;
    }
    return out;
}

namespace detail {

inline std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

struct TransformNorm {
    double value = 0.0;
    double leakage = 0.0;
};

// sqrt(int w(k)^2 |F f(k)|^2 dk) for f sampled on [-L, L)^d with n points
// per axis; F f(k) = int f(x) e^{-2 pi i <k, x>} dx.
inline TransformNorm transform_norm(const std::function<Complex(const Point&)>& f, int d, double half_width, int n,
                                    const std::function<double(const Point&)>& weight) {
    double total_d = std::pow(static_cast<double>(n), d);
    if (total_d > double(1 << 24)) throw input_error("transform_norm: grid too large");
    const std::size_t total = static_cast<std::size_t>(total_d);
    const double h = 2.0 * half_width / n;
    fftw_complex* buf = fftw_alloc_complex(total);
    std::vector<int> dims(d, n);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft(d, dims.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    std::vector<int> idx(d, 0);
    Point x(d);
    double peak = 0.0, edge = 0.0;
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rest = lin;
        bool on_edge = false;
        for (int a = d - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rest % n);
            rest /= n;
            x[a] = -half_width + idx[a] * h;
            if (idx[a] == 0) on_edge = true;
        }
        const Complex v = f(x);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw numeric_error("transform_norm: symbol not finite on the grid");
        buf[lin][0] = v.real();
        buf[lin][1] = v.imag();
        peak = std::max(peak, std::abs(v));
        if (on_edge) edge = std::max(edge, std::abs(v));
    }
    fftw_execute(plan);
    const double dk = 1.0 / (2.0 * half_width);
    Point k(d);
    CompensatedSum acc;
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rest = lin;
        for (int a = d - 1; a >= 0; --a) {
            const int m = static_cast<int>(rest % n);
            rest /= n;
            k[a] = (m < n / 2 ? m : m - n) * dk;
        }
        const double w = weight(k);
        const double mod2 = buf[lin][0] * buf[lin][0] + buf[lin][1] * buf[lin][1];
        acc.add(w * w * mod2);
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    TransformNorm out;
    out.value = std::sqrt(acc.value() * std::pow(h, 2.0 * d) * std::pow(dk, d));
    out.leakage = peak > 0.0 ? edge / peak : 0.0;
    return out;
}

inline double box_for(const EuclideanSymbol& m, const GridSpec& grid) {
    if (grid.box_half_width > 0.0) {
        if (m.support_radius && *m.support_radius >= grid.box_half_width)
            throw accuracy_error("sobolev norm: support exceeds the sampling box",
                                 *m.support_radius / grid.box_half_width);
        return grid.box_half_width;
    }
    if (!m.support_radius) throw input_error("sobolev norm: need a box width or support radius");
    return 1.25 * *m.support_radius;
}

}  // namespace detail

struct SobolevNorm {
    double value = 0.0;
    double refinement_error = 0.0;  // relative change against half resolution
    double leakage = 0.0;           // boundary-to-peak ratio of the samples
};

inline constexpr double kLeakageTolerance = 1e-8;
inline constexpr double kRefinementTolerance = 1e-2;

namespace detail {

inline SobolevNorm refined_norm(const std::function<Complex(const Point&)>& f, int d, double box, int n,
                                const std::function<double(const Point&)>& weight) {
    const auto fine = transform_norm(f, d, box, n, weight);
    if (fine.leakage > kLeakageTolerance)
        throw accuracy_error("sobolev norm: support leaks out of the sampling box", fine.leakage);
    const auto coarse = transform_norm(f, d, box, n / 2, weight);
    SobolevNorm out;
    out.value = fine.value;
    out.leakage = fine.leakage;
    out.refinement_error = fine.value > 0.0 ? std::abs(fine.value - coarse.value) / fine.value : 0.0;
    if (out.refinement_error > kRefinementTolerance)
        throw accuracy_error("sobolev norm: not stable under grid refinement", out.refinement_error);
    return out;
}

}  // namespace detail

// ||(1 + |k|^2)^{alpha/2} F M||_{L2(R^d)}
inline SobolevNorm sobolev_norm_H(const EuclideanSymbol& m, double alpha, const GridSpec& grid) {
    grid.validate();
    if (grid.d != m.d) throw input_error("sobolev_norm_H: grid dimension mismatch");
    const double box = detail::box_for(m, grid);
    return detail::refined_norm(m.eval, m.d, box, grid.fft_points,
                                [alpha](const Point& k) { return std::pow(1.0 + k.squaredNorm(), 0.5 * alpha); });
}

// ||  |x|^{d/2 + eps} F(sqrt(psi_eps) M)  ||_{L2(R^d)}
inline SobolevNorm sobolev_norm_W(const EuclideanSymbol& m, int d, double eps, const GridSpec& grid) {
    grid.validate();
    if (grid.d != d || m.d != d) throw input_error("sobolev_norm_W: dimension mismatch");
    if (!m.support_inner || !(*m.support_inner > 0.0))
        throw domain_error("sobolev_norm_W: symbol support must stay away from 0");
    const FracLaplacianLength psi(d, eps);
    const double box = detail::box_for(m, grid);
    const double power = 0.5 * d + eps;
    return detail::refined_norm(
        [&](const Point& xi) {
            const double r = xi.norm();
            if (r < *m.support_inner) return Complex(0.0);
            return std::sqrt(psi(xi)) * m(xi);
        },
        d, box, grid.fft_points, [power](const Point& x) { return std::pow(x.norm(), power); });
}

using geometry::Matrix;

// I(A) = (A + e)^{-1} - e
inline Matrix local_inversion(const Matrix& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) throw input_error("local_inversion: matrix must be square");
    if (!a.allFinite()) throw input_error("local_inversion: non-finite entries");
    const Matrix b = a + Matrix::Identity(a.rows(), a.cols());
    Eigen::JacobiSVD<Matrix> svd(b);
    const auto& s = svd.singularValues();
    const double cond = s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(cond < 1.0 / tol)) throw domain_error("local_inversion: A + e is singular to working precision");
    return b.fullPivLu().inverse() - Matrix::Identity(a.rows(), a.cols());
}

// M_g(xi) = |xi|^eps / |g xi|^eps on R^{n^2}, xi read row-major as an n x n
// matrix and |.| the Frobenius norm.
inline EuclideanSymbol twisted_symbol(const geometry::GroupElement& g, double eps) {
    const int n = g.dim();
    const Matrix gm = g.matrix();
    EuclideanSymbol s;
    s.d = n * n;
    s.eval = [gm, n, eps](const Point& xi) {
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            xi.data(), n, n);
        const double top = x.norm(), bottom = (gm * x).norm();
        return Complex(std::pow(top / bottom, eps));
    };
    return s;
}

inline MikhlinResult twisted_homogeneous_mikhlin(std::span<const geometry::GroupElement> sigma, double eps,
                                                 int order, const GridSpec& grid) {
    if (sigma.empty()) throw input_error("twisted_homogeneous_mikhlin: empty sample");
    const int n = sigma.front().dim();
    if (grid.d != n * n) throw input_error("twisted_homogeneous_mikhlin: grid must have d = n^2");
    MikhlinResult best;
    for (const auto& g : sigma) {
        if (g.dim() != n) throw input_error("twisted_homogeneous_mikhlin: dimension mismatch");
        auto r = mikhlin_constant(twisted_symbol(g, eps), order, grid);
        if (r.value >= best.value) {
            r.singular_points += best.singular_points;
            r.unbounded = r.unbounded || best.unbounded;
            best = std::move(r);
        } else {
            best.singular_points += r.singular_points;
            best.unbounded = best.unbounded || r.unbounded;
        }
    }
    return best;
}

}  // namespace mcert::euclid
