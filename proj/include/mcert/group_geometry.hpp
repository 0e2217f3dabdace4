#pragma once

// Geometry of SL_n(R): group elements, the Cartan (KAK) decomposition, the
// length L(g) and distance |_g_|, left-invariant Lie derivatives, Haar and
// Weyl-chamber integration, the Harish-Chandra function and the distortion
// constant of a nonnegative test function.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mcert/errors.hpp"
#include "mcert/numeric.hpp"

namespace mcert::geometry {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Element of SL_n(R), n >= 2. Construction validates finiteness and
// |det - 1| <= 1e-10 * cond(g).
class GroupElement {
public:
    explicit GroupElement(Matrix m) : m_(std::move(m)) { validate(); }

    static GroupElement identity(int n) {
        if (n < 2) throw input_error("GroupElement: n must be at least 2");
        return GroupElement(Matrix::Identity(n, n), trusted{});
    }

    // diag(e^{s_1}, ..., e^{s_n}); the exponents must sum to zero.
    static GroupElement diagonal(std::span<const double> exponents) {
        double sum = 0.0;
        for (double s : exponents) sum += s;
        if (std::abs(sum) > 1e-10 * std::max<double>(1.0, exponents.size()))
            throw domain_error("GroupElement::diagonal: exponents must sum to zero");
        Vector d(exponents.size());
        for (std::size_t i = 0; i < exponents.size(); ++i) d[i] = std::exp(exponents[i] - sum / exponents.size());
        return GroupElement(Matrix(d.asDiagonal()));
    }

    // Rescales a matrix with positive determinant onto SL_n(R).
    static GroupElement normalized(const Matrix& m) {
        const double det = m.determinant();
        if (!std::isfinite(det) || det <= 0.0)
            throw domain_error("GroupElement::normalized: determinant must be positive");
        return GroupElement(m / std::pow(det, 1.0 / m.rows()));
    }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    // Pair (g, g^{-1}) built as matching products, e.g. g exp(X) and
    // exp(-X) g^{-1}. Far from the identity this inverse is much more
    // accurate than inverting the rounded product, which matters inside
    // high-order difference stencils.
    static GroupElement with_inverse(Matrix m, Matrix inv) {
        GroupElement g(std::move(m));
        if (inv.rows() != g.m_.rows() || inv.cols() != g.m_.cols() || !inv.allFinite())
            throw input_error("GroupElement::with_inverse: bad inverse");
        g.inv_ = std::move(inv);
        return g;
    }

    bool has_exact_inverse() const { return inv_.size() != 0; }

    GroupElement inverse() const {
        if (has_exact_inverse()) return GroupElement(inv_, m_, trusted{});
        return GroupElement(m_.inverse(), trusted{});
    }

    friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
        if (a.dim() != b.dim()) throw input_error("GroupElement: dimension mismatch");
        if (a.has_exact_inverse() && b.has_exact_inverse()) return GroupElement(a.m_ * b.m_, b.inv_ * a.inv_, trusted{});
        return GroupElement(a.m_ * b.m_, trusted{});
    }

    // Right multiplication by exp(X) for X in sl_n; used for Lie derivatives.
    GroupElement times_exp(const Matrix& x) const {
        if (has_exact_inverse()) return GroupElement(m_ * x.exp(), (-x).exp() * inv_, trusted{});
        return GroupElement(m_ * x.exp(), trusted{});
    }

private:
    struct trusted {};
    GroupElement(Matrix m, trusted) : m_(std::move(m)) {}
    GroupElement(Matrix m, Matrix inv, trusted) : m_(std::move(m)), inv_(std::move(inv)) {}

    void validate() const {
        if (m_.rows() != m_.cols()) throw input_error("GroupElement: matrix must be square");
        if (m_.rows() < 2) throw input_error("GroupElement: n must be at least 2");
        if (!m_.allFinite()) throw input_error("GroupElement: non-finite entries");
        Eigen::PartialPivLU<Matrix> lu(m_);
        const double det = lu.determinant();
        const Matrix inv = lu.inverse();
        double cond = m_.lpNorm<1>() * inv.lpNorm<1>();
        if (!std::isfinite(cond)) cond = std::numeric_limits<double>::infinity();
        if (!(std::abs(det - 1.0) <= 1e-10 * std::max(1.0, cond)))
            throw domain_error("GroupElement: determinant " + std::to_string(det) + " is not 1");
    }

    Matrix m_;
    Matrix inv_;  // empty unless built as an exact pair
};

// Normalized Hilbert-Schmidt norm |A| = sqrt(tr(A^T A) / n).
inline double normalized_hs(const Matrix& a) { return std::sqrt(a.squaredNorm() / a.rows()); }

inline double operator_norm(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

struct CartanDecomposition {
    Matrix k1;                       // orthogonal, det +1
    std::vector<double> exponents;   // descending, zero sum
    Matrix k2;                       // orthogonal, det +1

    Matrix reconstruct() const {
        Vector d(exponents.size());
        for (std::size_t i = 0; i < exponents.size(); ++i) d[i] = std::exp(exponents[i]);
        return k1 * d.asDiagonal() * k2;
    }
};

inline CartanDecomposition kak_decompose(const GroupElement& g) {
    const int n = g.dim();
    Eigen::JacobiSVD<Matrix> svd(g.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) throw numeric_error("kak_decompose: SVD failed");
    CartanDecomposition out;
    out.k1 = svd.matrixU();
    out.k2 = svd.matrixV().transpose();
    // det g = 1 > 0 forces det U = det V; move both into SO(n)
    if (out.k1.determinant() < 0.0) {
        out.k1.col(n - 1) *= -1.0;
        out.k2.row(n - 1) *= -1.0;
    }
    const Vector& sv = svd.singularValues();
    out.exponents.resize(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(sv[i] > 0.0)) throw numeric_error("kak_decompose: vanishing singular value");
        out.exponents[i] = std::log(sv[i]);
        mean += out.exponents[i];
    }
    mean /= n;
    for (double& s : out.exponents) s -= mean;
    return out;
}

// L(g) = max(||g||, ||g^{-1}||) = exp(max(s_1, -s_n)).
inline double length_L(const GroupElement& g) {
    const auto kak = kak_decompose(g);
    return std::exp(std::max(kak.exponents.front(), -kak.exponents.back()));
}

// log L(g); the radius used for balls B_R = {log L <= R}.
inline double log_length(const GroupElement& g) {
    const auto kak = kak_decompose(g);
    return std::max(kak.exponents.front(), -kak.exponents.back());
}

// Concrete distance to the identity: max(min(|g - e|, 1), L(g) - 1).
inline double bracevert(const GroupElement& g) {
    const int n = g.dim();
    const double local = normalized_hs(g.matrix() - Matrix::Identity(n, n));
    if (local == 0.0) return 0.0;
    return std::max(std::min(local, 1.0), length_L(g) - 1.0);
}

// Smooth admissible distance (|g - e| + |g^{-1} - e|) / 2: comparable to
// |g - e| near e and to L(g) at infinity, smooth on G \ {e}. Used to build
// test symbols whose finite differences do not straddle kinks.
inline double smooth_distance(const GroupElement& g) {
    const int n = g.dim();
    const Matrix e = Matrix::Identity(n, n);
    return 0.5 * (normalized_hs(g.matrix() - e) + normalized_hs(g.inverse().matrix() - e));
}

// Orthonormal basis of sl_n(R) for <X, Y> = tr(X^T Y): off-diagonal matrix
// units in row-major order, then the normalized traceless diagonals
// (E_11 + ... + E_kk - k E_{k+1,k+1}) / sqrt(k (k + 1)).
struct LieBasis {
    int n = 0;
    std::vector<Matrix> elements;

    static LieBasis make(int n) {
        if (n < 2) throw input_error("LieBasis: n must be at least 2");
        LieBasis b;
        b.n = n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) {
                    Matrix x = Matrix::Zero(n, n);
                    x(i, j) = 1.0;
                    b.elements.push_back(std::move(x));
                }
        for (int k = 1; k < n; ++k) {
            Matrix x = Matrix::Zero(n, n);
            const double scale = 1.0 / std::sqrt(k * (k + 1.0));
            for (int i = 0; i < k; ++i) x(i, i) = scale;
            x(k, k) = -k * scale;
            b.elements.push_back(std::move(x));
        }
        return b;
    }

    int size() const { return static_cast<int>(elements.size()); }
    const Matrix& operator[](int j) const { return elements.at(j); }
};

// Ordered tuple (j_1, ..., j_k) of zero-based basis indices.
struct MultiIndex {
    std::vector<int> indices;
    int order() const { return static_cast<int>(indices.size()); }
};

// Complex-valued symbol on SL_n(R).
struct GroupSymbol {
    std::function<std::complex<double>(const GroupElement&)> eval;
    bool radial = false;
    std::optional<double> support_radius;  // in units of log L

    std::complex<double> operator()(const GroupElement& g) const { return eval(g); }
};

inline int default_hm_order(int n) { return n * n / 2 + 1; }

// Step used for Lie derivatives of order k at g: the Richardson-balanced
// fraction, shrunk with |_g_| near the identity where symbols may be
// singular.
inline double default_lie_step(const GroupElement& g, int order) {
    const double dist = bracevert(g);
    return richardson_step(order) * std::clamp(dist, 1e-6, 1.0);
}

// d^gamma m(g) = d_{X_{j1}} ... d_{X_{jk}} m(g), i.e. the mixed partial at
// zero of s -> m(g exp(s_1 X_{j1}) ... exp(s_k X_{jk})).
inline std::complex<double> lie_derivative(const GroupSymbol& m, const GroupElement& g, const MultiIndex& gamma,
                                           const LieBasis& basis, double h, int max_order = -1) {
    if (basis.n != g.dim()) throw input_error("lie_derivative: basis dimension mismatch");
    const int k = gamma.order();
    if (max_order < 0) max_order = default_hm_order(g.dim());
    if (k > max_order) throw input_error("lie_derivative: order exceeds configured maximum");
    for (int j : gamma.indices)
        if (j < 0 || j >= basis.size()) throw input_error("lie_derivative: basis index out of range");
    if (k == 0) return m(g);
    if (!(h > 0.0) || !std::isfinite(h)) throw input_error("lie_derivative: step must be positive");
    if (std::pow(0.5 * h, k) < 1e-290) throw numeric_error("lie_derivative: step underflow");
    std::vector<int> orders(k, 1);
    // g^{-1} is computed once; along the stencil the inverse is propagated as
    // exp(-s X) g^{-1} so that every point sees the same rounding of g^{-1}
    const Matrix g_inv = g.inverse().matrix();
    auto f = [&](const std::vector<double>& s) {
        Matrix acc = g.matrix(), inv = g_inv;
        for (int i = 0; i < k; ++i) {
            const Matrix x = s[i] * basis[gamma.indices[i]];
            acc = acc * x.exp();
            inv = (-x).exp() * inv;
        }
        return m(GroupElement::with_inverse(std::move(acc), std::move(inv)));
    };
    return mixed_central_difference<std::complex<double>>(f, std::span<const int>(orders), h);
}

// Haar-distributed element of SO(n): QR of a Gaussian matrix with the
// positive-diagonal correction, then a reflection fix for det = +1.
inline Matrix haar_orthogonal(int n, Rng& rng) {
    Matrix a(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    const Matrix& r = qr.matrixQR();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0.0) q.col(i) *= -1.0;
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    return q;
}

// Chamber helpers. Points of the positive Weyl chamber are parametrized by
// gaps a_i = Z_i - Z_{i+1} >= 0, i = 1..n-1.
namespace detail {

inline std::vector<double> gaps_to_exponents(std::span<const double> gaps) {
    const int n = static_cast<int>(gaps.size()) + 1;
    std::vector<double> z(n, 0.0);
    for (int i = n - 2; i >= 0; --i) z[i] = z[i + 1] + gaps[i];
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= n;
    for (double& v : z) v -= mean;
    return z;
}

// Coefficients of Z_1 and -Z_n as linear forms in the gaps.
inline double top_weight(int n, int i) { return static_cast<double>(n - 1 - i) / n; }     // i zero-based
inline double bottom_weight(int n, int i) { return static_cast<double>(i + 1) / n; }

inline double sinh_product(std::span<const double> z) {
    double p = 1.0;
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t k = j + 1; k < z.size(); ++k) p *= std::sinh(z[j] - z[k]);
    return p;
}

// Nested Gauss-Legendre over {a >= 0, Z_1 <= R, -Z_n <= R} with `nodes`
// points per level.
inline double chamber_integral(int n, double radius, int nodes) {
    const auto& rule = gauss_legendre(nodes);
    std::vector<double> gaps(n - 1, 0.0);
    std::function<double(int, double, double)> level = [&](int i, double top, double bottom) -> double {
        const double upper = std::min(top / top_weight(n, i), bottom / bottom_weight(n, i));
        if (upper <= 0.0) return 0.0;
        double sum = 0.0;
        for (int q = 0; q < nodes; ++q) {
            const double a = 0.5 * upper * (rule.nodes[q] + 1.0);
            gaps[i] = a;
            double inner;
            if (i == n - 2) {
                const auto z = gaps_to_exponents(gaps);
                inner = sinh_product(z);
            } else {
                inner = level(i + 1, top - top_weight(n, i) * a, bottom - bottom_weight(n, i) * a);
            }
            sum += rule.weights[q] * inner;
        }
        gaps[i] = 0.0;
        return 0.5 * upper * sum;
    };
    return level(0, radius, radius);
}

// n = 3 in (u, v) = (Z_1, -Z_3) coordinates, split at the kink u = R/2 so
// each piece has a smooth integrand and linear limits.
inline double chamber_integral_sl3(double radius, int nodes) {
    // gaps a = 2u - v, b = 2v - u; Jacobian |d(a,b)/d(u,v)| = 3
    auto integrand = [](double u, double v) {
        const double a = 2.0 * u - v, b = 2.0 * v - u;
        return 3.0 * std::sinh(a) * std::sinh(b) * std::sinh(a + b);
    };
    auto strip = [&](double u0, double u1, auto vlo, auto vhi) {
        return integrate_gl(
            [&](double u) {
                return integrate_gl([&](double v) { return integrand(u, v); }, vlo(u), vhi(u), nodes);
            },
            u0, u1, nodes);
    };
    const double r = radius;
    const double lower = strip(0.0, 0.5 * r, [](double u) { return 0.5 * u; }, [](double u) { return 2.0 * u; });
    const double upper = strip(0.5 * r, r, [](double u) { return 0.5 * u; }, [r](double) { return r; });
    return lower + upper;
}

}  // namespace detail

struct VolumeEstimate {
    double value = 0.0;
    double relative_error = 0.0;
};

// Haar measure of B_R = {g : log L(g) <= R} via the Weyl integration
// formula: integral of prod_{j<k} sinh(Z_j - Z_k) over the chamber, with the
// gap coordinates' Lebesgue measure and K-factors of mass 1.
inline VolumeEstimate weyl_ball_volume(int n, double radius) {
    if (n < 2 || n > 5) throw input_error("weyl_ball_volume: n must be in 2..5");
    if (!std::isfinite(radius) || radius < 0.0) throw input_error("weyl_ball_volume: radius must be nonnegative");
    if (radius == 0.0) return {0.0, 0.0};
    auto eval = [&](int nodes) {
        if (n == 3) return detail::chamber_integral_sl3(radius, nodes);
        return detail::chamber_integral(n, radius, nodes);
    };
    const int base = n <= 3 ? 48 : (n == 4 ? 24 : 14);
    const double coarse = eval(base);
    const double fine = eval(2 * base);
    VolumeEstimate out;
    out.value = fine;
    out.relative_error = fine > 0.0 ? std::abs(fine - coarse) / fine : 0.0;
    if (out.relative_error > 0.05)
        throw accuracy_error("weyl_ball_volume: quadrature did not converge", out.relative_error);
    return out;
}

// Haar-uniform element of B_R: chamber point with density prod sinh by
// rejection from exp(2 rho) on the gap box, K-factors Haar.
inline GroupElement sample_ball(int n, double radius, Rng& rng, long max_proposals = 100'000'000) {
    if (!(radius > 0.0)) throw input_error("sample_ball: radius must be positive");
    std::vector<double> rate(n - 1), upper(n - 1), gaps(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        rate[i] = static_cast<double>((i + 1) * (n - 1 - i));
        upper[i] = std::min(radius / detail::top_weight(n, i), radius / detail::bottom_weight(n, i));
    }
    for (long trial = 0; trial < max_proposals; ++trial) {
        double top = 0.0, bottom = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            // density proportional to exp(rate * a) on [0, upper]
            const double u = rng.uniform();
            const double c = rate[i] * upper[i];
            gaps[i] = upper[i] + std::log(u + (1.0 - u) * std::exp(-c)) / rate[i];
            top += detail::top_weight(n, i) * gaps[i];
            bottom += detail::bottom_weight(n, i) * gaps[i];
        }
        if (top > radius || bottom > radius) continue;
        const auto z = detail::gaps_to_exponents(gaps);
        double accept = 1.0;
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k) accept *= -std::expm1(-2.0 * (z[j] - z[k]));
        if (rng.uniform() > accept) continue;
        Vector d(n);
        for (int i = 0; i < n; ++i) d[i] = std::exp(z[i]);
        const Matrix k1 = haar_orthogonal(n, rng);
        const Matrix k2 = haar_orthogonal(n, rng);
        return GroupElement(k1 * d.asDiagonal() * k2);
    }
    throw accuracy_error("sample_ball: rejection sampler exhausted its budget", 1.0);
}

// log of the modular factor Delta(p) = prod d_i^{n+1-2i} of the triangular
// part of g = k p.
inline double log_modular(const Matrix& g) {
    const int n = static_cast<int>(g.rows());
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix& r = qr.matrixQR();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = std::abs(r(i, i));
        if (!(d > 0.0) || !std::isfinite(d)) throw numeric_error("harish_chandra_xi: QR breakdown");
        acc += (n - 1 - 2 * i) * std::log(d);  // exponent n + 1 - 2(i + 1)
    }
    return acc;
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Xi(g) = int_K Delta(gk)^{-1/2} dk by Monte Carlo over Haar-random k.
inline MonteCarloEstimate harish_chandra_xi(const GroupElement& g, long samples, std::uint64_t seed) {
    if (samples < 1) throw input_error("harish_chandra_xi: samples must be positive");
    Rng rng(seed);
    const int n = g.dim();
    CompensatedSum sum, sum_sq;
    for (long s = 0; s < samples; ++s) {
        const Matrix k = haar_orthogonal(n, rng);
        const double v = std::exp(-0.5 * log_modular(g.matrix() * k));
        sum.add(v);
        sum_sq.add(v * v);
    }
    MonteCarloEstimate out;
    out.value = sum.value() / samples;
    const double var = std::max(0.0, sum_sq.value() / samples - out.value * out.value);
    out.std_error = samples > 1 ? std::sqrt(var / (samples - 1)) : 0.0;
    return out;
}

struct DistortionEstimate {
    double value = 0.0;                // sup over Omega
    double norm_squared = 0.0;         // Monte Carlo ||phi||_2^2
    std::vector<double> per_element;   // (1/2) int |phi(gh) - phi(h)|^2 for each g
};

// sup_{g in Omega} (1/2) int |phi(gh) - phi(h)|^2 dmu(h) for phi >= 0
// supported in B_R (R = support_radius). Uses
// (1/2) int |phi(g.) - phi|^2 = ||phi||^2 - int phi(gh) phi(h) dmu(h)
// with h sampled Haar-uniformly from B_R.
inline DistortionEstimate distortion_constant(const GroupSymbol& phi, std::span<const GroupElement> omega,
                                              long haar_samples, std::uint64_t seed) {
    if (omega.empty()) throw input_error("distortion_constant: empty Omega sample");
    if (!phi.support_radius || !(*phi.support_radius > 0.0))
        throw input_error("distortion_constant: phi needs a positive support radius");
    if (haar_samples < 1) throw input_error("distortion_constant: samples must be positive");
    const int n = omega.front().dim();
    const double radius = *phi.support_radius;
    const double volume = weyl_ball_volume(n, radius).value;
    Rng rng(seed);
    std::vector<GroupElement> hs;
    std::vector<double> phi_h;
    hs.reserve(haar_samples);
    CompensatedSum norm, norm_sq;
    for (long s = 0; s < haar_samples; ++s) {
        hs.push_back(sample_ball(n, radius, rng));
        const double v = phi(hs.back()).real();
        if (v < 0.0) throw domain_error("distortion_constant: phi must be nonnegative");
        phi_h.push_back(v);
        norm.add(v * v);
        norm_sq.add(v * v * v * v);
    }
    DistortionEstimate out;
    out.norm_squared = volume * norm.value() / haar_samples;
    // allow for Monte Carlo noise in the check itself
    const double mean = norm.value() / haar_samples;
    const double spread = std::sqrt(std::max(0.0, norm_sq.value() / haar_samples - mean * mean) / haar_samples);
    if (std::abs(out.norm_squared - 1.0) > std::max(1e-3, 4.0 * volume * spread))
        throw domain_error("distortion_constant: phi is not L2-normalized (measured ||phi||^2 = " +
                           std::to_string(out.norm_squared) + ")");
    for (const auto& g : omega) {
        if (g.dim() != n) throw input_error("distortion_constant: dimension mismatch in Omega");
        CompensatedSum overlap;
        for (std::size_t s = 0; s < hs.size(); ++s)
            if (phi_h[s] != 0.0) overlap.add(phi(g * hs[s]).real() * phi_h[s]);
        const double value = std::max(0.0, out.norm_squared - volume * overlap.value() / haar_samples);
        out.per_element.push_back(value);
        out.value = std::max(out.value, value);
    }
    return out;
}

}  // namespace mcert::geometry
