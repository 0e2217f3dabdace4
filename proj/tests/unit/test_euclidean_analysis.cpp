#include <gtest/gtest.h>

#include <cmath>
#include <iostream>

#include "mcert/euclidean_analysis.hpp"

using namespace mcert;
using namespace mcert::euclid;

namespace {

Point random_point(int d, Rng& rng, double lo = 1e-3, double hi = 1e3) {
    Point p(d);
    for (int i = 0; i < d; ++i) p[i] = rng.normal();
    return p / p.norm() * std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

// J(a) = int_0^inf (1 - cos(a r)) r^{-1-2 eps} dr summed period by period,
// with an integration-by-parts tail.
double radial_by_periods(double a, double eps, int periods = 400) {
    const double beta = 1.0 + 2.0 * eps;
    const double period = 2.0 * pi / a;
    auto f = [&](double r) {
        const double s = std::sin(0.5 * a * r);
        return 2.0 * s * s * std::pow(r, -beta);
    };
    CompensatedSum sum;
    for (int k = 0; k < 80; ++k) sum.add(integrate_gl(f, period * std::ldexp(1.0, -k - 1), period * std::ldexp(1.0, -k), 24));
    for (int m = 1; m < periods; ++m) sum.add(integrate_gl(f, m * period, (m + 1) * period, 24));
    const double t = periods * period;
    // int_T^inf r^{-beta} - int_T^inf cos(a r) r^{-beta}, a T a multiple of 2 pi
    sum.add(std::pow(t, -2.0 * eps) / (2.0 * eps) - beta / (a * a * std::pow(t, beta + 1.0)));
    return sum.value();
}

// psi_eps(xi) by direct quadrature, no homogeneity used in the radial variable.
double psi_direct(int d, double eps, double radius) {
    const double a = 2.0 * pi * radius;
    if (d == 1) return 4.0 * radial_by_periods(a, eps);
    // d = 2: psi = 8 int_0^{pi/2} J(a cos theta) d theta, refined toward pi/2
    CompensatedSum sum;
    const double top = 0.5 * pi;
    for (int k = 0; k < 30; ++k) {
        const double lo = top - top * std::ldexp(1.0, -k), hi = top - top * std::ldexp(1.0, -k - 1);
        sum.add(integrate_gl([&](double th) { return radial_by_periods(a * std::cos(th), eps, 150); }, lo, hi, 12));
    }
    return 8.0 * sum.value();
}

EuclideanSymbol annular_bump(int d, double scale = 1.0) {
    const DyadicPartition p;
    EuclideanSymbol m;
    m.d = d;
    m.eval = [p, scale](const Point& xi) {
        const double phi = lp_partition_value(p, 0, xi / scale);
        const double tilt = 1.0 + 0.3 * xi[0] / (xi.norm() + 1e-300);
        return Complex(phi * phi * tilt);
    };
    m.support_inner = 0.5 * scale;
    m.support_radius = 2.0 * scale;
    return m;
}

}  // namespace

TEST(Partition, SquaresSumToOne) {
    const DyadicPartition p;
    Rng rng(1);
    for (int d : {1, 2, 3})
        for (int trial = 0; trial < 200; ++trial) {
            const Point xi = random_point(d, rng);
            double sum = 0.0;
            for (int j = p.j_min; j <= p.j_max; ++j) {
                const double v = lp_partition_value(p, j, xi);
                sum += v * v;
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
}

TEST(Partition, TelescopingAtDyadicRadius) {
    const DyadicPartition p;
    for (int j = -5; j <= 5; ++j) {
        Point xi(2);
        xi << std::ldexp(1.0, j) * 0.6, std::ldexp(1.0, j) * 0.8;
        const double a = lp_partition_value(p, j, xi), b = lp_partition_value(p, j + 1, xi);
        EXPECT_NEAR(a * a + b * b, 1.0, 1e-14);
    }
}

TEST(Partition, SupportInDyadicAnnulus) {
    const DyadicPartition p;
    Rng rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const Point xi = random_point(2, rng);
        const int j = static_cast<int>(rng.uniform(-8, 8));
        const double r = xi.norm();
        if (r < std::ldexp(1.0, j - 1) || r > std::ldexp(1.0, j + 1)) {
            EXPECT_EQ(lp_partition_value(p, j, xi), 0.0);
        }
        const double v = lp_partition_value(p, j, xi);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Partition, DyadicScaling) {
    const DyadicPartition p;
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Point xi = random_point(3, rng, 1e-2, 1e2);
        const int j = static_cast<int>(rng.uniform(-6, 6));
        EXPECT_NEAR(lp_partition_value(p, j, xi), lp_partition_value(p, 0, std::ldexp(1.0, -j) * xi), 1e-14);
    }
}

TEST(SigmaPartition, PlateauValue) {
    const DyadicPartition p;
    Point xi(1);
    xi << 8.0;
    EXPECT_NEAR(sigma_partition_value(p, 2, 3, xi), 0.2, 1e-15);
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + trial % 4, j = static_cast<int>(rng.uniform(-5, 5));
        Point y(2);
        const double r = std::exp(rng.uniform((j - n) * std::log(2.0), (j + n) * std::log(2.0)));
        const double t = rng.uniform(0, 2 * pi);
        y << r * std::cos(t), r * std::sin(t);
        EXPECT_NEAR((2 * n + 1) * sigma_partition_value(p, n, j, y), 1.0, 1e-14);
    }
}

TEST(SigmaPartition, VanishesFarAwayAndResums) {
    const DyadicPartition p;
    Point far(2);
    far << 1e6, 0.0;
    EXPECT_EQ(sigma_partition_value(p, 2, 0, far), 0.0);
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Point xi = random_point(2, rng, 1e-3, 1e3);
        double sum = 0.0;
        for (int j = -30; j <= 30; ++j) sum += sigma_partition_value(p, 3, j, xi);
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    EXPECT_THROW(sigma_partition_value(p, 0, 0, far), input_error);
}

TEST(FracLaplacian, RadialIntegralClosedForm) {
    EXPECT_NEAR(FracLaplacianLength::radial_integral(0.5), pi / 2.0, 1e-12);
    for (double eps : {0.05, 0.2, 0.35, 0.7, 0.9, 0.97}) {
        const double closed = -std::tgamma(-2.0 * eps) * std::cos(pi * eps);
        EXPECT_NEAR(FracLaplacianLength::radial_integral(eps) / closed, 1.0, 1e-11) << eps;
    }
}

TEST(FracLaplacian, ZeroAndEndpoints) {
    EXPECT_EQ(frac_laplacian_length(3, 0.4, Point::Zero(3)), 0.0);
    EXPECT_THROW(FracLaplacianLength(2, 0.0), domain_error);
    EXPECT_THROW(FracLaplacianLength(2, 1.0), domain_error);
}

TEST(FracLaplacian, HomogeneityAgainstDirectQuadrature) {
    for (int d : {1, 2})
        for (double eps : {0.25, 0.5, 0.8}) {
            const FracLaplacianLength psi(d, eps);
            const double r = 0.7;
            Point xi = Point::Zero(d), xi2 = Point::Zero(d);
            xi[0] = r;
            xi2[0] = 2 * r;
            EXPECT_NEAR(psi(xi2) / psi(xi), std::pow(2.0, 2.0 * eps), 1e-13);
            EXPECT_NEAR(psi(xi) / psi_direct(d, eps, r), 1.0, 1e-6) << "d=" << d << " eps=" << eps;
            EXPECT_NEAR(psi(xi2) / psi_direct(d, eps, 2 * r), 1.0, 1e-6) << "d=" << d << " eps=" << eps;
        }
}

TEST(FracLaplacian, ConstantAsymptotics) {
    for (int d : {1, 2, 3, 5}) {
        double lo = 1e300, hi = 0.0;
        for (double eps = 0.1; eps <= 0.9 + 1e-12; eps += 0.05) {
            const double c = FracLaplacianLength(d, eps).constant();
            const double ratio = c * eps * (1 - eps) * std::tgamma(0.5 * d) / std::pow(pi, 0.5 * d);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        const double bound = std::max(hi, 1.0 / lo);
        std::cout << "  d=" << d << " c_{d,eps} eps(1-eps) Gamma(d/2)/pi^{d/2} in [" << lo << ", " << hi
                  << "], C = " << bound << "\n";
        EXPECT_TRUE(std::isfinite(bound));
        EXPECT_LT(bound, 1e3);
    }
}

TEST(Mikhlin, ConstantSymbol) {
    EuclideanSymbol one{2, [](const Point&) { return Complex(1.0); }, std::nullopt, std::nullopt};
    const auto r = mikhlin_constant(one, 2, GridSpec::standard(2));
    EXPECT_NEAR(r.value, 1.0, 1e-9);
    EXPECT_FALSE(r.unbounded);
}

TEST(Mikhlin, RieszSymbolAgainstAnalyticDerivatives) {
    EuclideanSymbol riesz{2, [](const Point& x) { return Complex(x[0] / x.norm()); }, std::nullopt, std::nullopt};
    const auto r = mikhlin_constant(riesz, 2, GridSpec::standard(2));
    // dense oracle on the unit circle (degree-0 homogeneity)
    double oracle = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double t = 2 * pi * i / 20000.0, x = std::cos(t), y = std::sin(t);
        const double vals[] = {x, y * y, -x * y, -3 * x * y * y, y * (2 * x * x - y * y), x * (2 * y * y - x * x)};
        for (double v : vals) oracle = std::max(oracle, std::abs(v));
    }
    EXPECT_NEAR(r.value / oracle, 1.0, 0.05);
    EXPECT_FALSE(r.unbounded);
    EXPECT_EQ(r.singular_points, 0);
}

TEST(Mikhlin, LinearGrowthIsUnbounded) {
    EuclideanSymbol norm{2, [](const Point& x) { return Complex(x.norm()); }, std::nullopt, std::nullopt};
    const auto r = mikhlin_constant(norm, 1, GridSpec::standard(2));
    EXPECT_TRUE(r.unbounded);
    EXPECT_NEAR(r.value, 4096.0, 1.0);
}

TEST(Mikhlin, Subadditive) {
    EuclideanSymbol a{2, [](const Point& x) { return Complex(x[0] / x.norm(), 0.0); }, std::nullopt, std::nullopt};
    EuclideanSymbol b{2, [](const Point& x) { return Complex(0.0, x[1] * x[1] / x.squaredNorm()); }, std::nullopt,
                      std::nullopt};
    EuclideanSymbol c{2, [&](const Point& x) { return a(x) + b(x); }, std::nullopt, std::nullopt};
    const auto g = GridSpec::standard(2);
    EXPECT_LE(mikhlin_constant(c, 2, g).value,
              mikhlin_constant(a, 2, g).value + mikhlin_constant(b, 2, g).value + 1e-9);
}

TEST(SobolevH, ZeroSymbol) {
    EuclideanSymbol zero{1, [](const Point&) { return Complex(0.0); }, 1.0, std::nullopt};
    EXPECT_EQ(sobolev_norm_H(zero, 2.0, GridSpec::standard(1)).value, 0.0);
}

TEST(SobolevH, GaussianPlancherel) {
    for (int d : {1, 2}) {
        EuclideanSymbol g{d, [](const Point& x) { return Complex(std::exp(-pi * x.squaredNorm())); }, std::nullopt,
                          std::nullopt};
        auto grid = GridSpec::standard(d);
        grid.box_half_width = 8.0;
        const double exact = std::pow(2.0, -0.25 * d);  // ||e^{-pi |x|^2}||_2
        EXPECT_NEAR(sobolev_norm_H(g, 0.0, grid).value, exact, 1e-6);
    }
}

TEST(SobolevH, SecondOrderMatchesDerivativeQuadrature) {
    // f = e^{-x^2} cos(3x) and its derivatives in closed form
    auto f = [](double x) { return std::exp(-x * x) * std::cos(3 * x); };
    auto f1 = [](double x) { return std::exp(-x * x) * (-2 * x * std::cos(3 * x) - 3 * std::sin(3 * x)); };
    auto f2 = [](double x) {
        return std::exp(-x * x) * ((4 * x * x - 2 - 9) * std::cos(3 * x) + 12 * x * std::sin(3 * x));
    };
    auto sq = [](auto g) {
        CompensatedSum s;
        for (int k = -40; k < 40; ++k) s.add(integrate_gl([&](double x) { return g(x) * g(x); }, 0.25 * k, 0.25 * (k + 1), 20));
        return s.value();
    };
    const double oracle = sq(f) + 2 * sq(f1) / (4 * pi * pi) + sq(f2) / (16 * std::pow(pi, 4));
    EuclideanSymbol m{1, [&](const Point& x) { return Complex(f(x[0])); }, std::nullopt, std::nullopt};
    auto grid = GridSpec::standard(1);
    grid.box_half_width = 10.0;
    const auto h = sobolev_norm_H(m, 2.0, grid);
    EXPECT_NEAR(h.value * h.value / oracle, 1.0, 1e-8);
}

TEST(SobolevH, NotDilationInvariant) {
    auto grid = GridSpec::standard(2);
    grid.fft_points = 128;
    const double a = sobolev_norm_H(annular_bump(2, 1.0), 1.0, grid).value;
    const double b = sobolev_norm_H(annular_bump(2, 2.0), 1.0, grid).value;
    EXPECT_GT(std::abs(b / a - 1.0), 0.1);
}

TEST(SobolevH, LeakageIsReported) {
    EuclideanSymbol g{1, [](const Point& x) { return Complex(std::exp(-x.squaredNorm())); }, std::nullopt, std::nullopt};
    auto grid = GridSpec::standard(1);
    grid.box_half_width = 2.0;
    try {
        sobolev_norm_H(g, 1.0, grid);
        FAIL() << "expected accuracy_error";
    } catch (const accuracy_error& e) {
        EXPECT_NEAR(e.estimate(), std::exp(-4.0), 1e-6);
    }
}

TEST(SobolevW, ZeroSymbolAndDomainCheck) {
    EuclideanSymbol zero{2, [](const Point&) { return Complex(0.0); }, 2.0, 0.5};
    auto grid = GridSpec::standard(2);
    grid.fft_points = 64;
    EXPECT_EQ(sobolev_norm_W(zero, 2, 0.3, grid).value, 0.0);
    EuclideanSymbol touching{2, [](const Point&) { return Complex(1.0); }, 2.0, std::nullopt};
    EXPECT_THROW(sobolev_norm_W(touching, 2, 0.3, grid), domain_error);
}

TEST(SobolevW, DilationInvariance) {
    for (int d : {1, 2}) {
        auto grid = GridSpec::standard(d);
        if (d == 2) grid.fft_points = 128;
        const double base = sobolev_norm_W(annular_bump(d), d, 0.4, grid).value;
        EXPECT_GT(base, 0.0);
        for (double lambda : {0.25, 0.5, 2.0, 4.0}) {
            // M(lambda .) is the bump dilated by 1/lambda
            const double v = sobolev_norm_W(annular_bump(d, 1.0 / lambda), d, 0.4, grid).value;
            EXPECT_NEAR(v / base, 1.0, 0.02) << "d=" << d << " lambda=" << lambda;
        }
    }
}

TEST(SobolevW, BoundedByClassicalSobolevNorm) {
    for (int d : {1, 2}) {
        auto grid = GridSpec::standard(d);
        if (d == 2) grid.fft_points = 128;
        const double eps = 0.3;
        const auto m = annular_bump(d);
        const double w = sobolev_norm_W(m, d, eps, grid).value;
        const double h = sobolev_norm_H(m, 0.5 * d + eps, grid).value;
        std::cout << "  d=" << d << " ||M||_W / ||M||_H = " << w / h << "\n";
        EXPECT_GT(h, 0.0);
        EXPECT_LT(w / h, 100.0);
    }
}

TEST(LocalInversion, ZeroAndInvolution) {
    EXPECT_EQ(local_inversion(Matrix::Zero(3, 3)).norm(), 0.0);
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 4;
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
        a *= 0.5 / geometry::operator_norm(a);
        const Matrix ia = local_inversion(a);
        EXPECT_LT((local_inversion(ia) - a).norm(), 1e-12);
        const Matrix e = Matrix::Identity(n, n);
        EXPECT_LT(((ia + e) * (a + e) - e).norm(), 1e-12 * 3.0);
    }
}

TEST(LocalInversion, LipschitzComparabilityOnCompact) {
    Rng rng(9);
    double lo = 1e300, hi = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        Matrix a(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
        a *= rng.uniform(1e-6, 0.5) / geometry::operator_norm(a);
        const double ratio = local_inversion(a).norm() / a.norm();
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    std::cout << "  |I(A)|/|A| on ||A|| <= 1/2 in [" << lo << ", " << hi << "]\n";
    EXPECT_GE(lo, 1.0 / 1.5 - 1e-9);
    EXPECT_LE(hi, 2.0 + 1e-9);
}

TEST(LocalInversion, SingularShiftRejected) {
    Matrix a = -Matrix::Identity(2, 2);
    a(0, 0) = 0.0;
    EXPECT_THROW(local_inversion(a), domain_error);
}

TEST(Twisted, IdentityGivesOne) {
    auto grid = GridSpec::standard(4);
    grid.radii = {0.5, 1.0, 2.0};
    grid.directions = 24;
    const geometry::GroupElement e[] = {geometry::GroupElement::identity(2)};
    EXPECT_NEAR(twisted_homogeneous_mikhlin(e, 0.5, 2, grid).value, 1.0, 1e-9);
}

TEST(Twisted, HomogeneousOfDegreeZero) {
    Rng rng(10);
    const double s[] = {0.8, -0.8};
    const auto m = twisted_symbol(geometry::GroupElement::diagonal(s), 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        const Point xi = random_point(4, rng, 0.1, 10);
        const double lambda = std::exp(rng.uniform(-5, 5));
        EXPECT_NEAR(std::abs(m(lambda * xi) - m(xi)), 0.0, 1e-13);
    }
}

TEST(Twisted, MonotoneInRadiusOfSample) {
    auto grid = GridSpec::standard(4);
    grid.radii = {0.5, 1.0, 2.0};
    grid.directions = 24;
    Rng rng(11);
    std::vector<geometry::GroupElement> sigma;
    double prev = 0.0;
    for (double radius : {0.5, 1.0, 1.5, 2.0}) {
        for (int i = 0; i < 3; ++i) sigma.push_back(geometry::sample_ball(2, radius, rng));
        const auto r = twisted_homogeneous_mikhlin(sigma, 0.5, 2, grid);
        EXPECT_TRUE(std::isfinite(r.value));
        EXPECT_GE(r.value, prev);
        prev = r.value;
    }
}
