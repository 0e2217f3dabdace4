#pragma once

// mcert subcommands. run() parses argv and writes the report, so the whole
// CLI can be driven in-process by tests.
//
// Exit codes: 0 every record PASS, 1 some record FAIL or INCONCLUSIVE,
// 2 malformed input or input outside the mathematical domain, 3 a numerical
// method could not reach its accuracy.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcert/cli/families.hpp"
#include "mcert/errors.hpp"
#include "mcert/group_geometry.hpp"
#include "mcert/numeric.hpp"
#include "mcert/report.hpp"
#include "mcert/rigidity_profile.hpp"
#include "mcert/schur_numerics.hpp"
#include "mcert/sphere_spectra.hpp"

#ifndef MCERT_VERSION
#define MCERT_VERSION "0.0.0"
#endif

namespace mcert::cli {

using geometry::GroupElement;
using schur::infinity;
using geometry::Matrix;

enum ExitCode { exit_pass = 0, exit_fail = 1, exit_input = 2, exit_accuracy = 3 };

inline int exit_code(const CertificationReport& rep) { return rep.verdict() == Verdict::pass ? exit_pass : exit_fail; }

// ---------------------------------------------------------------------------
// CSV input

// Rows of numbers after a header row; fields separated by commas.
inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw input_error(what + ": empty input");
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) {
            std::istringstream fs(field);
            fs.imbue(std::locale::classic());
            double v = 0.0;
            if (!(fs >> v) || !(fs >> std::ws).eof() || !std::isfinite(v))
                throw input_error(what + ": bad number '" + field + "' on line " + std::to_string(lineno));
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw input_error(what + ": ragged row on line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw input_error(what + ": no data rows");
    return rows;
}

inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw input_error(what + ": cannot open " + path);
    return read_numeric_csv(in, what);
}

// One group element per row, n^2 entries in row-major order.
inline std::vector<GroupElement> read_points(const std::string& path, int n) {
    const auto rows = read_numeric_csv(path, "points");
    if (rows.front().size() != static_cast<std::size_t>(n * n))
        throw input_error("points: expected " + std::to_string(n * n) + " columns for n = " + std::to_string(n));
    std::vector<GroupElement> out;
    for (const auto& r : rows) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = r[i * n + j];
        out.emplace_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// certify-hm

struct HmOptions {
    int n = 3;
    int order = -1;  // default [n^2/2] + 1
    int grid_levels = 4;
    std::uint64_t seed = 1;
    int indices_per_order = 6;
};

struct HmSample {
    GroupElement g;
    bool ray = false;
    double param = 0.0;  // rho on shells, t on rays
    int direction = 0;
};

namespace detail {

inline Matrix random_direction(int n, Rng& rng) {
    Matrix x(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = rng.normal();
    x -= (x.trace() / n) * Matrix::Identity(n, n);
    return x / x.norm();
}

// Unit traceless diagonal directions with well separated weights:
// (1, 0, ..., 0, -1)/sqrt(2) and (n - 1, -1, ..., -1)/sqrt(n (n - 1)).
inline Eigen::VectorXd ray_direction(int n, int which) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    if (which == 0) {
        w[0] = 1.0;
        w[n - 1] = -1.0;
    } else {
        w.setConstant(-1.0);
        w[0] = n - 1.0;
    }
    return w / w.norm();
}

inline double log10_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log10(x[i]));
            ly.push_back(std::log10(y[i]));
        }
    if (lx.size() < 2) return 0.0;
    return fit_line(lx, ly).slope;
}

// Windows whose values stay below this fraction of the order's constant sit
// at round-off level and carry no growth information.
inline constexpr double kNegligibleFraction = 1e-3;

inline double window_slope(const std::vector<double>& x, const std::vector<double>& y, double scale) {
    double top = 0.0;
    for (double v : y) top = std::max(top, v);
    if (top <= kNegligibleFraction * scale) return 0.0;
    return log10_slope(x, y);
}

inline Verdict slope_verdict(double slope) {
    if (!std::isfinite(slope) || slope > 0.1) return Verdict::fail;
    return slope > 0.02 ? Verdict::inconclusive : Verdict::pass;
}

}  // namespace detail

// Local shells exp(rho X), rho = 10^{-1..-levels}, and rays k diag(e^{t w}) k^T,
// t = 1..4 levels, along two directions (the second conjugated by a random k).
inline std::vector<HmSample> hm_samples(int n, int levels, Rng& rng) {
    std::vector<HmSample> out;
    for (int l = 1; l <= levels; ++l) {
        const double rho = std::pow(10.0, -l);
        for (int d = 0; d < 2; ++d) out.push_back({GroupElement((rho * detail::random_direction(n, rng)).exp()), false, rho, d});
    }
    const Eigen::VectorXd w0 = detail::ray_direction(n, 0);
    const Eigen::VectorXd w1 = detail::ray_direction(n, 1);
    const Matrix k = geometry::haar_orthogonal(n, rng);
    for (int t = 1; t <= 4 * levels; ++t) {
        const Matrix d0 = (t * w0).array().exp().matrix().asDiagonal();
        const Matrix d1 = (t * w1).array().exp().matrix().asDiagonal();
        out.push_back({GroupElement::normalized(d0), true, double(t), 0});
        out.push_back({GroupElement::normalized(k * d1 * k.transpose()), true, double(t), 1});
    }
    return out;
}

// Multi-indices of order j: the pure ones along the first off-diagonal and the
// last diagonal basis element, then random ones.
inline std::vector<geometry::MultiIndex> hm_indices(int j, int basis_size, int count, Rng& rng) {
    if (j == 0) return {geometry::MultiIndex{}};
    std::vector<geometry::MultiIndex> out;
    out.push_back({std::vector<int>(j, 0)});
    out.push_back({std::vector<int>(j, basis_size - 1)});
    while (static_cast<int>(out.size()) < count) {
        geometry::MultiIndex g;
        for (int i = 0; i < j; ++i) g.indices.push_back(static_cast<int>(rng.next() % basis_size));
        out.push_back(std::move(g));
    }
    return out;
}

inline CertificationReport certify_hm(const geometry::GroupSymbol& m, const nlohmann::json& symbol_label,
                                      const HmOptions& opt) {
    if (opt.n < 2 || opt.n > 8) throw input_error("certify-hm: n must be in 2..8");
    const int order = opt.order < 0 ? geometry::default_hm_order(opt.n) : opt.order;
    if (order < 0 || order > 10) throw input_error("certify-hm: order must be in 0..10");
    if (opt.grid_levels < 2 || opt.grid_levels > 8) throw input_error("certify-hm: grid levels must be in 2..8");

    CertificationReport rep;
    rep.command = "certify-hm";
    rep.inputs = {{"symbol", symbol_label}, {"n", opt.n}, {"order", order}, {"grid_levels", opt.grid_levels}};
    rep.seeds.push_back(opt.seed);
    Rng rng(opt.seed);
    const auto samples = hm_samples(opt.n, opt.grid_levels, rng);
    const auto basis = geometry::LieBasis::make(opt.n);

    // per order: weighted constant and the raw derivative size at each sample
    std::vector<std::vector<double>> weighted(order + 1), raw(order + 1);
    std::vector<double> brace(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) brace[s] = geometry::bracevert(samples[s].g);
    for (int j = 0; j <= order; ++j) {
        const auto gammas = hm_indices(j, basis.size(), opt.indices_per_order, rng);
        for (std::size_t s = 0; s < samples.size(); ++s) {
            const auto& g = samples[s].g;
            const double h = geometry::default_lie_step(g, j);
            double sup = 0.0;
            for (const auto& gamma : gammas) sup = std::max(sup, std::abs(geometry::lie_derivative(m, g, gamma, basis, h, order)));
            if (!std::isfinite(sup)) throw numeric_error("certify-hm: non-finite derivative");
            raw[j].push_back(sup);
            weighted[j].push_back(std::pow(brace[s], j) * sup);
        }
    }

    double c_hm = 0.0;
    auto table = nlohmann::json::array();
    for (int j = 0; j <= order; ++j) {
        double cj = 0.0;
        for (double w : weighted[j]) cj = std::max(cj, w);
        c_hm = std::max(c_hm, cj);
        // growth is read over the far quarter of each ray and the inner half
        // of the shells, one fit per direction; the smooth distance approaches
        // its asymptotic ratio to |_g_| only like |_g_|^{-1/2} on some rays
        double ray_slope = -infinity, shell_slope = -infinity;
        for (int dir = 0; dir < 2; ++dir) {
            std::vector<double> shell_x, shell_c, ray_x, ray_c;
            for (std::size_t s = 0; s < samples.size(); ++s) {
                if (samples[s].direction != dir) continue;
                if (samples[s].ray && samples[s].param > 3 * opt.grid_levels) {
                    ray_x.push_back(brace[s]);
                    ray_c.push_back(weighted[j][s]);
                } else if (!samples[s].ray && samples[s].param < 1.5 * std::pow(10.0, -((opt.grid_levels + 1) / 2))) {
                    shell_x.push_back(1.0 / brace[s]);
                    shell_c.push_back(weighted[j][s]);
                }
            }
            ray_slope = std::max(ray_slope, detail::window_slope(ray_x, ray_c, cj));
            shell_slope = std::max(shell_slope, detail::window_slope(shell_x, shell_c, cj));
        }
        CheckRecord r;
        r.name = "hm_order_" + std::to_string(j);
        r.anchor = "|_g_|^{|gamma|} |d^gamma m(g)| <= C_hm";
        r.measured = cj;
        r.bound = cj;
        r.tolerance = 0.1;
        r.verdict = combine(detail::slope_verdict(ray_slope), detail::slope_verdict(shell_slope));
        r.detail = {{"order", j}, {"growth_slope_rays", ray_slope}, {"growth_slope_shells", shell_slope}};
        table.push_back({{"order", j}, {"C", cj}});
        rep.add(std::move(r));
    }

    // decay exponent along the rays: -slope of log|d^gamma m| against log |_g_|,
    // fitted per ray direction and averaged
    auto decay_of = [&](int j) -> std::optional<double> {
        double sum = 0.0;
        int fits = 0;
        for (int dir = 0; dir < 2; ++dir) {
            std::vector<double> xs, ys;
            for (std::size_t s = 0; s < samples.size(); ++s)
                if (samples[s].ray && samples[s].direction == dir && samples[s].param > 2 * opt.grid_levels) {
                    xs.push_back(brace[s]);
                    ys.push_back(raw[j][s]);
                }
            if (*std::max_element(ys.begin(), ys.end()) == 0.0) continue;  // vanishes identically
            sum -= detail::log10_slope(xs, ys);
            ++fits;
        }
        if (fits == 0) return std::nullopt;
        return sum / fits;
    };
    const auto e0 = decay_of(0);
    CheckRecord dec;
    dec.name = "decay_exponent";
    dec.anchor = "|m(g)| ~ |_g_|^{-a} along rays";
    dec.tolerance = 0.0;
    dec.measured = e0 ? *e0 : 0.0;
    dec.bound = 0.0;
    dec.verdict = Verdict::pass;  // informational
    rep.add(std::move(dec));

    if (order >= 1) {
        const auto ea = decay_of(order - 1), eb = decay_of(order);
        CheckRecord prop;
        prop.name = "decay_propagation";
        prop.anchor = "derivatives of orders [n^2/2] and [n^2/2]+1 share their asymptotic decay";
        prop.tolerance = 0.1;
        if (!ea && !eb) {
            prop.verdict = Verdict::pass;
            prop.detail["reason"] = "both orders vanish on the rays";
        } else if (!ea || !eb) {
            prop.verdict = Verdict::inconclusive;
        } else {
            prop.measured = *eb;
            prop.bound = *ea;
            const double diff = std::abs(*eb - *ea);
            prop.detail["difference"] = diff;
            prop.verdict = diff <= 0.1 * std::max(std::abs(*ea), 1.0) ? Verdict::pass : Verdict::fail;
        }
        prop.detail["orders"] = {order - 1, order};
        rep.add(std::move(prop));
    }

    rep.results["C_hm"] = c_hm;
    rep.results["per_order"] = table;
    rep.results["decay_exponent"] = e0 ? json_number(*e0) : nlohmann::json(nullptr);
    return rep;
}

// ---------------------------------------------------------------------------
// rigidity

struct RigidityOptions {
    int n = 3;
    double p = 0.0;
    double eps = 1e-3;
    bool witness = false;
    int grid_levels = 4;  // witness sections 8, 16, ..., 8 * 2^{levels-1}
    std::uint64_t seed = 1;
    schur::RadialMode mode = schur::RadialMode::hs;
    std::vector<GroupElement> points;  // optional user section
};

inline CertificationReport rigidity(const rigidity::Profile& phi, const nlohmann::json& symbol_label,
                                    const RigidityOptions& opt) {
    sphere::check_dimension(opt.n);
    if (opt.grid_levels < 2 || opt.grid_levels > 6) throw input_error("rigidity: grid levels must be in 2..6");
    const auto ex = sphere::RigidityExponents::make(opt.n, opt.p, opt.eps);

    CertificationReport rep;
    if (opt.witness) {
        schur::WitnessOptions w;
        w.mode = opt.mode;
        w.search.seed = opt.seed;
        w.sizes.clear();
        for (int i = 0; i < opt.grid_levels; ++i) w.sizes.push_back(8 << i);
        rep = schur::rigidity_witness(phi, opt.n, opt.p, w);
        rep.results.erase("classification");
    } else {
        for (auto& r : rigidity::profile_records(phi, opt.n, opt.p, {}, opt.eps)) rep.add(std::move(r));
        rep.seeds.push_back(opt.seed);
    }
    rep.command = "rigidity";
    rep.inputs = {{"symbol", symbol_label},
                  {"n", opt.n},
                  {"p", json_number(opt.p)},
                  {"eps", opt.eps},
                  {"witness", opt.witness},
                  {"grid_levels", opt.grid_levels},
                  {"mode", opt.mode == schur::RadialMode::hs ? "hs-radial" : "opnorm-radial"},
                  {"points", opt.points.size()}};

    if (!opt.points.empty()) {
        for (const auto& g : opt.points)
            if (g.dim() != opt.n) throw input_error("rigidity: point dimension differs from n");
        auto symbol = [&](const GroupElement& g) {
            return phi(opt.mode == schur::RadialMode::hs ? geometry::normalized_hs(g.matrix())
                                                         : geometry::operator_norm(g.matrix()));
        };
        const auto mult = schur::TruncatedSchurMultiplier::from_points(std::span<const GroupElement>(opt.points), symbol);
        schur::LowerBoundOptions lo;
        lo.seed = opt.seed;
        const auto lb = schur::schur_norm_lower_bound(mult, opt.p, lo);
        CheckRecord r;
        r.name = "points_lower_bound";
        r.anchor = "||S_m||_{S_p -> S_p} >= finite-section lower bound (one-sided)";
        r.measured = lb.value;
        r.bound = schur::schur_norm_exact_p2(mult);
        r.tolerance = 1e-8;
        r.verdict = lb.value >= r.bound - 1e-8 ? Verdict::pass : Verdict::fail;
        r.detail = {{"size", mult.rows()}, {"starts", lb.starts}};
        rep.add(std::move(r));
    }

    rep.results["alpha0"] = ex.alpha0;
    rep.results["alpha"] = ex.alpha;
    rep.results["c"] = ex.c;
    rep.results["classification"] = schur::classification(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// sphere-spectrum

struct SpectrumOptions {
    int n = 3;
    double p = 4.0;
    int r = 0;
    std::vector<double> xs = {0.5};
    int k_max = 10;
    double tail_tol = 1e-6;
};

inline CertificationReport sphere_spectrum(const SpectrumOptions& opt) {
    sphere::check_dimension(opt.n);
    if (opt.k_max < 0 || opt.k_max > 100000) throw input_error("sphere-spectrum: kmax must be in 0..100000");
    if (opt.xs.empty()) throw input_error("sphere-spectrum: need at least one x");
    CertificationReport rep;
    rep.command = "sphere-spectrum";
    rep.inputs = {{"n", opt.n}, {"p", json_number(opt.p)}, {"r", opt.r}, {"x", opt.xs}, {"kmax", opt.k_max},
                  {"tail_tol", opt.tail_tol}};
    const double a0 = sphere::alpha0_of(opt.n, opt.p);
    for (double x : opt.xs) {
        const auto sum = sphere::sp_derivative_norm(opt.n, opt.p, opt.r, x, opt.tail_tol);
        CheckRecord rec;
        std::ostringstream nm;
        nm.imbue(std::locale::classic());
        nm << "schatten_sum_x=" << x;
        rec.name = nm.str();
        rec.anchor = "sum_k m_k |d^r phi_k(x)|^p < infinity iff r < alpha0";
        rec.tolerance = opt.tail_tol;
        if (sum.divergent) {
            rec.measured = std::numeric_limits<double>::infinity();
            rec.bound = a0;
            rec.verdict = Verdict::fail;
            rec.detail["reason"] = "r >= alpha0";
        } else {
            rec.measured = sum.value;
            rec.bound = sum.tail_bound;
            rec.verdict = sum.tail_bound <= opt.tail_tol ? Verdict::pass : Verdict::inconclusive;
            rec.detail = {{"terms", sum.terms}, {"power_sum", sum.power_sum}};
        }
        rep.add(std::move(rec));
    }
    const auto sys = sphere::SphericalEigenSystem::make(opt.n, opt.k_max);
    auto table = nlohmann::json::array();
    for (int k = 0; k <= opt.k_max; ++k) {
        auto row = nlohmann::json{{"k", k}, {"m_k", sys.multiplicities[k]}};
        auto vals = nlohmann::json::array();
        for (double x : opt.xs) vals.push_back(sys.eigenvalue(k, x));
        row["phi_k"] = vals;
        table.push_back(row);
    }
    rep.results["alpha0"] = a0;
    rep.results["spectrum"] = table;
    return rep;
}

// ---------------------------------------------------------------------------
// schur-bound

struct SchurBoundOptions {
    double p = 2.0;
    std::uint64_t seed = 1;
    int iterations = 40;
    int random_starts = 4;
};

inline CertificationReport schur_bound(const schur::TruncatedSchurMultiplier& mult, const nlohmann::json& source,
                                       const SchurBoundOptions& opt) {
    schur::check_p(opt.p);
    if (mult.rows() == 0 || mult.cols() == 0) throw input_error("schur-bound: empty matrix");
    CertificationReport rep;
    rep.command = "schur-bound";
    rep.inputs = {{"source", source},
                  {"rows", mult.rows()},
                  {"cols", mult.cols()},
                  {"p", json_number(opt.p)},
                  {"iterations", opt.iterations},
                  {"random_starts", opt.random_starts}};
    rep.seeds.push_back(opt.seed);
    schur::LowerBoundOptions lo;
    lo.seed = opt.seed;
    lo.iterations = opt.iterations;
    lo.random_starts = opt.random_starts;
    const auto lb = schur::schur_norm_lower_bound(mult, opt.p, lo);
    const double sup = schur::schur_norm_exact_p2(mult);

    CheckRecord r;
    r.name = "schur_lower_bound";
    r.anchor = "||S_M||_{S_p -> S_p} >= max_ij |M_ij|";
    r.measured = lb.value;
    r.bound = sup;
    r.tolerance = 1e-8;
    r.verdict = lb.value >= sup - 1e-8 ? Verdict::pass : Verdict::fail;
    r.detail["starts"] = lb.starts;
    rep.add(std::move(r));
    if (opt.p == 2.0) {
        CheckRecord e;
        e.name = "schur_exact_p2";
        e.anchor = "||S_M||_{S_2 -> S_2} = max_ij |M_ij|";
        e.measured = lb.value;
        e.bound = sup;
        e.tolerance = 1e-6;
        e.verdict = std::abs(lb.value - sup) <= 1e-6 ? Verdict::pass : Verdict::fail;
        rep.add(std::move(e));
    }
    rep.results["lower_bound"] = lb.value;
    rep.results["max_entry"] = sup;
    return rep;
}

// ---------------------------------------------------------------------------
// geometry

struct GeometryOptions {
    int n = 2;
    std::vector<double> radii = {2, 3, 4, 5, 6, 7, 8, 9, 10};
};

inline int weyl_growth_rate(int n) { return n * n / 2; }

inline CertificationReport geometry_growth(const GeometryOptions& opt) {
    if (opt.radii.size() < 2) throw input_error("geometry: need at least two radii");
    CertificationReport rep;
    rep.command = "geometry";
    rep.inputs = {{"n", opt.n}, {"radii", opt.radii}};
    std::vector<double> rs, logs;
    auto table = nlohmann::json::array();
    double worst = 0.0;
    for (double R : opt.radii) {
        if (!(R > 0.0)) throw input_error("geometry: radii must be positive");
        const auto v = geometry::weyl_ball_volume(opt.n, R);
        rs.push_back(R);
        logs.push_back(std::log(v.value));
        worst = std::max(worst, v.relative_error);
        table.push_back({{"R", R}, {"volume", v.value}, {"log_volume", std::log(v.value)}, {"relative_error", v.relative_error}});
    }
    const double slope = fit_line(rs, logs).slope;
    const double sigma = weyl_growth_rate(opt.n);
    CheckRecord r;
    r.name = "weyl_slope";
    r.anchor = "log mu(B_R) ~ [n^2/2] R";
    r.measured = slope;
    r.bound = sigma;
    r.tolerance = 0.05;
    r.verdict = std::abs(slope - sigma) <= 0.05 * sigma ? Verdict::pass : Verdict::fail;
    r.detail["quadrature_relative_error"] = worst;
    rep.add(std::move(r));
    rep.results["volumes"] = table;
    rep.results["slope"] = slope;
    return rep;
}

// ---------------------------------------------------------------------------
// Output

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline void write_records_csv(std::ostream& os, const CertificationReport& rep) {
    os << "name,verdict,measured,bound,tolerance\n";
    for (const auto& r : rep.records)
        os << '"' << r.name << "\"," << to_string(r.verdict) << ',' << r.measured << ',' << r.bound << ','
           << r.tolerance << '\n';
}

// Command-specific table, falling back to the record list.
inline void write_csv(std::ostream& os, const CertificationReport& rep) {
    os.imbue(std::locale::classic());
    os.precision(17);
    if (rep.command == "sphere-spectrum") {
        const auto sys = sphere::SphericalEigenSystem::make(rep.inputs["n"].get<int>(), rep.inputs["kmax"].get<int>());
        const auto xs = rep.inputs["x"].get<std::vector<double>>();
        sphere::write_spectrum_csv(os, sys, xs);
    } else if (rep.command == "geometry") {
        os << "R,volume,log_volume,relative_error\n";
        for (const auto& row : rep.results["volumes"])
            os << row["R"].get<double>() << ',' << row["volume"].get<double>() << ',' << row["log_volume"].get<double>()
               << ',' << row["relative_error"].get<double>() << '\n';
    } else if (rep.command == "certify-hm") {
        os << "order,C\n";
        for (const auto& row : rep.results["per_order"]) os << row["order"].get<int>() << ',' << row["C"].get<double>() << '\n';
    } else {
        write_records_csv(os, rep);
    }
}

// ---------------------------------------------------------------------------
// Argument parsing

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    CLI::App app{"Numerical certifier for Schur and Fourier multipliers on SL_n(R)", "mcert"};
    app.require_subcommand(1);
    app.set_version_flag("--version", MCERT_VERSION);

    std::string out_path, format = "json";
    std::uint64_t seed = 1;
    int n = 3, grid_levels = 4;

    std::string family = "radial-power", csv_path, mode = "hs";
    std::vector<std::string> params;
    auto add_family = [&](CLI::App* sub) {
        sub->add_option("--family", family, "symbol family")->check(CLI::IsMember(family_kinds()));
        sub->add_option("--param", params, "family parameter key=value (repeatable)");
        sub->add_option("--csv", csv_path, "table x,value for csv-sampled");
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out_path, "write the report to this file instead of stdout");
        sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--seed", seed, "random seed");
    };

    HmOptions hm;
    auto* c_hm = app.add_subcommand("certify-hm", "Hoermander-Mikhlin constants of a symbol on SL_n(R)");
    add_family(c_hm);
    add_common(c_hm);
    c_hm->add_option("--n", n, "rank parameter n of SL_n(R)");
    c_hm->add_option("--order", hm.order, "highest derivative order (default [n^2/2]+1)");
    c_hm->add_option("--grid-levels", grid_levels, "number of shell and ray levels");

    RigidityOptions rig;
    std::string points_path;
    auto* c_rig = app.add_subcommand("rigidity", "necessary conditions on a radial profile for S_p-boundedness");
    add_family(c_rig);
    add_common(c_rig);
    c_rig->add_option("--n", n, "rank parameter n")->required();
    c_rig->add_option("--p", rig.p, "Schatten exponent")->required();
    c_rig->add_option("--eps", rig.eps, "alpha = alpha0 - eps when alpha0 is an integer");
    c_rig->add_flag("--witness", rig.witness, "add finite-section lower bounds on D SO(2) orbits");
    c_rig->add_option("--grid-levels", grid_levels, "number of witness section sizes");
    c_rig->add_option("--mode", mode, "hs or opnorm radiality")->check(CLI::IsMember({"hs", "opnorm"}));
    c_rig->add_option("--points", points_path, "CSV of group elements (n^2 entries per row)");

    SpectrumOptions sp;
    auto* c_sp = app.add_subcommand("sphere-spectrum", "spherical eigenvalues and Schatten sums of d^r T_x");
    add_common(c_sp);
    c_sp->add_option("--n", sp.n, "sphere S^{n-1}, n >= 3");
    c_sp->add_option("--p", sp.p, "Schatten exponent");
    c_sp->add_option("--r", sp.r, "derivative order");
    c_sp->add_option("--x", sp.xs, "points in (-1, 1)")->delimiter(',');
    c_sp->add_option("--kmax", sp.k_max, "largest degree in the spectrum table");
    c_sp->add_option("--tail-tol", sp.tail_tol, "tail tolerance of the Schatten sum");

    SchurBoundOptions sb;
    std::string matrix_path;
    auto* c_sb = app.add_subcommand("schur-bound", "lower bound of a Schur multiplier norm on S_p");
    add_common(c_sb);
    add_family(c_sb);
    c_sb->add_option("--matrix", matrix_path, "CSV symbol matrix (header row)");
    c_sb->add_option("--points", points_path, "CSV of group elements; the symbol comes from --family");
    c_sb->add_option("--n", n, "rank parameter n for --points");
    c_sb->add_option("--p", sb.p, "Schatten exponent (inf allowed)");
    c_sb->add_option("--iterations", sb.iterations, "alternating maximization steps per start");

    GeometryOptions geo;
    auto* c_geo = app.add_subcommand("geometry", "Haar volume growth of balls in SL_n(R)");
    add_common(c_geo);
    c_geo->add_option("--n", geo.n, "rank parameter n in 2..5");
    c_geo->add_option("--radii", geo.radii, "ball radii")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_input;
    }

    try {
        CertificationReport rep;
        auto label = [&](const SymbolFamily& f) {
            nlohmann::json j{{"family", f.kind}, {"params", f.params}};
            if (f.table) j["csv"] = csv_path;
            return j;
        };
        if (c_hm->parsed()) {
            const auto f = make_family(family, params, csv_path);
            hm.n = n;
            hm.grid_levels = grid_levels;
            hm.seed = seed;
            rep = certify_hm(f.group_symbol(), label(f), hm);
        } else if (c_rig->parsed()) {
            const auto f = make_family(family, params, csv_path);
            rig.n = n;
            rig.grid_levels = grid_levels;
            rig.seed = seed;
            rig.mode = mode == "hs" ? schur::RadialMode::hs : schur::RadialMode::opnorm;
            if (!points_path.empty()) rig.points = read_points(points_path, n);
            rep = rigidity(f.profile(), label(f), rig);
        } else if (c_sp->parsed()) {
            rep = sphere_spectrum(sp);
        } else if (c_sb->parsed()) {
            sb.seed = seed;
            if (matrix_path.empty() == points_path.empty()) throw input_error("schur-bound: give exactly one of --matrix, --points");
            if (!matrix_path.empty()) {
                const auto rows = read_numeric_csv(matrix_path, "matrix");
                schur::CMatrix m(rows.size(), rows.front().size());
                for (std::size_t i = 0; i < rows.size(); ++i)
                    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
                rep = schur_bound(schur::TruncatedSchurMultiplier::from_matrix(m), {{"matrix", matrix_path}}, sb);
            } else {
                const auto f = make_family(family, params, csv_path);
                const auto pts = read_points(points_path, n);
                const auto sym = f.group_symbol();
                const auto mult = schur::TruncatedSchurMultiplier::from_points(std::span<const GroupElement>(pts), sym);
                rep = schur_bound(mult, {{"points", points_path}, {"symbol", label(f)}}, sb);
            }
        } else if (c_geo->parsed()) {
            rep = geometry_growth(geo);
        }

        const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        rep.header = {{"tool_version", MCERT_VERSION}, {"timestamp_utc", utc_timestamp()}, {"runtime_seconds", runtime}};

        std::ofstream file;
        if (!out_path.empty()) {
            file.open(out_path);
            if (!file) throw input_error("cannot write " + out_path);
        }
        std::ostream& dst = out_path.empty() ? out : file;
        if (format == "csv")
            write_csv(dst, rep);
        else
            dst << rep.to_json().dump(2) << '\n';
        return exit_code(rep);
    } catch (const accuracy_error& e) {
        err << "mcert: accuracy error: " << e.what() << " (estimate " << e.estimate() << ")\n";
        return exit_accuracy;
    } catch (const numeric_error& e) {
        err << "mcert: numerical failure: " << e.what() << '\n';
        return exit_accuracy;
    } catch (const error& e) {
        err << "mcert: input error: " << e.what() << '\n';
        return exit_input;
    }
}

}  // namespace mcert::cli
