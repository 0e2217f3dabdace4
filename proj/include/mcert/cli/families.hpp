#pragma once

// Built-in symbol families. Each family has a radial profile phi(x), x > 1,
// and a symbol on SL_n(R) built from the smooth distance d(g) to the
// identity, so finite differences never straddle a kink.
//
//   radial-power      phi(x) = (1 + x)^{-a}                m = (1 + d)^{-a}
//   radial-log-power  phi(x) = (1 + log x)^{-a}            m = (1 + log(1 + d))^{-a}
//   hm-bump           phi(x) = b((x - 1) / radius)         m = b(d / radius)
//   riesz-like        phi(x) = cos(t log((x - 1) / x))     m = exp(i t log(d / (1 + d)))
//   csv-sampled       phi from a table (x, value)          m = phi(|g|)
//
// b(u) = exp(1 - 1/(1 - u^2)) for |u| < 1 and 0 otherwise.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mcert/errors.hpp"
#include "mcert/group_geometry.hpp"
#include "mcert/rigidity_profile.hpp"

namespace mcert::cli {

using Params = std::map<std::string, double>;

inline double bump(double u) {
    if (!(std::abs(u) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

// Table of (x, value) with linear interpolation, held constant outside the
// sampled range.
struct SampledProfile {
    std::vector<double> xs, values;

    static SampledProfile parse(std::istream& in) {
        SampledProfile s;
        std::string line;
        if (!std::getline(in, line)) throw input_error("csv-sampled: empty input");
        int row = 1;
        while (std::getline(in, line)) {
            ++row;
            if (line.empty() || line == "\r") continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            ls.imbue(std::locale::classic());
            double x = 0.0, v = 0.0;
            if (!(ls >> x >> v)) throw input_error("csv-sampled: malformed row " + std::to_string(row));
            if (!std::isfinite(x) || !std::isfinite(v)) throw input_error("csv-sampled: non-finite value in row " + std::to_string(row));
            if (!s.xs.empty() && !(x > s.xs.back())) throw input_error("csv-sampled: x must increase strictly");
            s.xs.push_back(x);
            s.values.push_back(v);
        }
        if (s.xs.size() < 2) throw input_error("csv-sampled: need at least two rows");
        return s;
    }

    static SampledProfile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw input_error("csv-sampled: cannot open " + path);
        return parse(in);
    }

    double operator()(double x) const {
        if (x <= xs.front()) return values.front();
        if (x >= xs.back()) return values.back();
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin());
        const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return (1.0 - t) * values[i - 1] + t * values[i];
    }
};

struct SymbolFamily {
    std::string kind;
    Params params;
    std::shared_ptr<const SampledProfile> table;

    double param(const std::string& key, double fallback) const {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    rigidity::Profile profile() const {
        if (kind == "radial-power") {
            const double a = param("a", 5.0);
            return [a](double x) { return std::pow(1.0 + x, -a); };
        }
        if (kind == "radial-log-power") {
            const double a = param("a", 1.0);
            return [a](double x) { return std::pow(1.0 + std::log(x), -a); };
        }
        if (kind == "hm-bump") {
            const double r = param("radius", 1.0);
            return [r](double x) { return bump((x - 1.0) / r); };
        }
        if (kind == "riesz-like") {
            const double t = param("t", 1.0);
            return [t](double x) { return std::cos(t * std::log((x - 1.0) / x)); };
        }
        if (kind == "csv-sampled") {
            auto tab = table;
            return [tab](double x) { return (*tab)(x); };
        }
        throw input_error("unknown family: " + kind);
    }

    geometry::GroupSymbol group_symbol() const {
        using geometry::GroupElement;
        geometry::GroupSymbol m;
        m.radial = true;
        if (kind == "radial-power") {
            const double a = param("a", 5.0);
            m.eval = [a](const GroupElement& g) { return std::complex<double>(std::pow(1.0 + geometry::smooth_distance(g), -a)); };
        } else if (kind == "radial-log-power") {
            const double a = param("a", 1.0);
            m.eval = [a](const GroupElement& g) {
                return std::complex<double>(std::pow(1.0 + std::log1p(geometry::smooth_distance(g)), -a));
            };
        } else if (kind == "hm-bump") {
            const double r = param("radius", 1.0);
            m.eval = [r](const GroupElement& g) { return std::complex<double>(bump(geometry::smooth_distance(g) / r)); };
        } else if (kind == "riesz-like") {
            const double t = param("t", 1.0);
            m.eval = [t](const GroupElement& g) {
                const double d = geometry::smooth_distance(g);
                if (d == 0.0) return std::complex<double>(1.0);
                return std::polar(1.0, t * std::log(d / (1.0 + d)));
            };
        } else if (kind == "csv-sampled") {
            auto tab = table;
            m.eval = [tab](const GroupElement& g) { return std::complex<double>((*tab)(geometry::normalized_hs(g.matrix()))); };
        } else {
            throw input_error("unknown family: " + kind);
        }
        return m;
    }
};

inline const std::vector<std::string>& family_kinds() {
    static const std::vector<std::string> kinds = {"radial-power", "radial-log-power", "hm-bump", "riesz-like",
                                                   "csv-sampled"};
    return kinds;
}

// Parses "key=value" items; the permitted keys depend on the kind.
inline SymbolFamily make_family(const std::string& kind, const std::vector<std::string>& items,
                                const std::string& csv_path = "") {
    const auto& kinds = family_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw input_error("unknown family: " + kind);
    static const std::map<std::string, std::vector<std::string>> allowed = {
        {"radial-power", {"a"}}, {"radial-log-power", {"a"}}, {"hm-bump", {"radius"}}, {"riesz-like", {"t"}}, {"csv-sampled", {}}};
    SymbolFamily f;
    f.kind = kind;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw input_error("parameter must be key=value: " + item);
        const std::string key = item.substr(0, eq);
        const auto& keys = allowed.at(kind);
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw input_error("parameter '" + key + "' not accepted by family " + kind);
        std::istringstream vs(item.substr(eq + 1));
        vs.imbue(std::locale::classic());
        double v = 0.0;
        if (!(vs >> v) || !vs.eof() || !std::isfinite(v)) throw input_error("parameter value is not a finite number: " + item);
        f.params[key] = v;
    }
    if (kind == "hm-bump" && !(f.param("radius", 1.0) > 0.0)) throw input_error("hm-bump: radius must be positive");
    if (kind == "csv-sampled") {
        if (csv_path.empty()) throw input_error("csv-sampled needs --csv <path>");
        f.table = std::make_shared<SampledProfile>(SampledProfile::load(csv_path));
    }
    return f;
}

}  // namespace mcert::cli
