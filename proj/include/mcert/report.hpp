#pragma once

// Certification reports: per-check records with verdicts, serialized as
// JSON with sorted keys. Wall-clock data lives only in the "header" object
// so reports from identical inputs compare equal once it is removed.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mcert {

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

// FAIL dominates INCONCLUSIVE dominates PASS.
inline Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::fail || b == Verdict::fail) return Verdict::fail;
    if (a == Verdict::inconclusive || b == Verdict::inconclusive) return Verdict::inconclusive;
    return Verdict::pass;
}

struct CheckRecord {
    std::string name;
    std::string anchor;  // the inequality or identity being checked
    double measured = 0.0;
    double bound = 0.0;
    double tolerance = 0.0;
    Verdict verdict = Verdict::inconclusive;
    nlohmann::json detail = nlohmann::json::object();
};

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 15];
    return s;
}

// Non-finite numbers have no JSON literal; they are written as strings.
inline nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

struct CertificationReport {
    std::string command;
    nlohmann::json inputs = nlohmann::json::object();
    std::vector<std::uint64_t> seeds;
    std::vector<CheckRecord> records;
    nlohmann::json results = nlohmann::json::object();  // command-specific outputs
    nlohmann::json header = nlohmann::json::object();  // tool version, timestamps, runtimes

    void add(CheckRecord r) { records.push_back(std::move(r)); }

    Verdict verdict() const {
        if (records.empty()) return Verdict::inconclusive;
        Verdict v = Verdict::pass;
        for (const auto& r : records) v = combine(v, r.verdict);
        return v;
    }

    std::string input_digest() const { return "fnv1a:" + hex64(fnv1a(command + "\n" + inputs.dump())); }

    // Everything except the header.
    nlohmann::json body() const {
        nlohmann::json j;
        j["schema"] = "mcert/1";
        j["command"] = command;
        j["inputs"] = inputs;
        j["input_digest"] = input_digest();
        j["seeds"] = seeds;
        auto recs = nlohmann::json::array();
        for (const auto& r : records) {
            recs.push_back({{"name", r.name},
                            {"anchor", r.anchor},
                            {"measured", json_number(r.measured)},
                            {"bound", json_number(r.bound)},
                            {"tolerance", json_number(r.tolerance)},
                            {"verdict", to_string(r.verdict)},
                            {"detail", r.detail}});
        }
        j["records"] = recs;
        j["results"] = results;
        j["verdict"] = to_string(verdict());
        return j;
    }

    nlohmann::json to_json() const {
        auto j = body();
        j["header"] = header;
        return j;
    }
};

}  // namespace mcert
