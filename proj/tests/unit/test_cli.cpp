#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcert/cli/commands.hpp"

using namespace mcert;
using namespace mcert::cli;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mcert");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

nlohmann::json run_json(const std::vector<std::string>& args, int expected_code) {
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, expected_code) << r.err;
    return nlohmann::json::parse(r.out);
}

const nlohmann::json& record(const nlohmann::json& rep, const std::string& name) {
    for (const auto& r : rep["records"])
        if (r["name"] == name) return r;
    throw std::runtime_error("no record " + name);
}

std::string temp_file(const std::string& name, const std::string& content) {
    const std::string path = testing::TempDir() + name;
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(Families, ProfilesMatchClosedForms) {
    const auto rp = make_family("radial-power", {"a=3"}).profile();
    EXPECT_DOUBLE_EQ(rp(2.0), 1.0 / 27.0);
    const auto lp = make_family("radial-log-power", {"a=2"}).profile();
    EXPECT_DOUBLE_EQ(lp(std::exp(1.0)), 0.25);
    const auto hb = make_family("hm-bump", {"radius=2"}).profile();
    EXPECT_DOUBLE_EQ(hb(1.0), 1.0);
    EXPECT_EQ(hb(3.5), 0.0);
    const auto rz = make_family("riesz-like", {"t=2"}).profile();
    EXPECT_NEAR(rz(2.0), std::cos(2.0 * std::log(0.5)), 1e-15);
}

TEST(Families, GroupSymbolAtIdentityAndDecay) {
    const auto e = geometry::GroupElement::identity(3);
    for (const auto& kind : {"radial-power", "radial-log-power", "hm-bump", "riesz-like"})
        EXPECT_NEAR(std::abs(make_family(kind, {}).group_symbol()(e) - std::complex<double>(1.0)), 0.0, 1e-15) << kind;
    const std::vector<double> ex = {3.0, 0.0, -3.0};
    const auto g = geometry::GroupElement::diagonal(ex);
    const double d = geometry::smooth_distance(g);
    EXPECT_NEAR(make_family("radial-power", {"a=2"}).group_symbol()(g).real(), 1.0 / ((1 + d) * (1 + d)), 1e-15);
    EXPECT_NEAR(std::abs(make_family("riesz-like", {}).group_symbol()(g)), 1.0, 1e-15);
}

TEST(Families, RejectsBadParameters) {
    EXPECT_THROW(make_family("gaussian", {}), input_error);
    EXPECT_THROW(make_family("radial-power", {"b=1"}), input_error);
    EXPECT_THROW(make_family("radial-power", {"a"}), input_error);
    EXPECT_THROW(make_family("radial-power", {"a=1x"}), input_error);
    EXPECT_THROW(make_family("radial-power", {"a=nan"}), input_error);
    EXPECT_THROW(make_family("hm-bump", {"radius=0"}), input_error);
    EXPECT_THROW(make_family("csv-sampled", {}), input_error);
}

TEST(Families, SampledProfileInterpolates) {
    std::istringstream in("x,value\n1,4\n3,0\n5,2\n");
    const auto s = SampledProfile::parse(in);
    EXPECT_DOUBLE_EQ(s(2.0), 2.0);
    EXPECT_DOUBLE_EQ(s(4.0), 1.0);
    EXPECT_DOUBLE_EQ(s(0.5), 4.0);
    EXPECT_DOUBLE_EQ(s(9.0), 2.0);
    std::istringstream bad("x,value\n1,4\n1,5\n");
    EXPECT_THROW(SampledProfile::parse(bad), input_error);
}

TEST(Csv, ParsesNumbersAndRejectsRaggedRows) {
    std::istringstream in("a,b\n1.5,-2e-3\n\n3,4\n");
    const auto rows = read_numeric_csv(in, "t");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_DOUBLE_EQ(rows[0][1], -2e-3);
    std::istringstream ragged("a,b\n1,2\n3\n");
    EXPECT_THROW(read_numeric_csv(ragged, "t"), input_error);
    std::istringstream comma("a\n1,5\n");
    EXPECT_EQ(read_numeric_csv(comma, "t")[0].size(), 2u);
    std::istringstream word("a\nx\n");
    EXPECT_THROW(read_numeric_csv(word, "t"), input_error);
}

TEST(CertifyHm, ConstantSymbolHasConstantOne) {
    const auto rep = run_json({"certify-hm", "--n", "3", "--param", "a=0"}, 0);
    EXPECT_EQ(rep["results"]["C_hm"].get<double>(), 1.0);
    EXPECT_EQ(rep["verdict"], "PASS");
}

TEST(CertifyHm, CriticalPowerDecayExponent) {
    // (1 + d)^{-5} on SL_3: decay exponent 5 = [9/2] + 1, finite constant
    const auto rep = run_json({"certify-hm", "--n", "3", "--param", "a=5"}, 0);
    EXPECT_NEAR(rep["results"]["decay_exponent"].get<double>(), 5.0, 0.5);
    EXPECT_TRUE(std::isfinite(rep["results"]["C_hm"].get<double>()));
    EXPECT_EQ(record(rep, "decay_propagation")["verdict"], "PASS");
}

TEST(CertifyHm, SubcriticalPowerFailsAtTopOrder) {
    const auto rep = run_json({"certify-hm", "--n", "3", "--param", "a=4"}, 1);
    EXPECT_EQ(record(rep, "hm_order_5")["verdict"], "FAIL");
    EXPECT_EQ(record(rep, "hm_order_3")["verdict"], "PASS");
}

TEST(CertifyHm, UnboundedSymbolFailsAtOrderZero) {
    const auto rep = run_json({"certify-hm", "--n", "3", "--param", "a=-1"}, 1);
    EXPECT_EQ(record(rep, "hm_order_0")["verdict"], "FAIL");
}

TEST(CertifyHm, DefaultOrderIsHalfDimensionPlusOne) {
    const auto rep = run_json({"certify-hm", "--n", "2", "--param", "a=3"}, 0);
    EXPECT_EQ(rep["inputs"]["order"], 3);
    EXPECT_NO_THROW(record(rep, "hm_order_3"));
}

TEST(Rigidity, RankGapExitCodes) {
    const auto low = run_json({"rigidity", "--family", "radial-power", "--param", "a=5", "--n", "3", "--p", "100"}, 0);
    EXPECT_EQ(record(low, "decay_k0")["verdict"], "PASS");
    const auto high = run_json({"rigidity", "--family", "radial-power", "--param", "a=5", "--n", "16", "--p", "100"}, 1);
    EXPECT_EQ(record(high, "decay_k0")["verdict"], "FAIL");
    EXPECT_NEAR(high["results"]["c"][0].get<double>(), 16.0 / 3.0, 1e-15);
    EXPECT_EQ(high["results"]["classification"], "VIOLATED");
}

TEST(Rigidity, ConstantProfilePasses) {
    const auto rep = run_json({"rigidity", "--param", "a=0", "--n", "5", "--p", "10"}, 0);
    EXPECT_EQ(rep["results"]["classification"], "CONSISTENT");
}

TEST(Rigidity, ExponentsForFiveTen) {
    const auto rep = run_json({"rigidity", "--param", "a=0", "--n", "5", "--p", "10"}, 0);
    EXPECT_NEAR(rep["results"]["alpha0"].get<double>(), 1.1, 1e-14);
    EXPECT_NEAR(rep["results"]["c"][1].get<double>(), 5.0 / 3.0, 1e-14);
    EXPECT_NO_THROW(record(rep, "decay_k1"));
    EXPECT_THROW(record(rep, "decay_k2"), std::runtime_error);
}

TEST(Rigidity, SineHasNoLimit) {
    RigidityOptions opt;
    opt.n = 5;
    opt.p = 10;
    const auto rep = cli::rigidity([](double x) { return std::sin(x); }, "sin", opt);
    EXPECT_EQ(rep.records.front().name, "limit_at_infinity");
    EXPECT_EQ(rep.records.front().verdict, Verdict::fail);
    EXPECT_EQ(exit_code(rep), exit_fail);
}

TEST(Rigidity, RankTwoHasNoExponents) {
    // the sphere S^{n-1} carrying the exponents needs n >= 3
    const auto path = temp_file("pts.csv", "g11,g12,g21,g22\n1,0,0,1\n2,0,0,0.5\n");
    EXPECT_EQ(run_cli({"rigidity", "--param", "a=0", "--n", "2", "--p", "5", "--points", path}).code, exit_input);
}

TEST(Rigidity, PointsSectionOnSl3) {
    const auto path = temp_file("pts3.csv", "a,b,c,d,e,f,g,h,i\n1,0,0,0,1,0,0,0,1\n2,0,0,0,1,0,0,0,0.5\n1,1,0,0,1,0,0,0,1\n");
    const auto rep = run_json({"rigidity", "--param", "a=5", "--n", "3", "--p", "100", "--points", path}, 0);
    const auto& r = record(rep, "points_lower_bound");
    // every entry phi(|g_i g_j^{-1}|) is a lower bound; the diagonal is phi(1) = 2^{-5}
    EXPECT_GE(r["measured"].get<double>(), r["bound"].get<double>() - 1e-8);
    EXPECT_GE(r["bound"].get<double>(), 1.0 / 32.0 - 1e-15);
    EXPECT_EQ(rep["inputs"]["points"], 3);
}

TEST(Rigidity, DomainErrorsExitTwo) {
    EXPECT_EQ(run_cli({"rigidity", "--n", "3", "--p", "3"}).code, exit_input);  // p <= 2 + 2/(n-2)
    EXPECT_EQ(run_cli({"rigidity", "--n", "3"}).code, exit_input);
    EXPECT_EQ(run_cli({"rigidity", "--n", "3", "--p", "100", "--family", "nope"}).code, exit_input);
}

TEST(SphereSpectrum, TableMatchesLegendreRecurrence) {
    const auto r = run_cli({"sphere-spectrum", "--n", "3", "--p", "4", "--r", "0", "--x", "0.5", "--kmax", "10", "--format", "csv"});
    // alpha0 = 0 at (3, 4): the r = 0 sum diverges
    EXPECT_EQ(r.code, exit_fail);
    std::istringstream in(r.out);
    const auto rows = read_numeric_csv(in, "spectrum");
    ASSERT_EQ(rows.size(), 11u);
    double p0 = 1.0, p1 = 0.5;
    for (int k = 0; k <= 10; ++k) {
        const double pk = k == 0 ? 1.0 : p1;
        EXPECT_EQ(rows[k][1], 2 * k + 1);
        EXPECT_NEAR(rows[k][2], pk, 1e-14) << k;
        if (k >= 1) {
            const double next = ((2 * k + 1) * 0.5 * p1 - k * p0) / (k + 1);
            p0 = p1;
            p1 = next;
        }
    }
}

TEST(SphereSpectrum, ConvergenceLaw) {
    const auto conv = run_json({"sphere-spectrum", "--n", "5", "--p", "4", "--r", "0", "--x", "0.5,-0.2"}, 0);
    EXPECT_EQ(conv["records"].size(), 2u);
    const auto div = run_json({"sphere-spectrum", "--n", "5", "--p", "4", "--r", "1", "--x", "0.5"}, 1);
    EXPECT_EQ(div["records"][0]["measured"], "inf");
    EXPECT_EQ(run_cli({"sphere-spectrum", "--x", "0.99"}).code, exit_input);
}

TEST(SchurBound, OnesMatrixHasNormOne) {
    const auto path = temp_file("ones.csv", "a,b,c\n1,1,1\n1,1,1\n1,1,1\n");
    for (const std::string p : {"1", "2", "4", "inf"}) {
        const auto rep = run_json({"schur-bound", "--matrix", path, "--p", p}, 0);
        EXPECT_NEAR(rep["results"]["lower_bound"].get<double>(), 1.0, 1e-8) << p;
    }
}

TEST(SchurBound, NeedsExactlyOneSource) {
    EXPECT_EQ(run_cli({"schur-bound", "--p", "2"}).code, exit_input);
    const auto bad = temp_file("bad.csv", "a,b\n1,2\n3\n");
    EXPECT_EQ(run_cli({"schur-bound", "--matrix", bad}).code, exit_input);
}

TEST(Geometry, WeylSlopeForSl2) {
    const auto rep = run_json({"geometry", "--n", "2"}, 0);
    EXPECT_NEAR(rep["results"]["slope"].get<double>(), 2.0, 0.1);
    EXPECT_EQ(run_cli({"geometry", "--n", "7"}).code, exit_input);
}

TEST(Output, DeterministicBodyAndSortedKeys) {
    const std::vector<std::string> args = {"rigidity", "--param", "a=5", "--n", "3", "--p", "100", "--witness",
                                           "--grid-levels", "2"};
    auto a = run_json(args, 0), b = run_json(args, 0);
    EXPECT_TRUE(a.contains("header"));
    a.erase("header");
    b.erase("header");
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_EQ(a["schema"], "mcert/1");
    // object keys are emitted in lexicographic order
    std::string prev;
    for (auto it = a.begin(); it != a.end(); ++it) {
        EXPECT_LT(prev, it.key());
        prev = it.key();
    }
}

TEST(Output, WritesToFile) {
    const std::string path = testing::TempDir() + "report.json";
    std::remove(path.c_str());
    const auto r = run_cli({"geometry", "--n", "2", "--out", path});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    const auto rep = nlohmann::json::parse(in);
    EXPECT_EQ(rep["command"], "geometry");
}

TEST(Output, HelpExitsZero) {
    const auto r = run_cli({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("certify-hm"), std::string::npos);
}
