#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cusplab/config.hpp"

using namespace cusplab;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

const fs::path& scratch() {
    static const fs::path d = [] {
        const fs::path p = fs::temp_directory_path() / ("cusplab_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

Run cli(const std::string& args, const std::string& env = "") {
    const fs::path log = scratch() / "log.txt";
    const std::string cmd = env + " " + std::string(CUSPLAB_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string dir(const std::string& name) { return (scratch() / name).string(); }

struct Cleanup : ::testing::Environment {
    void TearDown() override { fs::remove_all(scratch()); }
};
const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new Cleanup);

}  // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
    const auto r = cli("frobnicate");
    EXPECT_EQ(r.code, 64);
    EXPECT_NE(r.output.find("repro-all"), std::string::npos);  // usage lists the subcommands
    EXPECT_EQ(cli("").code, 64);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli("--help").code, 0); }

TEST(Cli, InvalidEnergyFailsBeforeCompute) {
    const auto r = cli("mode-sweep --E 1.5 --out-dir " + dir("bad_e"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("E must lie in (0, 1)"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir("bad_e")));
}

TEST(Cli, OtherValidationFailures) {
    EXPECT_EQ(cli("curvature --set profile.kind=nope --out-dir " + dir("v1")).code, 2);
    EXPECT_EQ(cli("curvature --set not_a_key=1 --out-dir " + dir("v1")).code, 2);
    EXPECT_EQ(cli("mode-sweep --bogus 1 --out-dir " + dir("v1")).code, 2);
    EXPECT_EQ(cli("glue-check --h-list 0.1,0.05 --out-dir " + dir("v1")).code, 2);
    EXPECT_EQ(cli("count --potential well:1,0 --out-dir " + dir("v1")).code, 2);
    EXPECT_EQ(cli("count --circle-points 64 --radii 40 --out-dir " + dir("v1")).code, 2);
    EXPECT_EQ(cli("curvature --config /nonexistent/file.cfg --out-dir " + dir("v1")).code, 2);
    EXPECT_FALSE(fs::exists(dir("v1")));
}

TEST(Cli, NumericalFailureWritesDiagnosticRow) {
    // the Wronskian overflows this deep in the lower half plane
    const auto r = cli("resonances --box=-1,1,-400,-399 --out-dir " + dir("num"));
    EXPECT_EQ(r.code, 3);
    const std::string csv = slurp(fs::path(dir("num")) / "resonances.csv");
    EXPECT_EQ(csv.rfind("status,message\nnumerical_failure,\"", 0), 0u) << csv;
    EXPECT_NE(csv.find("overflow"), std::string::npos);
}

TEST(Cli, DeterministicRerun) {
    ASSERT_EQ(cli("geodesics --count 30 --seed 11 --out-dir " + dir("d1")).code, 0);
    ASSERT_EQ(cli("geodesics --count 30 --seed 11 --out-dir " + dir("d2"), "CUSPLAB_WORKERS=3").code, 0);
    ASSERT_EQ(cli("geodesics --count 30 --seed 12 --out-dir " + dir("d3")).code, 0);
    const std::string a = slurp(fs::path(dir("d1")) / "geodesics.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(fs::path(dir("d2")) / "geodesics.csv"));
    EXPECT_NE(a, slurp(fs::path(dir("d3")) / "geodesics.csv"));
    ASSERT_EQ(cli("bessel-check --samples 20 --seed 4 --out " + dir("b1.csv")).code, 0);
    ASSERT_EQ(cli("bessel-check --samples 20 --seed 4 --out " + dir("b2.csv")).code, 0);
    EXPECT_EQ(slurp(dir("b1.csv")), slurp(dir("b2.csv")));
}

TEST(Cli, ConfigFileEqualsOverrides) {
    {
        std::ofstream f(dir("funnel.cfg"));
        f << "# funnel end\nprofile.kind = funnel\nprofile.beta0 = 0.3\ngrid.points = 21\n";
    }
    ASSERT_EQ(cli("curvature --config " + dir("funnel.cfg") + " --out " + dir("c1.csv")).code, 0);
    ASSERT_EQ(cli("curvature --set profile.kind=funnel --set profile.beta0=0.3 --set grid.points=21 --out " + dir("c2.csv")).code,
              0);
    const std::string a = slurp(dir("c1.csv"));
    EXPECT_EQ(a, slurp(dir("c2.csv")));
    // funnel: f = 2 cosh(r) up to a constant, so K = -f''/f = -1 exactly
    std::istringstream is(a);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "r,K_radial,K_tangential,oracle_K,abs_error");
    int rows = 0;
    while (std::getline(is, line)) {
        std::stringstream ls(line);
        std::string r, k, kt, ko, err;
        std::getline(ls, r, ',');
        std::getline(ls, k, ',');
        std::getline(ls, kt, ',');
        std::getline(ls, ko, ',');
        std::getline(ls, err, ',');
        EXPECT_NEAR(std::stod(k), -1.0, 1e-12);
        EXPECT_LT(std::stod(err), 1e-6);
        ++rows;
    }
    EXPECT_EQ(rows, 21);
}

TEST(Cli, SvgOnlyWhenAsked) {
    ASSERT_EQ(cli("cylinder-sweep --points 8 --re-min 10 --re-max 20 --window-points 64 --out-dir " + dir("s1")).code, 0);
    EXPECT_TRUE(fs::exists(fs::path(dir("s1")) / "cylinder_sweep.csv"));
    EXPECT_FALSE(fs::exists(fs::path(dir("s1")) / "cylinder_sweep.svg"));
    ASSERT_EQ(cli("cylinder-sweep --svg --points 8 --re-min 10 --re-max 20 --window-points 64 --out-dir " + dir("s2")).code, 0);
    const std::string svg = slurp(fs::path(dir("s2")) / "cylinder_sweep.svg");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
}

TEST(Cli, ReproSummary) {
    const auto r = cli("repro-all --only 1,3 --out-dir " + dir("repro"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(slurp(fs::path(dir("repro")) / "repro_summary.csv"),
              "criterion,name,result\n1,curvature oracle,PASS\n3,Bessel identities,PASS\n");
    EXPECT_EQ(cli("repro-all --only 11 --out-dir " + dir("repro_bad")).code, 2);
}

TEST(Config, ParseAndWrite) {
    std::istringstream is("a = 1\n  # comment\n\nb=x y  # trailing\n");
    const auto kv = config::parse(is);
    EXPECT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv.at("a"), "1");
    EXPECT_EQ(kv.at("b"), "x y");
    std::ostringstream os;
    config::write(os, kv);
    EXPECT_EQ(os.str(), "a = 1\nb = x y\n");
    std::istringstream bad("a 1\n"), dup("a=1\na=2\n");
    EXPECT_THROW(config::parse(bad), ParameterError);
    EXPECT_THROW(config::parse(dup), ParameterError);
    EXPECT_THROW(config::split_override("=3"), ParameterError);
    EXPECT_THROW(config::to_double("x", "1.5abc"), ParameterError);
    EXPECT_THROW(config::to_double("x", "nan"), ParameterError);
}

TEST(Config, RoundTrip) {
    config::RunConfig c;
    c.profile = WarpProfile::tabulated_profile({-2, -1, 0, 1, 2.5}, {0.1, -0.2, 0.3 + 1e-13, 0.0, 1.0 / 3}, 2, 1.5);
    c.profile.theta0 = 0.45;
    c.E = 0.123456789;
    c.hs = {0.2, 0.1};
    c.alphas = {0.0, 57.8};
    c.seed = 99;
    c.out_dir = "out/x";
    const auto kv = config::run_config_to(c);
    std::ostringstream os;
    config::write(os, kv);
    std::istringstream is(os.str());
    const auto back = config::run_config_from(config::parse(is));
    EXPECT_EQ(config::run_config_to(back), kv);
    EXPECT_EQ(back.profile.tab_beta, c.profile.tab_beta);
    EXPECT_EQ(back.E, c.E);
    EXPECT_EQ(back.profile.n, 2);

    for (const auto& p : {WarpProfile::zero_profile(), WarpProfile::funnel_profile(0.25, 1, 3.0),
                          WarpProfile::b_profile(-0.3, 0.2, 0.7)}) {
        const auto q = config::profile_from(config::profile_to(p));
        EXPECT_EQ(q.kind, p.kind);
        EXPECT_EQ(q.beta0, p.beta0);
        EXPECT_EQ(q.amp, p.amp);
        EXPECT_EQ(q.width, p.width);
        EXPECT_EQ(q.R_g, p.R_g);
    }
}

TEST(Config, Validation) {
    auto from = [](config::KeyValues kv) { return config::run_config_from(kv); };
    EXPECT_NO_THROW(from({}));
    EXPECT_THROW(from({{"E", "1.5"}}), ParameterError);
    EXPECT_THROW(from({{"E", "0"}}), ParameterError);
    EXPECT_THROW(from({{"Gamma", "-1"}}), ParameterError);
    EXPECT_THROW(from({{"h_list", "0.1,-0.05"}}), ParameterError);
    EXPECT_THROW(from({{"alpha_list", "-1"}}), ParameterError);
    EXPECT_THROW(from({{"theta0", "1.6"}}), ParameterError);
    EXPECT_THROW(from({{"n", "0"}}), ParameterError);
    EXPECT_THROW(from({{"grid.r_min", "3"}, {"grid.r_max", "1"}}), ParameterError);
    EXPECT_THROW(from({{"profile.kind", "tabulated"}}), ParameterError);
    EXPECT_THROW(from({{"profile.kind", "custom"}}), UnsupportedProfile);
    EXPECT_THROW(from({{"seed", "-3"}}), ParameterError);
    EXPECT_THROW(config::profile_to(WarpProfile::custom_profile("c", [](double) { return BetaJet{}; })), UnsupportedProfile);
}
