#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phi4n/runner.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace phi4n;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: " << p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

long count_lines(const std::string& text) {
    long n = 0;
    for (char c : text)
        if (c == '\n')
            ++n;
    return n;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::path("cli_test_out") / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string config_error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

RunConfig small_chain_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.M = 2;
    cfg.mass = 5.0;
    cfg.N_values = {2};
    cfg.integrator.dt = 0.05;
    cfg.integrator.scheme = Scheme::ExponentialLinear;
    cfg.integrator.mala_adjust = false;
    cfg.integrator.burn_in_steps = 30;
    cfg.integrator.thin_stride = 1;
    cfg.steps = 60;
    cfg.observables = {"Q1", "Q2"};
    cfg.displacements = {{{0, 0}}, {{1, 0}}};
    cfg.seed = 12345;
    cfg.output_dir = out_dir;
    cfg.threads = 1;
    return cfg;
}

} // namespace

TEST_CASE("config parsing fills every field") {
    const std::string text = R"({
        "lattice": {"M": 3, "m": 2.5},
        "model": {"N_list": [4, 8]},
        "integrator": {"dt": 0.02, "scheme": "exponential-linear", "mala": true,
                       "steps": 500, "burn_in": 100, "thin": 2},
        "observables": ["Q1", "mixed_1"],
        "displacements": [[0, 0], [2, 1]],
        "seed": 77,
        "output_dir": "somewhere",
        "threads": 2
    })";
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.M == 3);
    CHECK(cfg.mass == doctest::Approx(2.5));
    CHECK(cfg.N_values == std::vector<int>{4, 8});
    CHECK(cfg.integrator.dt == doctest::Approx(0.02));
    CHECK(cfg.integrator.scheme == Scheme::ExponentialLinear);
    CHECK(cfg.integrator.mala_adjust);
    CHECK(cfg.steps == 500);
    CHECK(cfg.integrator.burn_in_steps == 100);
    CHECK(cfg.integrator.thin_stride == 2);
    CHECK(cfg.observables == std::vector<std::string>{"Q1", "mixed_1"});
    REQUIRE(cfg.displacements.size() == 2);
    CHECK(cfg.displacements[1] == std::array<int, 2>{2, 1});
    CHECK(cfg.seed == 77);
    CHECK(cfg.output_dir == "somewhere");
    CHECK(cfg.threads == 2);

    const RunConfig defaults = parse_config("{}");
    CHECK(defaults.M == 4);
    CHECK(defaults.N_values == std::vector<int>{8});
    CHECK(defaults.integrator.scheme == Scheme::SemiImplicit);
}

TEST_CASE("config parser rejects unknown and ill-typed entries") {
    auto err = config_error_of([] { parse_config(R"({"integrator": {"dtt": 0.1}})"); });
    CHECK(err.find("integrator.dtt") != std::string::npos);

    err = config_error_of([] { parse_config(R"({"observables": ["Q99"]})"); });
    CHECK(err.find("Q99") != std::string::npos);

    err = config_error_of([] { parse_config(R"({"model": {"N": 0}})"); });
    CHECK(err.find("model.N") != std::string::npos);

    err = config_error_of([] { parse_config(R"({"model": {"N": 4, "N_list": [4]}})"); });
    CHECK(err.find("not both") != std::string::npos);

    err = config_error_of([] { parse_config(R"({"displacements": [[1, 2, 3]]})"); });
    CHECK(err.find("displacements[0]") != std::string::npos);

    err = config_error_of([] { parse_config(R"({"integrator": {"scheme": "euler"}})"); });
    CHECK(err.find("integrator.scheme") != std::string::npos);

    err = config_error_of([] { parse_config(R"({"lattice": {"M": 99}})"); });
    CHECK(err.find("lattice.M") != std::string::npos);

    err = config_error_of([] { parse_config("not json"); });
    CHECK(err.find("valid JSON") != std::string::npos);
}

TEST_CASE("fingerprint tracks config content") {
    RunConfig a;
    RunConfig b;
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    CHECK(config_fingerprint(a).size() == 16);
    b.seed = 2;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
}

TEST_CASE("chain seeds separate by index") {
    std::set<std::uint64_t> seen;
    seen.insert(42);
    for (int i = 0; i < 8; ++i)
        seen.insert(chain_seed(42, i));
    CHECK(seen.size() == 9);
    CHECK(chain_seed(42, 0) != chain_seed(43, 0));
}

TEST_CASE("closed-form predictions cover the scaled observables only") {
    const KernelSet ks = build_kernels(make_spec(3, 5.0));
    CHECK(oracle_mean("Q1", ks) == doctest::Approx(0.0));
    CHECK(oracle_mean("Q2", ks) == doctest::Approx(-ks.c1));
    CHECK(oracle_two_point("Q1", ks, 1, 0) == doctest::Approx(ks.G.at_wrapped(1, 0)));
    CHECK(oracle_two_point("mixed_1", ks, 2, 1) ==
          doctest::Approx(ks.C.at_wrapped(2, 1) * ks.G.at_wrapped(2, 1)));
    CHECK_THROWS_AS(oracle_mean("fluct_1", ks), std::invalid_argument);
    CHECK_THROWS_AS(oracle_two_point("fluct_1", ks, 0, 0), std::invalid_argument);
}

TEST_CASE("kernel run writes tables and a manifest") {
    const fs::path dir = fresh_dir("kernels");
    RunConfig cfg;
    cfg.M = 3;
    cfg.mass = 5.0;
    cfg.output_dir = dir.string();
    REQUIRE(run_kernels(cfg) == 0);

    for (const char* name : {"C.csv", "C_sq.csv", "G.csv", "L.csv"}) {
        const std::string text = slurp(dir / name);
        CHECK(text.rfind("x1,x2,value\n", 0) == 0);
        CHECK(count_lines(text) == 8 * 8 + 1);
    }
    const auto rec = nlohmann::json::parse(slurp(dir / "kernels.json"));
    CHECK(rec.at("M").get<int>() == 3);
    CHECK(rec.at("n").get<int>() == 8);
    CHECK(rec.at("a_eps").get<double>() > 0.0);
    CHECK(rec.at("c1").get<double>() > 0.0);
    const auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(man.at("command").get<std::string>() == "kernels");
    CHECK(man.at("config_hash").get<std::string>() == config_fingerprint(cfg));
    CHECK(man.at("seed").get<std::uint64_t>() == cfg.seed);
}

TEST_CASE("simulate, estimate and oracle round trip on one directory") {
    const fs::path dir = fresh_dir("roundtrip");
    const RunConfig cfg = small_chain_config(dir.string());

    REQUIRE(run_simulate(cfg) == 0);
    const std::string series = slurp(dir / "series.csv");
    CHECK(series.rfind("step,observable,mean,corr_0_0,corr_1_0\n", 0) == 0);
    CHECK(count_lines(series) == cfg.steps * 2 + 1);
    const auto chain = nlohmann::json::parse(slurp(dir / "chain.json"));
    CHECK(chain.at("N").get<int>() == 2);
    CHECK(chain.at("steps").get<long>() == cfg.integrator.burn_in_steps + cfg.steps);

    REQUIRE(run_estimate(cfg) == 0);
    const std::string est = slurp(dir / "estimates.csv");
    CHECK(est.rfind("observable,stat,mean,stderr,tau_int,n\n", 0) == 0);
    CHECK(count_lines(est) == 2 * 3 + 1);

    REQUIRE(run_oracle(cfg) == 0);
    const std::string pred = slurp(dir / "predictions.csv");
    CHECK(pred.rfind("observable,stat,dx,dy,prediction\n", 0) == 0);
    CHECK(count_lines(pred) == 2 * (1 + 2) + 1);
    CHECK(pred.find("Q2,mean,0,0,") != std::string::npos);
}

TEST_CASE("simulate refuses a multi-N config") {
    RunConfig cfg = small_chain_config((fs::path("cli_test_out") / "multi").string());
    cfg.N_values = {2, 4};
    CHECK_THROWS_AS(run_simulate(cfg), ConfigError);
}

TEST_CASE("expansion run writes term tables") {
    const fs::path dir = fresh_dir("expand");
    RunConfig cfg;
    cfg.M = 2;
    cfg.mass = 5.0;
    cfg.output_dir = dir.string();
    cfg.displacements = {{{0, 0}}, {{1, 0}}};
    REQUIRE(run_expand(cfg, 2, 0) == 0);
    const std::string text = slurp(dir / "expansion.csv");
    CHECK(text.rfind("power,coefficient,graph,value\n", 0) == 0);
    CHECK(count_lines(text) >= 2);
    const auto graphs = nlohmann::json::parse(slurp(dir / "graphs.json"));
    CHECK(graphs.at("closed").is_array());
    CHECK(!graphs.at("closed").empty());
}

TEST_CASE("verify run reports every check as passing") {
    const fs::path dir = fresh_dir("verify");
    RunConfig cfg;
    cfg.M = 3;
    cfg.mass = 5.0;
    cfg.seed = 9;
    cfg.output_dir = dir.string();
    REQUIRE(run_verify(cfg) == 0);
    const auto rep = nlohmann::json::parse(slurp(dir / "verify.json"));
    CHECK(rep.at("all_pass").get<bool>());
    REQUIRE(rep.at("checks").is_array());
    CHECK(rep.at("checks").size() >= 6);
    for (const auto& c : rep.at("checks")) {
        INFO("check ", c.at("name").get<std::string>());
        CHECK(c.at("pass").get<bool>());
        CHECK(c.at("residual").get<double>() <= c.at("bound").get<double>());
    }
}

TEST_CASE("compare runs are byte-identical under a fixed seed") {
    const fs::path dir_a = fresh_dir("compare_a");
    const fs::path dir_b = fresh_dir("compare_b");
    RunConfig cfg = small_chain_config(dir_a.string());
    cfg.N_values = {2, 4};
    cfg.integrator.mala_adjust = true;
    cfg.steps = 200;
    cfg.integrator.burn_in_steps = 100;

    REQUIRE(run_compare(cfg) == 0);
    cfg.output_dir = dir_b.string();
    REQUIRE(run_compare(cfg) == 0);

    for (const char* name : {"compare.csv", "rates.csv"}) {
        const std::string a = slurp(dir_a / name);
        const std::string b = slurp(dir_b / name);
        CHECK_MESSAGE(a == b, name << " differs between identical runs");
        CHECK(!a.empty());
    }
    const std::string body = slurp(dir_a / "compare.csv");
    CHECK(body.rfind("observable,displacement,N,estimate,stderr,prediction,z\n", 0) == 0);
    const auto rep = nlohmann::json::parse(slurp(dir_a / "report.json"));
    REQUIRE(rep.at("chains").is_array());
    CHECK(rep.at("chains").size() == 2);
}
