#include "srl/cli_io.hpp"
#include "srl/error.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kScalar = json::parse(R"({
  "kind": "affine", "dim": 1,
  "matrix_law": {"type": "deterministic_scalar", "value": 0.5},
  "input_law": {"alpha": 0.5, "c_b": 1, "spherical": {"type": "point", "direction": [1]}}
})");

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("srl_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write_config(const fs::path& dir, const json& doc) {
    const auto p = dir / "config.json";
    std::ofstream(p) << doc.dump(2);
    return p.string();
}

int run(const std::string& args) {
    const std::string cmd = std::string(SRL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json manifest(const fs::path& out) { return json::parse(slurp(out / "manifest.json")); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate is byte-identical across reruns and worker counts") {
    const auto dir = scratch("sim");
    const auto cfg = write_config(dir, {{"model", kScalar}, {"params", {{"m", 2000}}}});
    REQUIRE(run("simulate --config " + cfg + " --seed 1 --out " + (dir / "a").string()) == 0);
    REQUIRE(run("simulate --config " + cfg + " --seed 1 --out " + (dir / "b").string()) == 0);
    REQUIRE(run("simulate --config " + cfg + " --seed 1 --workers 3 --out " + (dir / "c").string()) == 0);
    const auto a = slurp(dir / "a" / "ensemble.csv");
    CHECK(a.size() > 1000);
    CHECK(a == slurp(dir / "b" / "ensemble.csv"));
    CHECK(a == slurp(dir / "c" / "ensemble.csv"));
    const auto m = manifest(dir / "a");
    CHECK(m["status"] == "ok");
    CHECK(m["config_hash"] == manifest(dir / "c")["config_hash"]);
    CHECK(m["outputs"].size() == 2);
    REQUIRE(run("simulate --config " + cfg + " --seed 2 --out " + (dir / "d").string()) == 0);
    CHECK(a != slurp(dir / "d" / "ensemble.csv"));
    CHECK(m["config_hash"] != manifest(dir / "d")["config_hash"]);
}

TEST_CASE("schema errors exit with 2 and still write a manifest") {
    const auto dir = scratch("schema");
    const auto bad = write_config(dir, {{"model", kScalar}, {"params", {{"bogus", 1}}}});
    CHECK(run("simulate --config " + bad + " --seed 1 --out " + (dir / "o").string()) == 2);
    const auto m = manifest(dir / "o");
    CHECK(m["status"] == "failed");
    CHECK(m["exit_code"] == 2);

    json broken = kScalar;
    broken.erase("matrix_law");
    CHECK(run("simulate --config " + write_config(dir, {{"model", broken}}) + " --seed 1 --out " + (dir / "p").string()) == 2);
    CHECK(run("simulate --config " + write_config(dir, {{"model", kScalar}, {"action", "tail-fit"}}) + " --seed 1 --out " +
              (dir / "q").string()) == 2);
    CHECK(run("simulate --config " + write_config(dir, {{"model", kScalar}, {"params", {{"m", "many"}}}}) +
              " --seed 1 --out " + (dir / "r").string()) == 2);
    CHECK(run("simulate --config /nonexistent.json --seed 1 --out " + (dir / "s").string()) == 2);
    CHECK(run("simulate --seed 1") == 2);
}

TEST_CASE("rotation-only matrices are refused with exit 3") {
    const auto dir = scratch("rot");
    json model = {{"kind", "affine"},
                  {"dim", 2},
                  {"matrix_law", {{"type", "deterministic_matrix"}, {"matrix", {{0, -1}, {1, 0}}}}},
                  {"input_law", {{"alpha", 0.5}, {"c_b", 1}, {"spherical", {{"type", "uniform"}}}}}};
    const auto cfg = write_config(dir, {{"model", model}});
    CHECK(run("tail-series --config " + cfg + " --seed 1 --out " + (dir / "o").string()) == 3);
    const auto m = manifest(dir / "o");
    CHECK(m["failed_hypothesis"] == "kappa(alpha) < 1");
    CHECK(m["status"] == "failed");
}

TEST_CASE("numeric faults exit with 4") {
    const auto dir = scratch("numeric");
    json model = kScalar;
    model["matrix_law"]["value"] = 1e200;
    model["input_law"] = {{"alpha", 0.5}, {"c_b", 1}, {"spherical", {{"type", "point"}, {"direction", {1}}}}};
    const auto cfg = write_config(dir, {{"model", model}, {"params", {{"m", 10}, {"chain_n", 10}}}});
    CHECK(run("simulate --config " + cfg + " --seed 1 --out " + (dir / "o").string()) == 4);
    CHECK(manifest(dir / "o")["status"] == "failed");
}

TEST_CASE("tail-series writes the particle measure") {
    const auto dir = scratch("series");
    const auto cfg = write_config(dir, {{"model", kScalar}, {"params", {{"functionals", {"ball(1)", "ball(4)"}}}}});
    REQUIRE(run("tail-series --config " + cfg + " --seed 1 --out " + (dir / "o").string()) == 0);
    const auto m = manifest(dir / "o");
    CHECK(m["results"]["total_mass"].get<double>() == doctest::Approx(3.414213562).epsilon(1e-8));
    CHECK(m["results"]["functionals"]["ball(4)"].get<double>() == doctest::Approx(3.414213562 / 2).epsilon(1e-8));
    CHECK(fs::exists(dir / "o" / "lambda1.csv"));
}

TEST_CASE("tail-fit, contraction and verify-hypotheses produce their outputs") {
    const auto dir = scratch("misc");
    const auto fit = write_config(dir, {{"model", kScalar}, {"params", {{"m", 20000}}}});
    REQUIRE(run("tail-fit --config " + fit + " --seed 3 --out " + (dir / "fit").string()) == 0);
    CHECK(fs::exists(dir / "fit" / "tailfit.json"));
    CHECK(fs::exists(dir / "fit" / "spherical.csv"));
    const auto tf = json::parse(slurp(dir / "fit" / "tailfit.json"));
    CHECK(tf["a_n"]["n"].size() == 3);

    const auto plain = write_config(dir, {{"model", kScalar}, {"params", json::object()}});
    REQUIRE(run("contraction --config " + plain + " --seed 3 --out " + (dir / "con").string()) == 0);
    CHECK(manifest(dir / "con")["results"]["lyapunov"]["lambda_hat"].get<double>() ==
          doctest::Approx(std::log(0.5)));
    REQUIRE(run("verify-hypotheses --config " + plain + " --seed 3 --out " + (dir / "hyp").string()) == 0);
    CHECK(manifest(dir / "hyp")["results"]["all_pass"] == true);
}

TEST_CASE("stable-limit writes the CF grid") {
    const auto dir = scratch("stable");
    const auto cfg = write_config(dir, {{"model", kScalar}, {"params", {{"m", 20000}, {"n", 100}, {"trials", 1000}}}});
    REQUIRE(run("stable-limit --config " + cfg + " --seed 5 --out " + (dir / "o").string()) == 0);
    CHECK(fs::exists(dir / "o" / "cfgrid.csv"));
    const auto m = manifest(dir / "o");
    CHECK(m["results"]["nondegeneracy"]["status"] == "pass");
    CHECK(m["results"]["max_abs_diff"].get<double>() < 0.2);
}

TEST_CASE("config hash ignores workers and output directory") {
    const json doc = {{"model", kScalar}, {"params", {{"m", 10}}}, {"seed", 4}};
    const auto a = srl::io::parse_config(doc, "simulate", std::nullopt, 1, "x");
    const auto b = srl::io::parse_config(doc, "simulate", std::nullopt, 4, "y");
    CHECK(srl::io::config_hash(a) == srl::io::config_hash(b));
    json doc2 = doc;
    doc2["params"]["m"] = 11;
    CHECK(srl::io::config_hash(srl::io::parse_config(doc2, "simulate", std::nullopt, 1, "x")) != srl::io::config_hash(a));
    CHECK(a.params["bias_budget"] == 1e-3);
    CHECK_THROWS_AS(srl::io::parse_config(doc, "fly", std::nullopt, 1, "x"), srl::ConfigError);
}

}
