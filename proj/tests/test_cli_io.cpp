#include <doctest.h>

#include "edfnet/errors.hpp"
#include "edfnet/export.hpp"
#include "edfnet/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace edfnet;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = EDFNET_SCENARIO_DIR;
const std::string kCli = EDFNET_CLI;

std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("edfnet_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args) {
    const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string message_of(const std::string& text) {
    try {
        parse_scenario(text, "case.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = R"({
  "id": "m",
  "network": {"K": 1, "P": [[0.0]], "eps": 0.2},
  "arrivals": [{"rate": 1.0, "lead": {"type": "uniform", "lo": 0.5, "hi": 1.0}}],
  "capacity": [1.0],
  "grid": {"T": 2.0, "X": 3.0, "n_t": 50, "n_x": 75},
  "simulation": {"service": "deterministic", "seed": 3}
})";

}  // namespace

TEST_CASE("every shipped scenario parses and round-trips") {
    for (const auto& e : fs::directory_iterator(kScenarios)) {
        const auto s = load_scenario(e.path().string());
        const auto again = parse_scenario(scenario_to_json(s));
        CHECK(again.grid == s.grid);
        CHECK(again.network.K() == s.network.K());
        CHECK(again.network.routing.P() == s.network.routing.P());
        CHECK(again.seed == s.seed);
        CHECK(again.experiment.N_list == s.experiment.N_list);
    }
}

TEST_CASE("scenario validation messages") {
    CHECK_NOTHROW(parse_scenario(kMinimal));
    auto j = nlohmann::json::parse(kMinimal);

    CHECK(message_of("{\n  \"id\": 1,,\n}").find("case.json:2:") != std::string::npos);

    auto bad = j;
    bad["capacity"] = {0.0};
    CHECK(message_of(bad.dump()).find("capacity[0]") != std::string::npos);
    CHECK(message_of(bad.dump()).find("strictly positive") != std::string::npos);

    bad = j;
    bad["network"]["eps"] = 0.25;
    const auto eps_msg = message_of(bad.dump());
    CHECK(eps_msg.find("network.eps") != std::string::npos);
    CHECK(eps_msg.find("0.24") != std::string::npos);

    bad = j;
    bad["network"]["P"] = {{1.2}};
    CHECK(message_of(bad.dump()).find("network.P") != std::string::npos);

    bad = j;
    bad["arrivals"][0]["lead"]["type"] = "normal";
    CHECK(message_of(bad.dump()).find("arrivals[0].lead") != std::string::npos);

    bad = j;
    bad.erase("grid");
    CHECK(message_of(bad.dump()).find("grid") != std::string::npos);

    auto s = parse_scenario(kMinimal);
    apply_tol_overrides(s, {"ormt_tol=1e-12"});
    CHECK(s.experiment.tol("ormt_tol", 0.0) == 1e-12);
    CHECK_THROWS_AS(apply_tol_overrides(s, {"ormt_tol"}), ConfigError);
    CHECK_THROWS_AS(apply_tol_overrides(s, {"ormt_tol=abc"}), ConfigError);
}

TEST_CASE("event log round trip") {
    std::vector<SimEvent> ev{{0.5, EventKind::Arrival, 1, 0, 1.25, -1}, {0.75, EventKind::Routing, 1, 0, 1.45, 1}};
    std::stringstream ss;
    write_events_ndjson(ss, ev);
    CHECK(read_events_ndjson(ss) == ev);
}

TEST_CASE("cli: exit codes and exported artifacts") {
    const std::string sc = kScenarios + "/feedback2.json";
    CHECK(run("version") == 0);
    CHECK(run("--bogus") == 2);
    CHECK(run("simulate --scenario " + sc + " --unknown-flag") == 2);
    CHECK(run("simulate --scenario /nonexistent.json") == 2);
    CHECK(run("simulate --scenario " + sc + " --policy hard --N 3") == 2);

    const auto soft = scratch("soft");
    CHECK(run("fluid-soft --scenario " + sc + " --out " + soft.string()) == 0);
    CHECK(fs::exists(soft / "solution.csv"));
    CHECK(fs::exists(soft / "diagnostics.json"));
    CHECK(run("validate --solution " + soft.string()) == 0);

    const auto hard = scratch("hard");
    CHECK(run("fluid-hard --scenario " + kScenarios + "/tandem.json --out " + hard.string()) == 0);
    CHECK(fs::exists(hard / "consistency_log.json"));
    CHECK(fs::exists(hard / "direct" / "solution.csv"));
    const auto cross = nlohmann::json::parse(read(hard / "crosscheck.json"));
    CHECK(cross["invariants_pass"].get<bool>());
    CHECK(run("validate --solution " + hard.string()) == 0);

    const auto sim = scratch("sim");
    CHECK(run("simulate --scenario " + sc + " --policy hard --N 200 --check-balance --out " + sim.string()) == 0);
    CHECK(fs::exists(sim / "events.ndjson"));
    CHECK(run("validate --solution " + sim.string()) == 0);

    // Inflating one queue value breaks mass balance.
    std::string csv = read(soft / "solution.csv");
    const auto pos = csv.find("\nxi,0,");
    REQUIRE(pos != std::string::npos);
    const auto line_end = csv.find('\n', pos + 1);
    const auto comma = csv.rfind(',', line_end);
    csv.replace(comma + 1, line_end - comma - 1, "5");
    std::ofstream(soft / "solution.csv") << csv;
    CHECK(run("validate --solution " + soft.string()) == 1);

    std::ofstream(soft / "solution.csv") << "garbage";
    CHECK(run("validate --solution " + soft.string()) == 2);
}

TEST_CASE("cli: converge writes a reproducible report") {
    const auto a = scratch("conv_a");
    const auto b = scratch("conv_b");
    const std::string sc = kScenarios + "/tandem.json";
    const int code = run("converge --scenario " + sc + " --policy hard --threads 2 --out " + a.string());
    run("converge --scenario " + sc + " --policy hard --threads 1 --out " + b.string());
    CHECK((code == 0 || code == 1));
    CHECK(read(a / "errors.csv") == read(b / "errors.csv"));
    const auto rep = nlohmann::json::parse(read(a / "report.json"));
    CHECK(rep["levels"].size() == 3);
    CHECK(rep.contains("slope"));
}
