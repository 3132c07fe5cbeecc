#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qdcluster/scenario.hpp"

using namespace qdc;
using nlohmann::json;

namespace {

std::string field_of(const json& raw, const std::vector<std::string>& overrides = {}) {
    try {
        resolve_scenario(raw, overrides);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("qdc_scenario_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("resolution fills defaults and dependent values") {
    const json raw = {{"name", "t"}, {"experiment", "build-cluster"}, {"lattice", {{"kind", "paired-dot-planar"}}}};
    const auto r = resolve_scenario(raw);
    CHECK(r["lattice"]["rows"] == 2);
    CHECK(r["build"]["stabilizer_tolerance"] == 1e-6);
    CHECK(r["output_path"] == "reports/t");
    CHECK(r["encoding"]["inter_sq"]["edges"].size() == 2);

    const auto bare = resolve_scenario({{"name", "t"}, {"experiment", "mbqc-rotation"}});
    CHECK(bare["mbqc"]["branches"] == "exhaustive");
    const auto e = resolve_scenario({{"name", "t"}, {"experiment", "error-sweep"}}, {"error.kind=inter-sq-imbalance"});
    CHECK(e["error"]["grid"].size() == 5);
}

TEST_CASE("overrides use dotted paths") {
    const json raw = {{"name", "t"}, {"experiment", "build-cluster"}};
    const auto r = resolve_scenario(raw, {"schedule.kind=simultaneous", "lattice.rows=3", "evolve.tolerance=1e-9"}, 42);
    CHECK(r["schedule"]["kind"] == "simultaneous");
    CHECK(r["lattice"]["rows"] == 3);
    CHECK(r["evolve"]["tolerance"] == 1e-9);
    CHECK(r["seed"] == 42);
    const auto s = resolve_scenario({{"name", "t"}, {"experiment", "spectrum"}}, {"spectrum.J.1=3"});
    CHECK(s["spectrum"]["J"][1] == 3);
}

TEST_CASE("config errors name the field") {
    CHECK(field_of({{"name", "t"}}) == "experiment");
    CHECK(field_of({{"name", "t"}, {"experiment", "levitate"}}) == "experiment");
    CHECK(field_of({{"experiment", "spectrum"}}) == "name");
    CHECK(field_of({{"name", "t"}, {"experiment", "spectrum"}, {"spectrum", {{"colour", 1}}}}) == "spectrum.colour");
    CHECK(field_of({{"name", "t"}, {"experiment", "build-cluster"}, {"lattice", {{"rows", "two"}}}}) ==
          "lattice.rows");
    CHECK(field_of({{"name", "t"}, {"experiment", "build-cluster"}}, {"build.refocus=3"}) == "build.refocus");
    CHECK(field_of({{"name", "t"}, {"experiment", "build-cluster"}}, {"nope.deeper=1"}) == "nope");
    CHECK(field_of({{"name", "t"}, {"experiment", "build-cluster"}}, {"lattice.kind=hexagonal"}) == "lattice.kind");
    CHECK(field_of({{"name", "t"}, {"experiment", "spectrum"}}, {"seed=-1"}) == "seed");

    // Site budget surfaces when the experiment is set up.
    const auto big = resolve_scenario({{"name", "t"}, {"experiment", "build-cluster"}}, {"lattice.rows=6", "lattice.cols=6"});
    CHECK_THROWS_AS(run_experiment(big), ConfigError);
}

TEST_CASE("hash depends only on resolved parameters") {
    const json raw = {{"name", "t"}, {"experiment", "spectrum"}};
    const auto a = resolve_scenario(raw);
    const auto b = resolve_scenario(raw, {"spectrum.tolerance=1e-10"});
    const auto c = resolve_scenario(raw, {}, 5);
    CHECK(scenario_hash(a) == scenario_hash(b));
    CHECK(scenario_hash(a) != scenario_hash(c));
    CHECK(scenario_hash(a).size() == 16);
}

TEST_CASE("run exit codes") {
    const auto dir = scratch("exit");
    std::ostringstream out, err;

    std::ofstream(dir / "gate.json") << R"({"name": "gate", "experiment": "verify-gate"})";
    RunOptions ok{(dir / "gate.json").string(), {}, (dir / "gate").string(), std::nullopt, false, 0};
    CHECK(run_scenario(ok, out, err) == 0);
    const auto summary = json::parse(std::ifstream(dir / "gate" / "summary.json"));
    CHECK(summary["pass"] == true);
    CHECK(summary.contains("timestamp"));
    CHECK(summary["hash"].get<std::string>().size() == 16);
    // A second run without --force keeps the report.
    CHECK(run_scenario(ok, out, err) == 2);
    ok.force = true;
    CHECK(run_scenario(ok, out, err) == 0);

    std::ofstream(dir / "bare.json") << R"({"name": "bare", "experiment": "build-cluster"})";
    RunOptions sim{(dir / "bare.json").string(), {"schedule.kind=simultaneous"}, (dir / "sim").string(), std::nullopt,
                   false, 0};
    CHECK(run_scenario(sim, out, err) == 1);
    std::ifstream csv(dir / "sim" / "stabilizers.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "lq_index,expectation,pass");

    std::ofstream(dir / "broken.json") << R"({"name": "broken", )";
    RunOptions bad{(dir / "broken.json").string(), {}, (dir / "broken").string(), std::nullopt, false, 0};
    CHECK(run_scenario(bad, out, err) == 2);

    RunOptions typo{(dir / "bare.json").string(), {"build.refocuss=true"}, (dir / "typo").string(), std::nullopt,
                    false, 0};
    std::ostringstream err2;
    CHECK(run_scenario(typo, out, err2) == 2);
    CHECK(err2.str().find("build.refocuss") != std::string::npos);
    std::filesystem::remove_all(dir);
}
