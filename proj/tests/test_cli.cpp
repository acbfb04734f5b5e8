#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "commands.hpp"
#include "kcover/error.hpp"
#include "kcover/io.hpp"
#include "kcover/lloyd.hpp"
#include "kcover/scenario.hpp"

using namespace kcover;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kScenarios = fs::path(KCOVER_SOURCE_DIR) / "tools" / "scenarios";
const fs::path kGolden = fs::path(KCOVER_SOURCE_DIR) / "tests" / "golden";

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("kcover_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_scenario(const fs::path& dir, const json& doc) {
    const fs::path p = dir / "scenario.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

cli::Options options(const fs::path& scenario, const fs::path& out) {
    cli::Options opt;
    opt.scenario = scenario;
    opt.out = out;
    return opt;
}

json small_scenario() {
    return json{{"version", 1},
                {"name", "small"},
                {"region", {{"rectangle", {0, 0, 1, 1}}}},
                {"n", 6},
                {"k", 2},
                {"seed", 11},
                {"integrator", {{"method", "rk4"}, {"h", 0.5}, {"t_end", 10}, {"stop_tol", 1e-7}}},
                {"iteration", {{"tol", 1e-8}, {"max_cycles", 40}}}};
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

// Reconfigure from a snapshot file and recompute H with the sum_squares cost.
double snapshot_H(const fs::path& p, std::size_t k) {
    const json snap = read_json(p);
    std::vector<Point2> gens;
    for (const auto& g : snap.at("generators")) gens.push_back(io::point_from_json(g));
    const AgentConfiguration config(gens, io::region_from_json(snap.at("region")));
    return evaluate_H(config, k, CostModel::sum_squares(k), DensityField::uniform());
}

}  // namespace

TEST_CASE("scenario parsing is strict") {
    Scenario s = parse_scenario(small_scenario());
    CHECK(s.n == 6);
    CHECK(s.k == 2);
    CHECK(s.max_cycles == 40);
    CHECK(initial_configuration(s).size() == 6);

    json bad = small_scenario();
    bad["colour"] = "red";
    CHECK_THROWS_AS(parse_scenario(bad), SchemaError);
    bad = small_scenario();
    bad["version"] = 2;
    CHECK_THROWS_AS(parse_scenario(bad), SchemaError);
    bad = small_scenario();
    bad["k"] = 7;
    CHECK_THROWS_AS(parse_scenario(bad), SchemaError);
    bad = small_scenario();
    bad["integrator"]["h"] = "fast";
    CHECK_THROWS_AS(parse_scenario(bad), SchemaError);
    bad = small_scenario();
    bad["initial"] = {{"positions", {{0.2, 0.2}, {2.0, 0.5}}}};
    bad["n"] = 2;
    CHECK_THROWS_AS(parse_scenario(bad), SchemaError);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit");
    json bad = small_scenario();
    bad["extra"] = 1;
    CHECK(cli::run("partition", options(write_scenario(dir, bad), dir / "a")) == 2);
    CHECK(cli::run("partition", options(dir / "missing.json", dir / "b")) == 2);
    CHECK(cli::run("frobnicate", options(dir / "missing.json", dir / "c")) == 2);

    // two agents on top of each other: numeric failure
    json twin = small_scenario();
    twin["n"] = 3;
    twin["initial"] = {{"positions", {{0.3, 0.3}, {0.3, 0.3}, {0.7, 0.7}}}};
    CHECK(cli::run("partition", options(write_scenario(dir, twin), dir / "d")) == 3);

    // analyze away from a fixed point
    json moving = small_scenario();
    moving["k"] = 1;
    moving["n"] = 2;
    moving["initial"] = {{"positions", {{0.1, 0.1}, {0.2, 0.1}}}};
    CHECK(cli::run("analyze", options(write_scenario(dir, moving), dir / "e")) == 3);

    CHECK(cli::run("partition", options(write_scenario(dir, small_scenario()), dir / "ok")) == 0);
}

TEST_CASE("artifacts are reproducible byte for byte") {
    const fs::path dir = scratch("determinism");
    const fs::path scen = write_scenario(dir, small_scenario());
    using Cmd = cli::RunArtifacts (*)(const cli::Options&);
    for (Cmd cmd : {Cmd{cli::cmd_simulate}, Cmd{cli::cmd_lloyd}}) {
        const auto a = cmd(options(scen, dir / "a"));
        cli::Options threaded = options(scen, dir / "b");
        threaded.threads = 1;
        const auto b = cmd(threaded);
        REQUIRE(a.files == b.files);
        for (const auto& f : a.files) {
            INFO(f);
            CHECK(io::read_file(a.dir / f) == io::read_file(b.dir / f));
        }
        CHECK(fs::exists(a.dir / "timing.json"));
    }
}

TEST_CASE("final H in metadata matches the final snapshot") {
    const fs::path dir = scratch("final_h");
    const fs::path scen = write_scenario(dir, small_scenario());
    for (auto* cmd : {&cli::cmd_simulate, &cli::cmd_lloyd}) {
        const auto art = (*cmd)(options(scen, dir / "out"));
        const json meta = read_json(art.dir / "metadata.json");
        CHECK(std::abs(meta.at("final_H").get<double>() - snapshot_H(art.dir / "final.json", 2)) <= 1e-10);
        CHECK(std::abs(read_json(art.dir / "final.json").at("H").get<double>() - meta.at("final_H").get<double>()) <=
              1e-10);
    }
    const auto art = cli::cmd_partition(options(scen, dir / "p"));
    CHECK(std::abs(read_json(art.dir / "metadata.json").at("final_H").get<double>() -
                   snapshot_H(art.dir / "partition.json", 2)) <= 1e-10);
}

TEST_CASE("partition renders match the committed golden files") {
    const fs::path dir = scratch("golden");
    for (const char* name : {"partition_order1", "partition_order2"}) {
        INFO(name);
        const auto art = cli::cmd_partition(options(kScenarios / (std::string(name) + ".json"), dir / name));
        CHECK(io::read_file(art.dir / "partition.svg") == io::read_file(kGolden / (std::string(name) + ".svg")));

        // render is a pure function of the snapshot
        cli::Options r;
        r.input = art.dir / "partition.json";
        r.out = dir / (std::string(name) + "_render");
        fs::create_directories(*r.out);
        const auto rendered = cli::cmd_render(r);
        CHECK(io::read_file(rendered.dir / rendered.files.front()) == io::read_file(art.dir / "partition.svg"));
    }
}

TEST_CASE("symmetric pair splits the square and k = n gives one cell") {
    const fs::path dir = scratch("small_partitions");
    json pair = small_scenario();
    pair["n"] = 2;
    pair["k"] = 1;
    pair["initial"] = {{"positions", {{0.25, 0.5}, {0.75, 0.5}}}};
    auto art = cli::cmd_partition(options(write_scenario(dir, pair), dir / "pair"));
    json snap = read_json(art.dir / "partition.json");
    REQUIRE(snap.at("cells").size() == 2);
    for (const auto& c : snap.at("cells")) CHECK(c.at("area").get<double>() == doctest::Approx(0.5).epsilon(1e-12));

    pair["k"] = 2;
    art = cli::cmd_partition(options(write_scenario(dir, pair), dir / "whole"));
    snap = read_json(art.dir / "partition.json");
    REQUIRE(snap.at("cells").size() == 1);
    CHECK(snap.at("cells")[0].at("area").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("torus simulate ends at a partition fixed point") {
    const fs::path dir = scratch("torus");
    const auto art = cli::cmd_simulate(options(kScenarios / "torus_12_order2.json", dir));
    const json snap = read_json(art.dir / "final.json");
    std::vector<Point2> gens;
    for (const auto& g : snap.at("generators")) gens.push_back(io::point_from_json(g));
    const AgentConfiguration config(gens, Torus{});
    const auto next = lloyd_map(config, 2, DensityField::uniform());
    double residual = 0.0;
    for (std::size_t i = 0; i < gens.size(); ++i) residual = std::max(residual, norm(torus_displacement(next[i] - gens[i])));
    CHECK(residual < 1e-4);

    // trajectories stay in the fundamental square
    std::ifstream csv(art.dir / "trajectory.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,agent_id,x,y,H");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        double t, x, y, h;
        int id;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%d,%lf,%lf,%lf", &t, &id, &x, &y, &h) == 5);
        CHECK((x >= -0.5 && x < 0.5 && y >= -0.5 && y < 0.5));
        ++rows;
    }
    CHECK(rows % 12 == 0);
}

TEST_CASE("equilibrium start gives a flat curve; H curves are monotone") {
    const fs::path dir = scratch("curves");
    json eq = small_scenario();
    eq["n"] = 4;
    eq["k"] = 1;
    eq["initial"] = {{"positions", {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}}}};
    auto art = cli::cmd_simulate(options(write_scenario(dir, eq), dir / "eq"));
    std::ifstream flat(art.dir / "h_curve.csv");
    std::string line;
    std::getline(flat, line);
    while (std::getline(flat, line)) {
        const double h = std::stod(line.substr(line.find(',') + 1));
        CHECK(h == doctest::Approx(4 * (1.0 / 6.0) * (0.5 * 0.5 * 0.5 * 0.5) / 2).epsilon(1e-9));
    }

    for (auto* cmd : {&cli::cmd_simulate, &cli::cmd_lloyd}) {
        art = (*cmd)(options(write_scenario(dir, small_scenario()), dir / "mono"));
        std::ifstream curve(art.dir / "h_curve.csv");
        std::getline(curve, line);
        double prev = INFINITY;
        while (std::getline(curve, line)) {
            const double h = std::stod(line.substr(line.find(',') + 1));
            CHECK(h <= prev * (1 + 1e-10));
            prev = h;
        }
    }
}

TEST_CASE("lloyd rejects other costs; mmeans and analyze run") {
    const fs::path dir = scratch("misc");
    json s = small_scenario();
    s["cost"] = {{"kind", "sum_distances"}};
    CHECK(cli::run("lloyd", options(write_scenario(dir, s), dir / "l")) == 2);

    json m = small_scenario();
    m["n"] = 3;
    m["mmeans"] = {{"uniform", {{"count", 200}, {"box", {0, 0, 1, 1}}}}};
    auto art = cli::cmd_mmeans(options(write_scenario(dir, m), dir / "m"));
    const json meta = read_json(art.dir / "metadata.json");
    CHECK(meta.at("terminated").get<bool>());
    CHECK(meta.at("points").get<int>() == 200);

    art = cli::cmd_analyze(options(kScenarios / "rectangle_saddle.json", dir / "a"));
    CHECK(read_json(art.dir / "metadata.json").at("classification") == "saddle");
    CHECK(read_json(art.dir / "stability.json").contains("jacobian_eigenvalues"));
}
