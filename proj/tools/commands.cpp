#include "commands.hpp"

#include <chrono>
#include <cstdio>

#include <fmt/format.h>

#include "kcover/error.hpp"
#include "kcover/io.hpp"
#include "kcover/parallel.hpp"
#include "kcover/rng.hpp"
#include "kcover/scenario.hpp"

namespace kcover::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr const char* kLibraryVersion = "0.1.0";

struct Run {
    Scenario scenario;
    RunArtifacts artifacts;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& name, std::string_view content) {
        io::write_file_atomic(artifacts.dir / name, content);
        artifacts.files.push_back(name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    // metadata.json is deterministic; wall time goes to timing.json.
    void finish(const std::string& command, json extra) {
        json meta = {{"version", io::kFormatVersion},
                     {"command", command},
                     {"library_version", kLibraryVersion},
                     {"scenario", scenario.name},
                     {"seed", scenario.seed},
                     {"n", scenario.n},
                     {"k", scenario.k},
                     {"cost", cost_kind_name(scenario.cost.kind())}};
        for (auto& [key, value] : extra.items()) meta[key] = value;
        meta["files"] = artifacts.files;
        meta["scenario_source"] = scenario.source;
        write_json("metadata.json", meta);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        io::write_file_atomic(artifacts.dir / "timing.json", json{{"wall_seconds", secs}}.dump(2) + "\n");
    }
};

Run open_run(const Options& opt) {
    Run r{load_scenario(opt.scenario), {}};
    if (opt.seed) r.scenario.seed = *opt.seed;
    r.artifacts.dir = opt.out ? *opt.out : fs::path(r.scenario.output);
    fs::create_directories(r.artifacts.dir);
    return r;
}

void snapshot(Run& run, const std::string& stem, const AgentConfiguration& config) {
    const auto part = order_k_partition(config, run.scenario.k);
    json snap = io::partition_snapshot(part, config);
    snap["cost"] = cost_kind_name(run.scenario.cost.kind());
    snap["H"] = evaluate_H(part, run.scenario.cost, run.scenario.density);
    run.write_json(stem + ".json", snap);
    run.write(stem + ".svg", io::render_svg(snap));
}

std::vector<double> cycle_axis(std::size_t count) {
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i) xs[i] = static_cast<double>(i);
    return xs;
}

}  // namespace

RunArtifacts cmd_partition(const Options& opt) {
    Run run = open_run(opt);
    const auto config = initial_configuration(run.scenario);
    snapshot(run, "partition", config);
    const double h = evaluate_H(config, run.scenario.k, run.scenario.cost, run.scenario.density);
    run.finish("partition", {{"final_H", h}});
    return run.artifacts;
}

RunArtifacts cmd_simulate(const Options& opt) {
    Run run = open_run(opt);
    const Scenario& s = run.scenario;
    const auto config = initial_configuration(s);
    const auto traj = simulate(config, s.law, s.k, s.cost, s.density, s.integrator);
    run.write("trajectory.csv", io::trajectory_csv(traj));
    run.write("h_curve.csv", io::curve_csv("t", traj.times, traj.H_values));
    snapshot(run, "initial", traj.states.front());
    snapshot(run, "final", traj.states.back());
    run.finish("simulate", {{"law", law_name(s.law.kind)},
                            {"steps", traj.states.size() - 1},
                            {"final_t", traj.times.back()},
                            {"final_H", traj.H_values.back()}});
    return run.artifacts;
}

RunArtifacts cmd_lloyd(const Options& opt) {
    Run run = open_run(opt);
    const Scenario& s = run.scenario;
    if (s.cost.kind() != CostKind::sum_squares) throw SchemaError("lloyd needs the sum_squares cost");
    const auto rep = lloyd_run(initial_configuration(s), s.k, s.density, s.lloyd_tol, s.max_cycles, s.seed);
    run.write("lloyd.csv", io::lloyd_csv(rep));
    run.write("h_curve.csv", io::curve_csv("cycle", cycle_axis(rep.H_values.size()), rep.H_values));
    snapshot(run, "initial", rep.iterates.front());
    snapshot(run, "final", rep.iterates.back());
    run.finish("lloyd", {{"converged", rep.converged},
                         {"cycles", rep.cycles},
                         {"jittered", rep.jittered},
                         {"final_H", rep.H_values.back()}});
    return run.artifacts;
}

RunArtifacts cmd_mmeans(const Options& opt) {
    Run run = open_run(opt);
    const Scenario& s = run.scenario;
    if (!s.mmeans) throw SchemaError("scenario has no mmeans block");
    const auto scene = mmeans_scene(s);
    MMeansOptions mo;
    mo.max_restarts = s.mmeans->max_restarts;
    if (s.mmeans->initial_centers) {
        mo.initial = s.mmeans->initial_centers;
    } else if (s.mmeans->initial_box) {
        StreamRng rng(s.seed, Stream::init, 2);
        mo.initial.emplace();
        for (std::size_t i = 0; i < s.n; ++i) mo.initial->push_back(uniform_in(rng, *s.mmeans->initial_box));
    }
    const auto rep = mmeans_run(scene, s.n, s.k, s.cost, s.seed, mo);
    run.write_json("mmeans.json", io::mmeans_json(rep));
    run.write("mmeans.csv", io::mmeans_csv(rep));
    run.write("h_curve.csv", io::curve_csv("iteration", cycle_axis(rep.H_values.size()), rep.H_values));
    run.finish("mmeans", {{"points", scene.points.size()},
                          {"terminated", rep.terminated},
                          {"restarts", rep.restarts},
                          {"final_H", rep.H_values.back()}});
    return run.artifacts;
}

RunArtifacts cmd_analyze(const Options& opt) {
    Run run = open_run(opt);
    const Scenario& s = run.scenario;
    const auto config = initial_configuration(s);
    const auto rep = stability_analysis(config, s.k, s.density, s.fd_step);
    run.write_json("stability.json", io::stability_json(rep));
    snapshot(run, "partition", config);
    run.finish("analyze", {{"classification", stability_name(rep.classification)},
                           {"final_H", evaluate_H(config, s.k, CostModel::sum_squares(s.k), s.density)}});
    return run.artifacts;
}

RunArtifacts cmd_render(const Options& opt) {
    if (opt.input.empty()) throw SchemaError("render needs --input <snapshot.json>");
    json snap;
    try {
        snap = json::parse(io::read_file(opt.input));
    } catch (const json::exception& e) {
        throw SchemaError(opt.input.string() + ": " + e.what());
    }
    RunArtifacts art;
    art.dir = opt.out ? *opt.out : opt.input.parent_path();
    const std::string name = opt.input.stem().string() + ".svg";
    io::write_file_atomic(art.dir / name, io::render_svg(snap));
    art.files.push_back(name);
    return art;
}

int run(const std::string& command, const Options& opt) {
    try {
        set_thread_count(opt.threads);
        RunArtifacts art;
        if (command == "partition") {
            art = cmd_partition(opt);
        } else if (command == "simulate") {
            art = cmd_simulate(opt);
        } else if (command == "lloyd") {
            art = cmd_lloyd(opt);
        } else if (command == "mmeans") {
            art = cmd_mmeans(opt);
        } else if (command == "analyze") {
            art = cmd_analyze(opt);
        } else if (command == "render") {
            art = cmd_render(opt);
        } else {
            std::fprintf(stderr, "kcover: unknown command '%s'\n", command.c_str());
            return 2;
        }
        for (const auto& f : art.files) std::printf("%s\n", (art.dir / f).string().c_str());
        return 0;
    } catch (const Error& e) {
        std::fprintf(stderr, "kcover %s: %s\n", command.c_str(), e.what());
        return e.is_schema() ? 2 : 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "kcover %s: %s\n", command.c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "kcover %s: %s\n", command.c_str(), e.what());
        return 3;
    }
}

}  // namespace kcover::cli
