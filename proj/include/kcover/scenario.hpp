#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kcover/cost.hpp"
#include "kcover/discrete.hpp"
#include "kcover/dynamics.hpp"
#include "kcover/voronoi.hpp"

namespace kcover {

// Scenario file, version 1. Every object rejects unknown fields.
//
// {
//   "version": 1, "name": "...",
//   "region": "torus" | {"polygon": [[x, y], ...]} | {"rectangle": [...]} | {"regular": {...}},
//   "n": 50, "k": 2, "seed": 42,
//   "cost": {"kind": "sum_squares", "p": 3, "a": 0.5, "gain": 1, "threshold": 1, "noise": 1},
//   "density": {"kind": "uniform", "value": 1} | {"kind": "gaussian", "mean": [x, y],
//               "covariance": [sxx, sxy, syy], "amplitude": 1} | {"kind": "polynomial", "terms": [[px, py, c], ...]},
//   "initial": {"positions": [[x, y], ...]} | {"box": [x0, y0, x1, y1]},
//   "law": {"kind": "gradient_descent" | "centroid_tracking" | "chebyshev_tracking", "gain": 1},
//   "integrator": {"method": "rk4" | "euler", "h": 0.01, "t_end": 10, "stop_tol": 1e-6},
//   "iteration": {"tol": 1e-8, "max_cycles": 500, "fd_step": 0},
//   "mmeans": {"scene": "points.csv" | "uniform": {"count": 1000, "box": [...]},
//              "initial_box": [...], "initial_centers": [[x, y], ...], "max_restarts": 20},
//   "output": "out/dir"
// }
//
// Sampled initial positions are uniform over region and box from the init
// stream of the seed. For mmeans, n is the number of centers.
struct Scenario {
    std::string name = "scenario";
    std::optional<Region> region;
    std::size_t n = 0;
    std::size_t k = 1;
    std::uint64_t seed = 0;
    CostModel cost = CostModel::sum_squares(1);
    DensityField density;
    std::optional<std::vector<Point2>> positions;
    std::optional<BoundingBox> initial_box;
    ControlLaw law;
    SimulationOptions integrator;
    double lloyd_tol = 1e-8;
    std::size_t max_cycles = 500;
    double fd_step = 0.0;

    struct MMeans {
        std::optional<std::filesystem::path> scene_file;
        std::size_t uniform_count = 0;
        BoundingBox uniform_box{{0.0, 0.0}, {1.0, 1.0}};
        std::optional<BoundingBox> initial_box;
        std::optional<std::vector<Point2>> initial_centers;
        std::size_t max_restarts = 20;
    };
    std::optional<MMeans> mmeans;
    std::string output = "out";

    nlohmann::json source;  // the parsed document, echoed into run metadata
};

// SchemaError on any violation. Relative paths resolve against base_dir.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

// Explicit positions, or n samples kept 1e-6 diam apart.
AgentConfiguration initial_configuration(const Scenario& s);

// Scene from the csv file, or uniform points from init substream 1.
DiscreteScene mmeans_scene(const Scenario& s);

}  // namespace kcover
