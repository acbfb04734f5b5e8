#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kcover/discrete.hpp"
#include "kcover/dynamics.hpp"
#include "kcover/lloyd.hpp"
#include "kcover/voronoi.hpp"

namespace kcover::io {

using nlohmann::json;

constexpr int kFormatVersion = 1;

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Shortest text that reads back to the same double (17 significant digits).
std::string number(double v);

json point_json(Point2 p);
Point2 point_from_json(const json& j);
json region_json(const Region& region);
// Accepts "torus", {"polygon": [[x, y], ...]}, {"rectangle": [x0, y0, x1, y1]}
// or {"regular": {"center", "radius", "sides", "phase"}}. SchemaError otherwise.
Region region_from_json(const json& j);

// Generators, region, order and every cell with its pieces.
json partition_snapshot(const OrderKPartition& partition, const AgentConfiguration& config);
// SVG drawing of a snapshot: region outline, cells shaded by key, generators.
std::string render_svg(const json& snapshot);

// t, agent_id, x, y, H
std::string trajectory_csv(const Trajectory& traj);
// cycle, agent_id, x, y, H
std::string lloyd_csv(const LloydReport& rep);
// iteration, center_id, x, y, H
std::string mmeans_csv(const MMeansReport& rep);
// One row per sample: <label>, H
std::string curve_csv(std::string_view label, const std::vector<double>& xs, const std::vector<double>& hs);

json stability_json(const StabilityReport& rep);
json mmeans_json(const MMeansReport& rep);

// Columns x, y, weight with a header row. SchemaError on malformed rows.
DiscreteScene read_scene_csv(const std::filesystem::path& path);

}  // namespace kcover::io
