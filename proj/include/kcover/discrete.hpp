#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kcover/cost.hpp"
#include "kcover/voronoi.hpp"

namespace kcover {

struct DiscreteScene {
    std::vector<Point2> points;
    std::vector<double> weights;

    // SchemaError for an empty scene, mismatched sizes, non-finite points or
    // non-positive weights.
    void validate() const;
    BoundingBox bounds() const;
};

struct DiscreteAssignment {
    std::vector<CellKey> owner;                     // per point: its k nearest centers
    std::vector<std::vector<std::size_t>> regions;  // per center: the points it serves
};

// k nearest centers of every point, distance ties to the smaller index.
// DegenerateCenters when m > k and two centers are within 1e-12.
DiscreteAssignment assign_points(const DiscreteScene& scene, std::span<const Point2> centers, std::size_t k);

// sum_l w_l f(distances from q_l to its owners).
double discrete_cost(const DiscreteScene& scene, std::span<const Point2> centers, const DiscreteAssignment& assignment,
                     const CostModel& model);

// New centers for a fixed assignment. sum_squares: weighted means.
// sum_distances (and any k = 1 distance cost): Weiszfeld iteration. Other
// models: block coordinate descent on each center with the others held,
// keeping centers 1e-9 diam apart.
// `start` seeds the iterative solvers. EmptyRegion when some center serves
// no point.
std::vector<Point2> update_centers(const DiscreteScene& scene, const DiscreteAssignment& assignment,
                                   const CostModel& model, std::span<const Point2> start);

struct MMeansReport {
    std::vector<std::vector<Point2>> iterates;  // centers after each cycle, [0] the start
    std::vector<double> H_values;               // cost after each cycle's assignment
    DiscreteAssignment assignment;              // final
    bool terminated = false;
    std::size_t cycles = 0;
    std::size_t restarts = 0;
};

struct MMeansOptions {
    std::size_t max_restarts = 20;
    std::size_t max_cycles = 10000;
    // Fixed starting centers; otherwise uniform in the scene's bounding box
    // from the init stream of the seed.
    std::optional<std::vector<Point2>> initial;
};

// Alternates update_centers and assign_points until the cost improves by
// less than 1e-12. A center left without points (or two centers merging when
// m > k) restarts from centers drawn from restart substream r.
// MaxRestartsExceeded past options.max_restarts.
MMeansReport mmeans_run(const DiscreteScene& scene, std::size_t m, std::size_t k, const CostModel& model,
                        std::uint64_t seed, const MMeansOptions& options = {});

struct BruteForceResult {
    DiscreteAssignment assignment;  // best owner map for the given centers
    double H = 0.0;
    // Global minimum over every owner map with the optimal centers of each;
    // only for sum_squares, where those centers are weighted means.
    std::optional<double> global_H;
    std::optional<std::vector<CellKey>> global_owner;
};

// Exhaustive oracle. TooLarge when C(m, k)^N exceeds 1e7.
BruteForceResult brute_force_discrete(const DiscreteScene& scene, std::size_t m, std::size_t k,
                                      const CostModel& model, std::span<const Point2> centers);

}  // namespace kcover
