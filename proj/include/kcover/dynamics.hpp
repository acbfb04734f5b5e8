#pragma once

#include <cstddef>
#include <vector>

#include "kcover/cost.hpp"
#include "kcover/density.hpp"
#include "kcover/voronoi.hpp"

namespace kcover {

enum class LawKind { gradient_descent, centroid_tracking, chebyshev_tracking };

struct ControlLaw {
    LawKind kind = LawKind::gradient_descent;
    double gain = 1.0;

    static ControlLaw gradient_descent() { return {LawKind::gradient_descent, 1.0}; }
    // SchemaError unless gain > 0.
    static ControlLaw centroid_tracking(double gain);
    static ControlLaw chebyshev_tracking(double gain);
};

std::string_view law_name(LawKind kind);

enum class Integrator { euler, rk4 };

struct SimulationOptions {
    Integrator integrator = Integrator::rk4;
    double step = 0.01;
    double t_end = 10.0;
    double stop_tol = 1e-6;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<AgentConfiguration> states;
    std::vector<double> H_values;
    ControlLaw law;
};

// Per-agent velocity under `law`. `model` is used only by gradient descent.
std::vector<Vec2> velocity(const AgentConfiguration& config, const ControlLaw& law, std::size_t k,
                           const CostModel& model, const DensityField& density);
std::vector<Vec2> velocity(const OrderKPartition& partition, const ControlLaw& law, const CostModel& model,
                           const DensityField& density);

// Nearest point of the region (planar) or the wrapped point (torus).
Point2 project_to_region(const AgentConfiguration& config, Point2 p);

// Fixed-step integration with the partition rebuilt at every stage. States
// leaving the region are projected back. Stops at t_end or once the largest
// agent speed drops below stop_tol (the state reaching it is kept). Throws
// StepRejected when H rises by more than 1e-6 |H| in one step under a law
// that descends H (gradient descent, or centroid tracking with sum_squares).
Trajectory simulate(const AgentConfiguration& config0, const ControlLaw& law, std::size_t k, const CostModel& model,
                    const DensityField& density, const SimulationOptions& options);

// max_i |C_{W_i} - p_i| for sum_squares, max_i |dH/dp_i| otherwise.
double equilibrium_residual(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                            const DensityField& density);

}  // namespace kcover
