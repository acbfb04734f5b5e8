#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kcover/cost.hpp"
#include "kcover/density.hpp"
#include "kcover/voronoi.hpp"

namespace kcover {

// Centroids of every W_i (the Lloyd map T), in each owner's frame. On the
// torus the result is not wrapped, so T(p) - p is the true displacement.
std::vector<Point2> lloyd_map(const AgentConfiguration& config, std::size_t k, const DensityField& density);

// One higher-order Lloyd cycle: p_i <- centroid of W_i. When k < n and two
// centroids land within 1e-9 of each other the later agent is pushed by
// 1e-6 diam(Q) in a direction drawn from the jitter stream of `seed`
// (substream `cycle`); `jittered` counts those pushes.
AgentConfiguration lloyd_step(const AgentConfiguration& config, std::size_t k, const DensityField& density,
                              std::uint64_t seed = 0, std::uint64_t cycle = 0, std::size_t* jittered = nullptr);

// One Chebyshev cycle: p_i <- center of the smallest circle around W_i.
AgentConfiguration chebyshev_step(const AgentConfiguration& config, std::size_t k, std::uint64_t seed = 0,
                                  std::uint64_t cycle = 0, std::size_t* jittered = nullptr);

// max_i radius of the smallest circle around W_i, i.e. the sensing radius
// the Chebyshev iteration reduces.
double chebyshev_radius(const OrderKPartition& partition);
double chebyshev_radius(const AgentConfiguration& config, std::size_t k);

struct LloydReport {
    std::vector<AgentConfiguration> iterates;  // iterates[0] is the start
    std::vector<double> H_values;              // sum_squares H of each iterate
    bool converged = false;
    std::size_t cycles = 0;
    std::size_t jittered = 0;
};

// Iterates lloyd_step until the largest displacement is below tol or
// max_cycles have run (converged stays false then). SchemaError for tol <= 0.
LloydReport lloyd_run(const AgentConfiguration& config, std::size_t k, const DensityField& density, double tol,
                      std::size_t max_cycles, std::uint64_t seed = 0);

struct ChebyshevReport {
    std::vector<AgentConfiguration> iterates;
    std::vector<double> radii;  // chebyshev_radius of each iterate
    std::size_t jittered = 0;
};

ChebyshevReport chebyshev_run(const AgentConfiguration& config, std::size_t k, std::size_t cycles,
                              std::uint64_t seed = 0);

enum class Stability { stable, saddle, marginal };

std::string_view stability_name(Stability s);

struct StabilityReport {
    Eigen::MatrixXd jacobian;  // dT/dp, coordinates ordered x_0, y_0, x_1, ...
    Eigen::MatrixXd hessian;   // central differences of gradient_H (sum_squares)
    // M [I - dT/dp] with M the W masses; filled for k = 1 only. With the
    // 1/2 in sum_squares this is the Hessian of H itself.
    std::optional<Eigen::MatrixXd> hessian_identity;
    std::vector<std::complex<double>> jacobian_eigenvalues;  // by decreasing modulus
    std::vector<double> hessian_eigenvalues;                 // of the symmetric part, ascending
    double hessian_asymmetry = 0.0;                          // max |H - H^T| / max |H|
    double residual = 0.0;                                   // max_i |T(p)_i - p_i|
    Stability classification = Stability::marginal;
};

// Linearization of the Lloyd map at a fixed point. fd_step <= 0 selects
// 1e-6 diam(Q). Throws NotAFixedPoint when the residual exceeds 1e-6 diam(Q).
StabilityReport stability_analysis(const AgentConfiguration& config, std::size_t k, const DensityField& density,
                                   double fd_step = 0.0);

}  // namespace kcover
