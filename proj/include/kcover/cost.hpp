#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcover/density.hpp"
#include "kcover/voronoi.hpp"

namespace kcover {

enum class CostKind { sum_distances, sum_squares, pnorm, max_distance, collision_averse, bistatic_radar };

std::string_view cost_kind_name(CostKind kind);

struct RadarParams {
    double gain = 1.0;       // K
    double threshold = 1.0;  // v_t
    double noise = 1.0;      // delta
};

// Coverage cost f(d_1, ..., d_k) of serving a point from k agents.
//   sum_distances     sum d_m
//   sum_squares       1/2 sum d_m^2
//   pnorm             (sum d_m^p)^(1/p)
//   max_distance      max d_m
//   collision_averse  1/2 (d_1^2 + d_2^2 - a |d_1^2 - d_2^2|), k = 2
//   bistatic_radar    -P(d_1, d_2), k = 2
class CostModel {
public:
    static CostModel sum_distances(std::size_t k);
    static CostModel sum_squares(std::size_t k);
    static CostModel pnorm(std::size_t k, double p);
    static CostModel max_distance(std::size_t k);
    static CostModel collision_averse(double a);
    static CostModel bistatic_radar(const RadarParams& params);

    CostKind kind() const { return kind_; }
    std::size_t arity() const { return arity_; }
    double p() const { return p_; }
    double a() const { return a_; }
    const RadarParams& radar() const { return radar_; }

    // No argument checks beyond arity; see evaluate_f for the validated entry.
    double evaluate(std::span<const double> d) const;
    // df/dd_m. For max_distance and collision_averse ties go to the branch
    // where the lowest-index maximal distance is the farthest.
    double partial(std::size_t m, std::span<const double> d) const;

    // Piecewise quadratic once each cell is split by farthest member.
    bool is_piecewise_quadratic() const {
        return kind_ == CostKind::sum_squares || kind_ == CostKind::collision_averse;
    }
    bool needs_farthest_split() const {
        return kind_ == CostKind::max_distance || kind_ == CostKind::collision_averse;
    }

private:
    CostModel(CostKind kind, std::size_t arity) : kind_(kind), arity_(arity) {}

    CostKind kind_;
    std::size_t arity_;
    double p_ = 2.0;
    double a_ = 1.0;
    RadarParams radar_;
};

// Validated evaluation: ArityMismatch, std::invalid_argument for negative or
// non-finite distances, RadarSingularity for a radar distance below 1e-9.
double evaluate_f(const CostModel& model, std::span<const double> distances);

using GradientVector = std::vector<Vec2>;

struct GradientResult {
    GradientVector gradient;
    // Set when a cell's farthest-member split was degenerate (coincident
    // members), so the result is a subgradient selection.
    bool subgradient = false;
};

// H = sum over cells of the integral of f(distances to the key's agents) phi.
double evaluate_H(const OrderKPartition& partition, const CostModel& model, const DensityField& density);
double evaluate_H(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                  const DensityField& density);

// dH/dp_i as the sum of interior integrals of df/dd_i (p_i - q)/|p_i - q| phi.
GradientResult gradient_H(const OrderKPartition& partition, const CostModel& model, const DensityField& density);
GradientResult gradient_H(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                          const DensityField& density);

// Central differences of evaluate_H. std::invalid_argument for step <= 0.
GradientVector gradient_H_fd(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                             const DensityField& density, double step);

// sum_l w_l min over k-subsets of f(distances from q_l). The k nearest
// centers attain the minimum for every model here (f is symmetric and
// non-decreasing in each argument).
double evaluate_H_discrete(std::span<const Point2> points, std::span<const double> weights,
                           std::span<const Point2> centers, std::size_t k, const CostModel& model);

struct WMeasures {
    double mass = 0.0;
    // Centroid of W_i in the owner's frame (torus pieces shifted so the
    // owner's image sits on its generator); may leave the fundamental square.
    Point2 centroid;
};

// Mass and centroid of every W_i. Throws ZeroMass for a W_i with mass below
// 1e-14.
std::vector<WMeasures> w_measures(const OrderKPartition& partition, const DensityField& density);

// Marcum Q_1(a, b) by adaptive quadrature of the scaled Rician integrand.
double marcum_q1(double a, double b);
// d/da Q_1(a, b) = b exp(-(a^2 + b^2)/2) I_1(ab)
double marcum_q1_da(double a, double b);

// Single-pulse detection probability for bistatic ranges R1, R2:
// Q_1(sqrt(K)/(noise R1 R2), sqrt(v_t)). RadarSingularity when R1 or R2 < 1e-9.
double radar_detection_probability(double r1, double r2, const RadarParams& params);

// Threshold giving false-alarm probability pfa with noise alone: -2 ln pfa.
double radar_threshold_for_false_alarm(double pfa);

}  // namespace kcover
