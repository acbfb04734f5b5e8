#include "kcover/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kcover/error.hpp"

namespace kcover {

ControlLaw ControlLaw::centroid_tracking(double gain) {
    if (!(gain > 0.0) || !std::isfinite(gain)) throw SchemaError("control gain must be positive");
    return {LawKind::centroid_tracking, gain};
}

ControlLaw ControlLaw::chebyshev_tracking(double gain) {
    if (!(gain > 0.0) || !std::isfinite(gain)) throw SchemaError("control gain must be positive");
    return {LawKind::chebyshev_tracking, gain};
}

std::string_view law_name(LawKind kind) {
    switch (kind) {
        case LawKind::gradient_descent: return "gradient_descent";
        case LawKind::centroid_tracking: return "centroid_tracking";
        case LawKind::chebyshev_tracking: return "chebyshev_tracking";
    }
    return "unknown";
}

std::vector<Vec2> velocity(const OrderKPartition& partition, const ControlLaw& law, const CostModel& model,
                           const DensityField& density) {
    const std::size_t n = partition.agent_count();
    const auto gen = partition.generators();
    std::vector<Vec2> v(n);
    switch (law.kind) {
        case LawKind::gradient_descent: {
            const auto g = gradient_H(partition, model, density);
            for (std::size_t i = 0; i < n; ++i) v[i] = -1.0 * g.gradient[i];
            break;
        }
        case LawKind::centroid_tracking: {
            const auto w = w_measures(partition, density);
            for (std::size_t i = 0; i < n; ++i) v[i] = law.gain * (w[i].centroid - gen[i]);
            break;
        }
        case LawKind::chebyshev_tracking: {
            for (std::size_t i = 0; i < n; ++i) {
                const auto pts = w_region(partition, i).vertices_in_owner_frame(gen[i]);
                v[i] = law.gain * (min_enclosing_circle(pts).center - gen[i]);
            }
            break;
        }
    }
    return v;
}

std::vector<Vec2> velocity(const AgentConfiguration& config, const ControlLaw& law, std::size_t k,
                           const CostModel& model, const DensityField& density) {
    return velocity(order_k_partition(config, k), law, model, density);
}

Point2 project_to_region(const AgentConfiguration& config, Point2 p) {
    if (config.is_torus()) return wrap_torus(p);
    return config.domain().closest_point(p);
}

namespace {

double max_speed(const std::vector<Vec2>& v) {
    double m = 0.0;
    for (const Vec2& x : v) m = std::max(m, norm(x));
    return m;
}

std::vector<Point2> advance(const AgentConfiguration& base, std::span<const Point2> p, const std::vector<Vec2>& v,
                            double h) {
    std::vector<Point2> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = project_to_region(base, p[i] + h * v[i]);
    return out;
}

}  // namespace

Trajectory simulate(const AgentConfiguration& config0, const ControlLaw& law, std::size_t k, const CostModel& model,
                    const DensityField& density, const SimulationOptions& options) {
    if (!(options.step > 0.0) || !std::isfinite(options.step)) throw SchemaError("integration step must be positive");
    if (!(options.t_end >= 0.0)) throw SchemaError("t_end must be non-negative");
    if (!(options.stop_tol >= 0.0)) throw SchemaError("stop_tol must be non-negative");
    if (law.kind != LawKind::gradient_descent && !(law.gain > 0.0)) throw SchemaError("control gain must be positive");

    const bool descends = law.kind == LawKind::gradient_descent ||
                          (law.kind == LawKind::centroid_tracking && model.kind() == CostKind::sum_squares);
    auto rhs = [&](const AgentConfiguration& c) { return velocity(order_k_partition(c, k), law, model, density); };

    Trajectory traj{{}, {}, {}, law};
    AgentConfiguration cur = config0;
    auto part = order_k_partition(cur, k);
    double h_cur = evaluate_H(part, model, density);
    std::vector<Vec2> v = velocity(part, law, model, density);
    traj.times.push_back(0.0);
    traj.states.push_back(cur);
    traj.H_values.push_back(h_cur);

    double t = 0.0;
    const double h = options.step;
    while (t < options.t_end - 1e-12 * h) {
        const double dt = std::min(h, options.t_end - t);
        std::vector<Point2> next;
        const auto p = cur.positions();
        if (options.integrator == Integrator::euler) {
            next = advance(cur, p, v, dt);
        } else {
            const auto k1 = v;
            const auto k2 = rhs(cur.with_positions(advance(cur, p, k1, 0.5 * dt)));
            const auto k3 = rhs(cur.with_positions(advance(cur, p, k2, 0.5 * dt)));
            const auto k4 = rhs(cur.with_positions(advance(cur, p, k3, dt)));
            std::vector<Vec2> slope(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) slope[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
            next = advance(cur, p, slope, dt);
        }
        AgentConfiguration moved = cur.with_positions(std::move(next));
        auto moved_part = order_k_partition(moved, k);
        const double h_new = evaluate_H(moved_part, model, density);
        if (descends && h_new > h_cur + 1e-6 * std::abs(h_cur)) {
            throw StepRejected("H rose from " + std::to_string(h_cur) + " to " + std::to_string(h_new) +
                               " at t=" + std::to_string(t) + "; reduce the step");
        }
        t += dt;
        cur = std::move(moved);
        h_cur = h_new;
        v = velocity(moved_part, law, model, density);
        traj.times.push_back(t);
        traj.states.push_back(cur);
        traj.H_values.push_back(h_cur);
        if (max_speed(v) < options.stop_tol) break;
    }
    return traj;
}

double equilibrium_residual(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                            const DensityField& density) {
    const auto part = order_k_partition(config, k);
    double r = 0.0;
    if (model.kind() == CostKind::sum_squares) {
        const auto w = w_measures(part, density);
        for (std::size_t i = 0; i < config.size(); ++i) r = std::max(r, distance(w[i].centroid, config[i]));
        return r;
    }
    const auto g = gradient_H(part, model, density);
    for (const Vec2& x : g.gradient) r = std::max(r, norm(x));
    return r;
}

}  // namespace kcover
