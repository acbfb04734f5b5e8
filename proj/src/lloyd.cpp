#include "kcover/lloyd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "kcover/dynamics.hpp"
#include "kcover/error.hpp"
#include "kcover/parallel.hpp"
#include "kcover/rng.hpp"

namespace kcover {

namespace {

constexpr double kCollisionTol = 1e-9;

Vec2 displacement(const AgentConfiguration& c, Point2 from, Point2 to) {
    return c.is_torus() ? torus_displacement(to - from) : to - from;
}

// Places the targets, wrapping or projecting, and separates collisions.
AgentConfiguration settle(const AgentConfiguration& config, std::size_t k, std::vector<Point2> targets,
                          std::uint64_t seed, std::uint64_t cycle, std::size_t* jittered) {
    for (auto& p : targets) p = project_to_region(config, p);
    if (k < targets.size()) {
        const double push = 1e-6 * config.domain().diameter();
        StreamRng rng(seed, Stream::jitter, cycle);
        for (std::size_t j = 1; j < targets.size(); ++j) {
            for (std::size_t i = 0; i < j; ++i) {
                if (norm(displacement(config, targets[i], targets[j])) >= kCollisionTol) continue;
                const double angle = 2.0 * std::numbers::pi * rng.uniform();
                targets[j] = project_to_region(config, targets[j] + push * Vec2{std::cos(angle), std::sin(angle)});
                if (jittered) ++*jittered;
                i = static_cast<std::size_t>(-1);  // recheck against everyone
            }
        }
    }
    return config.with_positions(std::move(targets));
}

double max_move(const AgentConfiguration& a, const AgentConfiguration& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, norm(displacement(a, a[i], b[i])));
    return m;
}

}  // namespace

std::vector<Point2> lloyd_map(const AgentConfiguration& config, std::size_t k, const DensityField& density) {
    const auto w = w_measures(order_k_partition(config, k), density);
    std::vector<Point2> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i].centroid;
    return out;
}

AgentConfiguration lloyd_step(const AgentConfiguration& config, std::size_t k, const DensityField& density,
                              std::uint64_t seed, std::uint64_t cycle, std::size_t* jittered) {
    return settle(config, k, lloyd_map(config, k, density), seed, cycle, jittered);
}

AgentConfiguration chebyshev_step(const AgentConfiguration& config, std::size_t k, std::uint64_t seed,
                                  std::uint64_t cycle, std::size_t* jittered) {
    const auto part = order_k_partition(config, k);
    std::vector<Point2> centers(config.size());
    for (std::size_t i = 0; i < config.size(); ++i) {
        const auto pts = w_region(part, i).vertices_in_owner_frame(config[i]);
        centers[i] = min_enclosing_circle(pts).center;
    }
    return settle(config, k, std::move(centers), seed, cycle, jittered);
}

double chebyshev_radius(const OrderKPartition& partition) {
    const auto gen = partition.generators();
    double r = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const auto pts = w_region(partition, i).vertices_in_owner_frame(gen[i]);
        r = std::max(r, min_enclosing_circle(pts).radius);
    }
    return r;
}

double chebyshev_radius(const AgentConfiguration& config, std::size_t k) {
    return chebyshev_radius(order_k_partition(config, k));
}

LloydReport lloyd_run(const AgentConfiguration& config, std::size_t k, const DensityField& density, double tol,
                      std::size_t max_cycles, std::uint64_t seed) {
    if (!(tol > 0.0)) throw SchemaError("lloyd tolerance must be positive");
    const auto model = CostModel::sum_squares(k);
    LloydReport rep;
    rep.iterates.push_back(config);
    rep.H_values.push_back(evaluate_H(config, k, model, density));
    while (rep.cycles < max_cycles) {
        const auto& cur = rep.iterates.back();
        auto next = lloyd_step(cur, k, density, seed, rep.cycles, &rep.jittered);
        const double moved = max_move(cur, next);
        rep.H_values.push_back(evaluate_H(next, k, model, density));
        rep.iterates.push_back(std::move(next));
        ++rep.cycles;
        if (moved < tol) {
            rep.converged = true;
            break;
        }
    }
    return rep;
}

ChebyshevReport chebyshev_run(const AgentConfiguration& config, std::size_t k, std::size_t cycles,
                              std::uint64_t seed) {
    ChebyshevReport rep;
    rep.iterates.push_back(config);
    rep.radii.push_back(chebyshev_radius(config, k));
    for (std::size_t c = 0; c < cycles; ++c) {
        auto next = chebyshev_step(rep.iterates.back(), k, seed, c, &rep.jittered);
        rep.radii.push_back(chebyshev_radius(next, k));
        rep.iterates.push_back(std::move(next));
    }
    return rep;
}

std::string_view stability_name(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::saddle: return "saddle";
        case Stability::marginal: return "marginal";
    }
    return "unknown";
}

StabilityReport stability_analysis(const AgentConfiguration& config, std::size_t k, const DensityField& density,
                                   double fd_step) {
    const std::size_t n = config.size();
    const std::size_t dim = 2 * n;
    const double diam = config.domain().diameter();
    const double h = fd_step > 0.0 ? fd_step : 1e-6 * diam;
    const auto model = CostModel::sum_squares(k);

    StabilityReport rep;
    const auto base = config.positions();
    const auto t0 = lloyd_map(config, k, density);
    for (std::size_t i = 0; i < n; ++i) rep.residual = std::max(rep.residual, norm(displacement(config, base[i], t0[i])));
    if (rep.residual > 1e-6 * diam) {
        throw NotAFixedPoint("largest centroid offset is " + std::to_string(rep.residual));
    }

    auto shifted = [&](std::size_t col, double s) {
        std::vector<Point2> p(base.begin(), base.end());
        if (col % 2 == 0) p[col / 2].x += s; else p[col / 2].y += s;
        return AgentConfiguration::relaxed(std::move(p), config.region());
    };

    rep.jacobian = Eigen::MatrixXd::Zero(dim, dim);
    rep.hessian = Eigen::MatrixXd::Zero(dim, dim);
    parallel_for(dim, [&](std::size_t col) {
        const auto plus = shifted(col, h);
        const auto minus = shifted(col, -h);
        const auto tp = lloyd_map(plus, k, density);
        const auto tm = lloyd_map(minus, k, density);
        const auto gp = gradient_H(plus, k, model, density).gradient;
        const auto gm = gradient_H(minus, k, model, density).gradient;
        for (std::size_t i = 0; i < n; ++i) {
            // tp and tm share the frame of base[i], so this is exact on the torus too.
            const Vec2 dt = displacement(config, tm[i], tp[i]);
            rep.jacobian(2 * i, col) = dt.x / (2.0 * h);
            rep.jacobian(2 * i + 1, col) = dt.y / (2.0 * h);
            rep.hessian(2 * i, col) = (gp[i].x - gm[i].x) / (2.0 * h);
            rep.hessian(2 * i + 1, col) = (gp[i].y - gm[i].y) / (2.0 * h);
        }
    });

    if (k == 1) {
        const auto w = w_measures(order_k_partition(config, k), density);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
        for (std::size_t i = 0; i < n; ++i) m(2 * i, 2 * i) = m(2 * i + 1, 2 * i + 1) = w[i].mass;
        rep.hessian_identity = m * (Eigen::MatrixXd::Identity(dim, dim) - rep.jacobian);
    }

    const double hmax = rep.hessian.cwiseAbs().maxCoeff();
    rep.hessian_asymmetry = hmax > 0.0 ? (rep.hessian - rep.hessian.transpose()).cwiseAbs().maxCoeff() / hmax : 0.0;

    Eigen::EigenSolver<Eigen::MatrixXd> es(rep.jacobian, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rep.jacobian_eigenvalues.push_back(es.eigenvalues()[i]);
    std::sort(rep.jacobian_eigenvalues.begin(), rep.jacobian_eigenvalues.end(),
              [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    const Eigen::MatrixXd sym = 0.5 * (rep.hessian + rep.hessian.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hs(sym, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < hs.eigenvalues().size(); ++i) rep.hessian_eigenvalues.push_back(hs.eigenvalues()[i]);

    const double rho = rep.jacobian_eigenvalues.empty() ? 0.0 : std::abs(rep.jacobian_eigenvalues.front());
    if (rho < 1.0 - 1e-6) {
        rep.classification = Stability::stable;
    } else if (rho > 1.0 + 1e-6) {
        rep.classification = Stability::saddle;
    } else {
        rep.classification = Stability::marginal;
    }
    return rep;
}

}  // namespace kcover
