#include <doctest.h>

#include <cmath>
#include <random>

#include "kcover/dynamics.hpp"
#include "kcover/error.hpp"
#include "kcover/lloyd.hpp"
#include "test_support.hpp"

using namespace kcover;
using kcover::testing::random_points;
using kcover::testing::unit_square;

namespace {

const auto kUniform = DensityField::uniform();

AgentConfiguration strip_split(double length) {
    return AgentConfiguration({{length / 2, 0.25}, {length / 2, 0.75}}, ConvexPolygon::rectangle(0, 0, length, 1));
}

double spectral_radius(double length) {
    return std::abs(stability_analysis(strip_split(length), 1, kUniform).jacobian_eigenvalues.front());
}

}  // namespace

TEST_CASE("lloyd step examples") {
    AgentConfiguration grid({{0.25, 0.25}, {0.75, 0.25}, {0.75, 0.75}, {0.25, 0.75}}, unit_square());
    const auto same = lloyd_step(grid, 1, kUniform);
    for (std::size_t i = 0; i < 4; ++i) CHECK(distance(same[i], grid[i]) < 1e-15);

    // n = k = 2: one cell, both agents to its centroid with no jitter.
    AgentConfiguration pair({{0.1, 0.2}, {0.7, 0.9}}, unit_square());
    std::size_t jittered = 0;
    const auto both = lloyd_step(pair, 2, kUniform, 0, 0, &jittered);
    CHECK(distance(both[0], {0.5, 0.5}) < 1e-14);
    CHECK(distance(both[1], {0.5, 0.5}) < 1e-14);
    CHECK(jittered == 0);

    // With two corners occupied the central pair is never farthest for
    // k = 3, so both W are the whole square and their centroids collide.
    AgentConfiguration four({{0.5, 0.5}, {0.52, 0.5}, {0.02, 0.02}, {0.98, 0.98}}, unit_square());
    const auto map = lloyd_map(four, 3, kUniform);
    CHECK(distance(map[0], map[1]) < 1e-12);
    const auto step = lloyd_step(four, 3, kUniform, 9, 0, &jittered);
    CHECK(jittered == 1);
    CHECK(step.separation() >= AgentConfiguration::kMinSeparation);
    CHECK(distance(step[1], map[1]) == doctest::Approx(1e-6 * std::sqrt(2.0)));
    CHECK(distance(step[0], map[0]) < 1e-15);
}

TEST_CASE("a lloyd step never raises H") {
    std::mt19937_64 rng(101);
    const ConvexPolygon regions[] = {unit_square(), ConvexPolygon::regular({0, 0}, 1.0, 7, 0.3)};
    int runs = 0;
    for (const auto& region : regions) {
        for (std::size_t k : {1u, 2u, 3u}) {
            for (int rep = 0; rep < 9; ++rep) {
                const std::size_t n = 4 + static_cast<std::size_t>(rep);
                AgentConfiguration c(random_points(region, n, rng, 0.02), region);
                const auto model = CostModel::sum_squares(k);
                const double before = evaluate_H(c, k, model, kUniform);
                const double after = evaluate_H(lloyd_step(c, k, kUniform, 1), k, model, kUniform);
                CHECK(after <= before * (1.0 + 1e-10));
                ++runs;
            }
        }
    }
    CHECK(runs >= 50);
}

TEST_CASE("lloyd run converges to a centroidal configuration") {
    AgentConfiguration grid({{0.25, 0.25}, {0.75, 0.25}, {0.75, 0.75}, {0.25, 0.75}}, unit_square());
    const auto still = lloyd_run(grid, 1, kUniform, 1e-8, 10);
    CHECK(still.converged);
    CHECK(still.cycles == 1);

    std::mt19937_64 rng(5);
    AgentConfiguration c(random_points(unit_square(), 10, rng, 0.05), unit_square());
    const auto rep = lloyd_run(c, 2, kUniform, 1e-8, 500);
    CHECK(rep.converged);
    for (std::size_t j = 1; j < rep.H_values.size(); ++j) CHECK(rep.H_values[j] <= rep.H_values[j - 1] * (1 + 1e-12));
    CHECK(equilibrium_residual(rep.iterates.back(), 2, CostModel::sum_squares(2), kUniform) < 1e-7);

    const auto capped = lloyd_run(c, 2, kUniform, 1e-8, 3);
    CHECK_FALSE(capped.converged);
    CHECK(capped.iterates.size() == 4);
    CHECK_THROWS_AS(lloyd_run(c, 2, kUniform, 0.0, 3), SchemaError);
}

TEST_CASE("chebyshev step and radius") {
    AgentConfiguration one({{0.1, 0.8}}, unit_square());
    const auto moved = chebyshev_step(one, 1);
    CHECK(distance(moved[0], {0.5, 0.5}) < 1e-12);
    CHECK(chebyshev_radius(moved, 1) == doctest::Approx(std::sqrt(2.0) / 2));

    // Symmetric halves of a 2 x 1 rectangle: each moves to its half's center.
    AgentConfiguration halves({{0.3, 0.4}, {1.6, 0.7}}, ConvexPolygon::rectangle(0, 0, 2, 1));
    const auto h = chebyshev_step(AgentConfiguration({{0.5, 0.5}, {1.5, 0.5}}, ConvexPolygon::rectangle(0, 0, 2, 1)), 1);
    CHECK(distance(h[0], {0.5, 0.5}) < 1e-12);
    CHECK(distance(h[1], {1.5, 0.5}) < 1e-12);
    CHECK(chebyshev_radius(halves, 1) >= chebyshev_radius(h, 1) - 1e-12);

    std::mt19937_64 rng(3);
    AgentConfiguration c(random_points(unit_square(), 6, rng, 0.05), unit_square());
    const auto rep = chebyshev_run(c, 2, 50, 3);
    for (std::size_t j = 1; j < rep.radii.size(); ++j) CHECK(rep.radii[j] <= rep.radii[j - 1] + 1e-12);
}

TEST_CASE("strip-split rectangle changes stability at sqrt(3/2)") {
    const auto wide = stability_analysis(strip_split(2.0), 1, kUniform);
    CHECK(wide.classification == Stability::saddle);
    CHECK(wide.hessian_eigenvalues.front() < 0.0);
    const auto narrow = stability_analysis(strip_split(1.1), 1, kUniform);
    CHECK(narrow.classification == Stability::stable);
    CHECK(narrow.hessian_eigenvalues.front() > 0.0);

    double lo = 1.1, hi = 2.0;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (spectral_radius(mid) < 1.0 ? lo : hi) = mid;
    }
    CHECK(std::abs(0.5 * (lo + hi) - std::sqrt(1.5)) < 0.01);
}

TEST_CASE("hessian identity at an order-1 fixed point") {
    AgentConfiguration grid({{0.25, 0.25}, {0.75, 0.25}, {0.75, 0.75}, {0.25, 0.75}}, unit_square());
    const auto rep = stability_analysis(grid, 1, kUniform);
    CHECK(rep.classification == Stability::stable);
    REQUIRE(rep.hessian_identity.has_value());
    const double scale = rep.hessian.cwiseAbs().maxCoeff();
    CHECK((rep.hessian - *rep.hessian_identity).cwiseAbs().maxCoeff() <= 1e-3 * scale);
    CHECK(rep.hessian_asymmetry < 1e-6);

    std::mt19937_64 rng(8);
    AgentConfiguration c(random_points(unit_square(), 6, rng, 0.05), unit_square());
    const auto fixed = lloyd_run(c, 1, kUniform, 1e-12, 2000).iterates.back();
    const auto r2 = stability_analysis(fixed, 1, kUniform);
    CHECK((r2.hessian - *r2.hessian_identity).cwiseAbs().maxCoeff() <= 1e-3 * r2.hessian.cwiseAbs().maxCoeff());

    CHECK_THROWS_AS(stability_analysis(c, 1, kUniform), NotAFixedPoint);
    // k = 2 reports no identity.
    CHECK_FALSE(stability_analysis(AgentConfiguration({{0.5, 0.5}, {0.5, 0.5}}, unit_square()), 2, kUniform)
                    .hessian_identity.has_value());
}

TEST_CASE("torus lloyd keeps agents wrapped") {
    std::mt19937_64 rng(17);
    AgentConfiguration c(random_points(Torus::fundamental_square(), 5, rng, 0.05), Torus{});
    const auto rep = lloyd_run(c, 2, kUniform, 1e-9, 300);
    for (std::size_t j = 1; j < rep.H_values.size(); ++j) CHECK(rep.H_values[j] <= rep.H_values[j - 1] * (1 + 1e-10));
    for (const Point2& p : rep.iterates.back().positions()) {
        CHECK(p.x >= -0.5);
        CHECK(p.x < 0.5);
    }
}
