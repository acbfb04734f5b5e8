#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "kcover/cost.hpp"
#include "kcover/error.hpp"
#include "test_support.hpp"

using namespace kcover;
using kcover::testing::random_points;
using kcover::testing::unit_square;

namespace {

std::vector<CostModel> differentiable_models(std::size_t k) {
    std::vector<CostModel> out{CostModel::sum_distances(k), CostModel::sum_squares(k), CostModel::pnorm(k, 3.0),
                               CostModel::max_distance(k)};
    if (k == 2) {
        out.push_back(CostModel::collision_averse(0.5));
        out.push_back(CostModel::collision_averse(1.0));
    }
    return out;
}

// Minimum of f over all k-subsets of the generators, by enumeration.
double min_over_subsets(const CostModel& model, std::span<const Point2> g, Point2 q, std::size_t k) {
    const std::size_t n = g.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> c(k);
    std::iota(c.begin(), c.end(), 0);
    while (true) {
        std::vector<double> d;
        for (std::size_t m : c) d.push_back(distance(q, g[m]));
        best = std::min(best, model.evaluate(d));
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
    }
    return best;
}

double max_abs(const GradientVector& g) {
    double m = 0.0;
    for (const Vec2& v : g) m = std::max({m, std::abs(v.x), std::abs(v.y)});
    return m;
}

double max_diff(const GradientVector& a, const GradientVector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max({m, std::abs(a[i].x - b[i].x), std::abs(a[i].y - b[i].y)});
    return m;
}

}  // namespace

TEST_CASE("evaluate_f examples") {
    const double a[] = {1.0, 2.0};
    CHECK(evaluate_f(CostModel::sum_squares(2), a) == 2.5);
    const double b[] = {3.0, 1.0};
    CHECK(evaluate_f(CostModel::max_distance(2), b) == 3.0);
    CHECK(evaluate_f(CostModel::sum_distances(2), b) == 4.0);
    // With the 1/2 convention a = 1 reduces to min(d1^2, d2^2).
    const double c[] = {0.7, 0.7};
    CHECK(evaluate_f(CostModel::collision_averse(1.0), c) == doctest::Approx(0.49).epsilon(1e-15));
    const double e[] = {0.3, 0.8};
    CHECK(evaluate_f(CostModel::collision_averse(1.0), e) == doctest::Approx(0.09).epsilon(1e-15));
    const double p[] = {3.0, 4.0};
    CHECK(evaluate_f(CostModel::pnorm(2, 2.0), p) == doctest::Approx(5.0).epsilon(1e-15));

    const double three[] = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(evaluate_f(CostModel::sum_squares(2), three), ArityMismatch);
    const double neg[] = {-1.0, 2.0};
    CHECK_THROWS_AS(evaluate_f(CostModel::sum_squares(2), neg), std::invalid_argument);
    const double tiny[] = {1e-10, 1.0};
    CHECK_THROWS_AS(evaluate_f(CostModel::bistatic_radar({1.0, 10.0, 1.0}), tiny), RadarSingularity);
    CHECK_THROWS_AS(CostModel::collision_averse(0.0), SchemaError);
    CHECK_THROWS_AS(CostModel::collision_averse(1.5), SchemaError);
    CHECK_THROWS_AS(CostModel::pnorm(2, 1.0), SchemaError);
}

TEST_CASE("cost models are symmetric and non-decreasing") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (std::size_t k : {1u, 2u, 3u}) {
        auto models = differentiable_models(k);
        if (k == 2) models.push_back(CostModel::bistatic_radar({0.5, 6.0, 0.2}));
        for (const CostModel& model : models) {
            for (int s = 0; s < 200; ++s) {
                std::vector<double> d(k);
                for (auto& x : d) x = u(rng);
                const double f = model.evaluate(d);
                std::vector<double> perm = d;
                std::reverse(perm.begin(), perm.end());
                CHECK(model.evaluate(perm) == doctest::Approx(f).epsilon(1e-14));
                if (k == 3) {
                    std::rotate(perm.begin(), perm.begin() + 1, perm.end());
                    CHECK(model.evaluate(perm) == doctest::Approx(f).epsilon(1e-14));
                }
                for (std::size_t m = 0; m < k; ++m) {
                    CHECK(model.partial(m, d) >= 0.0);
                    std::vector<double> up = d;
                    up[m] += 0.05;
                    CHECK(model.evaluate(up) >= f - 1e-15);
                    // Partial derivative against a central difference.
                    const double h = 1e-6;
                    std::vector<double> lo = d, hi = d;
                    lo[m] -= h;
                    hi[m] += h;
                    const double fd = (model.evaluate(hi) - model.evaluate(lo)) / (2 * h);
                    // Kinks (max, collision_averse) only at ties; skip samples near one.
                    const bool near_tie = k > 1 && std::abs(d[0] - d[1]) < 1e-3;
                    if (!near_tie) CHECK(std::abs(model.partial(m, d) - fd) <= 1e-5 * std::abs(fd) + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("H examples") {
    const auto phi = DensityField::uniform();
    // Coincident generators with k = n: one cell, each agent contributes 1/2 J.
    AgentConfiguration same({{0.5, 0.5}, {0.5, 0.5}}, unit_square());
    CHECK(evaluate_H(same, 2, CostModel::sum_squares(2), phi) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

    AgentConfiguration pair({{0.25, 0.5}, {0.75, 0.5}}, unit_square());
    // Half-square [0, 0.5] x [0, 1] about its center: 1/2 * area * (w^2 + h^2) / 12.
    const double one_cell = 0.5 * 0.5 * (0.25 + 1.0) / 12.0;
    CHECK(evaluate_H(pair, 1, CostModel::sum_squares(1), phi) == doctest::Approx(2 * one_cell).epsilon(1e-14));

    // Distance integral about the square center: (sqrt 2 + ln(1 + sqrt 2)) / 6.
    AgentConfiguration center({{0.5, 0.5}}, unit_square());
    CHECK(evaluate_H(center, 1, CostModel::sum_distances(1), phi) ==
          doctest::Approx((std::sqrt(2.0) + std::log(1.0 + std::sqrt(2.0))) / 6.0).epsilon(1e-10));
}

TEST_CASE("owning subset minimizes f (cell assignment)") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k : {1u, 2u, 3u}) {
        AgentConfiguration c(random_points(unit_square(), 7, rng), unit_square());
        const auto part = order_k_partition(c, k);
        auto models = differentiable_models(k);
        if (k == 2) models.push_back(CostModel::bistatic_radar({0.5, 6.0, 0.2}));
        for (int s = 0; s < 1000; ++s) {
            const Point2 q{u(rng), u(rng)};
            const Cell* owner = nullptr;
            for (const Cell& cell : part.cells()) {
                if (cell.pieces[0].polygon.contains(q)) owner = &cell;
            }
            REQUIRE(owner != nullptr);
            for (const CostModel& model : models) {
                std::vector<double> d;
                for (std::size_t v : owner->key.indices()) d.push_back(distance(q, c[v]));
                CHECK(model.evaluate(d) <= min_over_subsets(model, c.positions(), q, k) + 1e-12);
            }
        }
    }
}

TEST_CASE("cell-sum H matches a Monte Carlo estimate of the min form") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto phi = DensityField(GaussianDensity{{0.4, 0.6}, 0.08, 0.01, 0.05, 1.0});
    for (std::size_t k : {1u, 2u, 3u}) {
        AgentConfiguration c(random_points(unit_square(), 6, rng), unit_square());
        for (const CostModel& model : differentiable_models(k)) {
            const double h = evaluate_H(c, k, model, phi);
            const int samples = 40000;
            double sum = 0.0, sum2 = 0.0;
            for (int s = 0; s < samples; ++s) {
                const Point2 q{u(rng), u(rng)};
                const double v = min_over_subsets(model, c.positions(), q, k) * phi(q);
                sum += v;
                sum2 += v * v;
            }
            const double mean = sum / samples;
            const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
            CAPTURE(cost_kind_name(model.kind()));
            CHECK(std::abs(h - mean) <= 3.0 * se);
        }
    }
}

TEST_CASE("closed-form gradient for a single shared cell") {
    AgentConfiguration c({{0.3, 0.6}, {0.7, 0.2}}, unit_square());
    const auto g = gradient_H(c, 2, CostModel::sum_squares(2), DensityField::uniform());
    CHECK(g.gradient[0].x == doctest::Approx(-0.2).epsilon(1e-14));
    CHECK(g.gradient[0].y == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(g.gradient[1].x == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(g.gradient[1].y == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK_FALSE(g.subgradient);
}

TEST_CASE("gradient vanishes at a centroidal configuration") {
    AgentConfiguration c({{0.25, 0.25}, {0.75, 0.25}, {0.75, 0.75}, {0.25, 0.75}}, unit_square());
    const auto g = gradient_H(c, 1, CostModel::sum_squares(1), DensityField::uniform());
    CHECK(max_abs(g.gradient) < 1e-15);
    const auto fd = gradient_H_fd(c, 1, CostModel::sum_squares(1), DensityField::uniform(), 1e-5);
    CHECK(max_abs(fd) < 1e-10);
}

TEST_CASE("gradient matches finite differences of H") {
    std::mt19937_64 rng(77);
    const std::vector<ConvexPolygon> regions{unit_square(), ConvexPolygon::regular({0, 0}, 1.0, 5, 0.2)};
    for (const auto& region : regions) {
        for (std::size_t k : {1u, 2u, 3u}) {
            AgentConfiguration c(random_points(region, 5, rng, 0.05), region);
            for (const CostModel& model : differentiable_models(k)) {
                const auto phi = DensityField::uniform();
                const auto g = gradient_H(c, k, model, phi);
                const auto fd = gradient_H_fd(c, k, model, phi, 1e-5);
                CAPTURE(cost_kind_name(model.kind()));
                CAPTURE(k);
                CHECK(max_diff(g.gradient, fd) <= 1e-4 * max_abs(fd));
            }
        }
    }
}

TEST_CASE("gradient with a Gaussian density") {
    std::mt19937_64 rng(5);
    AgentConfiguration c(random_points(unit_square(), 5, rng, 0.05), unit_square());
    const auto phi = DensityField(GaussianDensity{{0.3, 0.7}, 0.05, -0.01, 0.1, 2.0});
    for (const CostModel& model : {CostModel::sum_squares(2), CostModel::sum_distances(2)}) {
        const auto g = gradient_H(c, 2, model, phi);
        const auto fd = gradient_H_fd(c, 2, model, phi, 1e-5);
        CHECK(max_diff(g.gradient, fd) <= 1e-4 * max_abs(fd));
    }
}

TEST_CASE("torus gradient matches finite differences") {
    std::mt19937_64 rng(12);
    AgentConfiguration c(random_points(Torus::fundamental_square(), 6, rng, 0.05), Torus{});
    for (std::size_t k : {1u, 2u}) {
        for (const CostModel& model : {CostModel::sum_squares(k), CostModel::sum_distances(k)}) {
            const auto g = gradient_H(c, k, model, DensityField::uniform());
            const auto fd = gradient_H_fd(c, k, model, DensityField::uniform(), 1e-5);
            CHECK(max_diff(g.gradient, fd) <= 1e-4 * max_abs(fd));
        }
    }
    // Gradients of a translation-invariant cost sum to zero on the torus.
    const auto g = gradient_H(c, 2, CostModel::sum_squares(2), DensityField::uniform());
    Vec2 total{};
    for (const Vec2& v : g.gradient) total += v;
    CHECK(norm(total) < 1e-12);
}

TEST_CASE("collision-averse cost with a = 1 is twice the order-1 quadratic H") {
    std::mt19937_64 rng(31);
    for (int s = 0; s < 4; ++s) {
        AgentConfiguration c(random_points(unit_square(), 6, rng), unit_square());
        const double h2 = evaluate_H(c, 2, CostModel::collision_averse(1.0), DensityField::uniform());
        const double h1 = evaluate_H(c, 1, CostModel::sum_squares(1), DensityField::uniform());
        CHECK(h2 == doctest::Approx(2.0 * h1).epsilon(1e-10));
    }
}

TEST_CASE("w_measures") {
    AgentConfiguration c({{0.3, 0.6}, {0.7, 0.2}}, unit_square());
    const auto w = w_measures(order_k_partition(c, 2), DensityField::uniform());
    CHECK(w[0].mass == doctest::Approx(1.0));
    CHECK(w[1].centroid.x == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w[1].centroid.y == doctest::Approx(0.5).epsilon(1e-14));
    // Closed form: -M (C - p) equals the quadratic gradient.
    std::mt19937_64 rng(2);
    AgentConfiguration r(random_points(unit_square(), 7, rng), unit_square());
    const auto part = order_k_partition(r, 2);
    const auto wm = w_measures(part, DensityField::uniform());
    const auto g = gradient_H(part, CostModel::sum_squares(2), DensityField::uniform());
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(g.gradient[i].x == doctest::Approx(-wm[i].mass * (wm[i].centroid.x - r[i].x)).epsilon(1e-12));
        CHECK(g.gradient[i].y == doctest::Approx(-wm[i].mass * (wm[i].centroid.y - r[i].y)).epsilon(1e-12));
    }
}

TEST_CASE("discrete H") {
    const Point2 q[] = {{0.0, 0.0}};
    const double w[] = {1.0};
    const Point2 centers[] = {{1.0, 0.0}, {0.0, 2.0}, {5.0, 5.0}};
    CHECK(evaluate_H_discrete(q, w, centers, 2, CostModel::sum_squares(2)) == doctest::Approx(2.5));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts(8);
    std::vector<double> wt(8), wt2(8);
    for (std::size_t l = 0; l < 8; ++l) {
        pts[l] = {u(rng), u(rng)};
        wt[l] = 0.5 + u(rng);
        wt2[l] = 2 * wt[l];
    }
    const std::vector<Point2> ctr{{0.2, 0.3}, {0.8, 0.4}, {0.5, 0.9}};
    for (const CostModel& model : differentiable_models(2)) {
        const double h = evaluate_H_discrete(pts, wt, ctr, 2, model);
        double oracle = 0.0;
        for (std::size_t l = 0; l < 8; ++l) oracle += wt[l] * min_over_subsets(model, ctr, pts[l], 2);
        CHECK(h == doctest::Approx(oracle).epsilon(1e-14));
        CHECK(evaluate_H_discrete(pts, wt2, ctr, 2, model) == doctest::Approx(2 * h).epsilon(1e-14));
    }
}

TEST_CASE("Marcum Q against the noncentral chi-squared distribution") {
    for (double a : {0.0, 0.3, 1.0, 2.5, 5.0, 9.0, 20.0}) {
        for (double b : {0.1, 0.5, 1.0, 3.0, 5.26, 8.0, 15.0}) {
            double oracle;
            if (a == 0.0) {
                oracle = std::exp(-0.5 * b * b);
            } else {
                boost::math::non_central_chi_squared dist(2.0, a * a);
                oracle = boost::math::cdf(boost::math::complement(dist, b * b));
            }
            CAPTURE(a);
            CAPTURE(b);
            CHECK(marcum_q1(a, b) == doctest::Approx(oracle).epsilon(1e-9).scale(1e-12));
            const double h = 1e-4;
            if (a > h) {
                const double fd = (marcum_q1(a + h, b) - marcum_q1(a - h, b)) / (2 * h);
                CHECK(std::abs(marcum_q1_da(a, b) - fd) <= 1e-6 * std::abs(fd) + 1e-11);
            }
        }
    }
}

TEST_CASE("radar detection probability") {
    const RadarParams rp{0.5, radar_threshold_for_false_alarm(1e-6), 0.2};
    CHECK(marcum_q1(0.0, std::sqrt(rp.threshold)) == doctest::Approx(1e-6).epsilon(1e-9));
    CHECK(radar_detection_probability(0.3, 0.7, rp) == radar_detection_probability(0.7, 0.3, rp));
    CHECK(radar_detection_probability(0.4, 0.4, rp) > radar_detection_probability(0.8, 0.4, rp));
    CHECK(radar_detection_probability(1e-3, 1e-3, {1.0, rp.threshold, 0.2}) == doctest::Approx(1.0).epsilon(1e-6));
    double prev = 1.0;
    for (double r = 0.05; r < 2.0; r += 0.05) {
        const double p = radar_detection_probability(r, 0.5, rp);
        CHECK(p >= 0.0);
        CHECK(p <= prev);
        prev = p;
    }
    CHECK_THROWS_AS(radar_detection_probability(0.0, 1.0, rp), RadarSingularity);
}

TEST_CASE("radar cost: gradient is a descent direction") {
    std::mt19937_64 rng(8);
    AgentConfiguration c(random_points(unit_square(), 4, rng, 0.1), unit_square());
    const auto model = CostModel::bistatic_radar({0.02, radar_threshold_for_false_alarm(1e-4), 0.1});
    const auto phi = DensityField::uniform();
    const auto g = gradient_H(c, 2, model, phi);
    const double h0 = evaluate_H(c, 2, model, phi);
    const double scale = max_abs(g.gradient);
    REQUIRE(scale > 0.0);
    std::vector<Point2> moved;
    for (std::size_t i = 0; i < 4; ++i) moved.push_back(c[i] - (1e-4 / scale) * g.gradient[i]);
    CHECK(evaluate_H(AgentConfiguration::relaxed(moved, unit_square()), 2, model, phi) < h0);
    const auto fd = gradient_H_fd(c, 2, model, phi, 1e-5);
    CHECK(max_diff(g.gradient, fd) <= 1e-4 * max_abs(fd));
}
