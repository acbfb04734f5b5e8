#include "kcover/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kcover/error.hpp"
#include "kcover/kernels.hpp"
#include "kcover/parallel.hpp"
#include "kcover/rng.hpp"

namespace kcover {

void DiscreteScene::validate() const {
    if (points.empty()) throw SchemaError("scene has no points");
    if (weights.size() != points.size()) throw SchemaError("scene needs one weight per point");
    for (std::size_t l = 0; l < points.size(); ++l) {
        if (!std::isfinite(points[l].x) || !std::isfinite(points[l].y)) throw SchemaError("scene point is not finite");
        if (!(weights[l] > 0.0) || !std::isfinite(weights[l])) throw SchemaError("scene weights must be positive");
    }
}

BoundingBox DiscreteScene::bounds() const {
    BoundingBox b{points.front(), points.front()};
    for (const Point2& p : points) {
        b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y)};
        b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y)};
    }
    return b;
}

namespace {

constexpr std::size_t kChunk = 1024;

void check_centers(std::span<const Point2> centers, std::size_t k) {
    if (k == 0) throw SchemaError("k must be at least 1");
    if (centers.size() < k) throw SchemaError("fewer centers than k");
    if (centers.size() == k) return;
    for (std::size_t j = 1; j < centers.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (distance(centers[i], centers[j]) <= 1e-12) {
                throw DegenerateCenters("centers " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            }
        }
    }
}

std::vector<std::vector<std::size_t>> regions_of(const std::vector<CellKey>& owner, std::size_t m) {
    std::vector<std::vector<std::size_t>> regions(m);
    for (std::size_t l = 0; l < owner.size(); ++l) {
        for (std::size_t i : owner[l].indices()) regions[i].push_back(l);
    }
    return regions;
}

double point_cost(const CostModel& model, Point2 q, std::span<const Point2> centers, const CellKey& key) {
    double d[8];
    std::vector<double> big;
    double* dp = d;
    if (key.size() > 8) {
        big.resize(key.size());
        dp = big.data();
    }
    for (std::size_t s = 0; s < key.size(); ++s) dp[s] = distance(q, centers[key[s]]);
    return model.evaluate({dp, key.size()});
}

// Weighted geometric median with the Vardi-Zhang step at data points.
Point2 weiszfeld(const DiscreteScene& scene, std::span<const std::size_t> members, Point2 x) {
    const BoundingBox b = scene.bounds();
    const double scale = std::max(b.diagonal(), 1e-300);
    for (int it = 0; it < 10000; ++it) {
        Vec2 num{0.0, 0.0};
        double den = 0.0;
        Vec2 r{0.0, 0.0};
        double w_at = 0.0;
        for (std::size_t l : members) {
            const Vec2 d = scene.points[l] - x;
            const double dist = norm(d);
            if (dist <= 1e-14 * scale) {
                w_at += scene.weights[l];
                continue;
            }
            num = num + (scene.weights[l] / dist) * Vec2{scene.points[l].x, scene.points[l].y};
            den += scene.weights[l] / dist;
            r = r + (scene.weights[l] / dist) * d;
        }
        if (den == 0.0) return x;
        const Point2 t{num.x / den, num.y / den};
        Point2 next = t;
        if (w_at > 0.0) {
            const double rn = norm(r);
            if (rn <= w_at) return x;  // optimal at the data point
            const double f = w_at / rn;
            next = Point2{(1.0 - f) * t.x + f * x.x, (1.0 - f) * t.y + f * x.y};
        }
        const double moved = distance(next, x);
        x = next;
        if (moved <= 1e-13 * scale) break;
    }
    return x;
}

// Descends sum over members of w f(...) in the position of center i alone,
// never closer than 1e-9 diam to another center.
Point2 block_descent(const DiscreteScene& scene, const std::vector<CellKey>& owner,
                     std::span<const std::size_t> members, const CostModel& model, std::vector<Point2>& centers,
                     std::size_t i) {
    auto cost_at = [&](Point2 p) {
        const Point2 keep = centers[i];
        centers[i] = p;
        double s = 0.0;
        for (std::size_t l : members) s += scene.weights[l] * point_cost(model, scene.points[l], centers, owner[l]);
        centers[i] = keep;
        return s;
    };
    double wsum = 0.0;
    for (std::size_t l : members) wsum += scene.weights[l];
    const double scale = std::max(scene.bounds().diagonal(), 1e-300);
    Point2 x = centers[i];
    double fx = cost_at(x);
    double step = 0.1 * scale;
    // Costs such as max_distance pull partners onto each other; keep them
    // apart so the assignment stays defined.
    const double gap = 1e-9 * scale;
    std::vector<double> d;
    for (int it = 0; it < 500; ++it) {
        Vec2 g{0.0, 0.0};
        for (std::size_t l : members) {
            const CellKey& key = owner[l];
            d.resize(key.size());
            for (std::size_t s = 0; s < key.size(); ++s) d[s] = distance(scene.points[l], key[s] == i ? x : centers[key[s]]);
            const std::size_t slot = key.slot_of(i);
            if (d[slot] <= 0.0) continue;
            g = g + (scene.weights[l] * model.partial(slot, d) / d[slot]) * (x - scene.points[l]);
        }
        const double gn = norm(g);
        if (gn <= 1e-10 * wsum) break;
        bool improved = false;
        for (int back = 0; back < 60; ++back) {
            const Point2 y = x - (step / gn) * g;
            bool clear = true;
            for (std::size_t j = 0; j < centers.size(); ++j) clear = clear && (j == i || distance(y, centers[j]) > gap);
            if (!clear) {
                step *= 0.5;
                continue;
            }
            const double fy = cost_at(y);
            if (fy < fx - 1e-4 * step * gn) {
                x = y;
                fx = fy;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    return x;
}

bool separable_distance(const CostModel& model, std::size_t k) {
    if (model.kind() == CostKind::sum_distances) return true;
    return k == 1 && (model.kind() == CostKind::pnorm || model.kind() == CostKind::max_distance);
}

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return static_cast<std::size_t>(std::llround(r));
}

std::vector<CellKey> all_subsets(std::size_t m, std::size_t k) {
    std::vector<CellKey> out;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        out.emplace_back(idx);
        std::size_t pos = k;
        while (pos > 0 && idx[pos - 1] == m - k + pos - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

}  // namespace

DiscreteAssignment assign_points(const DiscreteScene& scene, std::span<const Point2> centers, std::size_t k) {
    check_centers(centers, k);
    const std::size_t n = scene.points.size();
    const std::size_t m = centers.size();
    std::vector<double> xs(n), ys(n);
    for (std::size_t l = 0; l < n; ++l) {
        xs[l] = scene.points[l].x;
        ys[l] = scene.points[l].y;
    }
    DiscreteAssignment out;
    out.owner.resize(n);
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t len = std::min(kChunk, n - lo);
        std::vector<double> rows(m * len);
        for (std::size_t j = 0; j < m; ++j) {
            kernels::squared_distances({xs.data() + lo, len}, {ys.data() + lo, len}, centers[j],
                                       {rows.data() + j * len, len});
        }
        std::vector<std::size_t> order(m);
        for (std::size_t l = 0; l < len; ++l) {
            std::iota(order.begin(), order.end(), 0);
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                              [&](std::size_t a, std::size_t b) {
                                  const double da = rows[a * len + l];
                                  const double db = rows[b * len + l];
                                  return da < db || (da == db && a < b);
                              });
            std::vector<std::size_t> key(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
            std::sort(key.begin(), key.end());
            out.owner[lo + l] = CellKey(std::move(key));
        }
    });
    out.regions = regions_of(out.owner, m);
    return out;
}

double discrete_cost(const DiscreteScene& scene, std::span<const Point2> centers, const DiscreteAssignment& assignment,
                     const CostModel& model) {
    double s = 0.0;
    for (std::size_t l = 0; l < scene.points.size(); ++l) {
        s += scene.weights[l] * point_cost(model, scene.points[l], centers, assignment.owner[l]);
    }
    return s;
}

std::vector<Point2> update_centers(const DiscreteScene& scene, const DiscreteAssignment& assignment,
                                   const CostModel& model, std::span<const Point2> start) {
    const std::size_t m = assignment.regions.size();
    if (start.size() != m) throw SchemaError("start centers do not match the assignment");
    for (std::size_t i = 0; i < m; ++i) {
        if (assignment.regions[i].empty()) throw EmptyRegion("center " + std::to_string(i) + " serves no point");
    }
    const std::size_t k = assignment.owner.empty() ? 0 : assignment.owner.front().size();
    std::vector<Point2> out(start.begin(), start.end());

    if (model.kind() == CostKind::sum_squares) {
        parallel_for(m, [&](std::size_t i) {
            double w = 0.0, x = 0.0, y = 0.0;
            for (std::size_t l : assignment.regions[i]) {
                w += scene.weights[l];
                x += scene.weights[l] * scene.points[l].x;
                y += scene.weights[l] * scene.points[l].y;
            }
            out[i] = {x / w, y / w};
        });
        return out;
    }
    if (separable_distance(model, k)) {
        parallel_for(m, [&](std::size_t i) { out[i] = weiszfeld(scene, assignment.regions[i], start[i]); });
        return out;
    }
    // Coupled costs: sweep the blocks until no center moves.
    const double scale = scene.bounds().diagonal();
    for (int sweep = 0; sweep < 200; ++sweep) {
        double moved = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const Point2 next = block_descent(scene, assignment.owner, assignment.regions[i], model, out, i);
            moved = std::max(moved, distance(next, out[i]));
            out[i] = next;
        }
        if (moved <= 1e-12 * std::max(scale, 1e-300)) break;
    }
    return out;
}

MMeansReport mmeans_run(const DiscreteScene& scene, std::size_t m, std::size_t k, const CostModel& model,
                        std::uint64_t seed, const MMeansOptions& options) {
    scene.validate();
    if (k == 0 || m < k) throw SchemaError("m-means needs 1 <= k <= m");
    if (model.arity() != k) throw ArityMismatch("cost model arity differs from k");
    if (options.initial && options.initial->size() != m) throw SchemaError("initial centers must number m");

    const BoundingBox box = scene.bounds();
    for (std::size_t attempt = 0;; ++attempt) {
        if (attempt > options.max_restarts) {
            throw MaxRestartsExceeded("m-means restarted " + std::to_string(options.max_restarts) + " times");
        }
        std::vector<Point2> centers;
        if (attempt == 0 && options.initial) {
            centers = *options.initial;
        } else {
            StreamRng rng(seed, attempt == 0 ? Stream::init : Stream::restart, attempt);
            for (std::size_t i = 0; i < m; ++i) centers.push_back(uniform_in(rng, box));
        }
        MMeansReport rep;
        rep.restarts = attempt;
        try {
            rep.assignment = assign_points(scene, centers, k);
            rep.iterates.push_back(centers);
            rep.H_values.push_back(discrete_cost(scene, centers, rep.assignment, model));
            while (rep.cycles < options.max_cycles) {
                centers = update_centers(scene, rep.assignment, model, centers);
                rep.assignment = assign_points(scene, centers, k);
                const double h = discrete_cost(scene, centers, rep.assignment, model);
                const double prev = rep.H_values.back();
                rep.iterates.push_back(centers);
                rep.H_values.push_back(h);
                ++rep.cycles;
                if (prev - h < 1e-12) {
                    rep.terminated = true;
                    break;
                }
            }
            return rep;
        } catch (const EmptyRegion&) {
        } catch (const DegenerateCenters&) {
        }
    }
}

BruteForceResult brute_force_discrete(const DiscreteScene& scene, std::size_t m, std::size_t k,
                                      const CostModel& model, std::span<const Point2> centers) {
    scene.validate();
    if (k == 0 || m < k) throw SchemaError("brute force needs 1 <= k <= m");
    if (centers.size() != m) throw SchemaError("brute force needs m centers");
    const std::size_t n = scene.points.size();
    const double maps = std::pow(static_cast<double>(binomial(m, k)), static_cast<double>(n));
    if (maps > 1e7) throw TooLarge("C(m,k)^N = " + std::to_string(maps) + " exceeds 1e7");

    const auto subsets = all_subsets(m, k);
    BruteForceResult out;
    // The cost separates over points, so the best map picks each point's
    // cheapest subset (first in lexicographic order on ties).
    out.assignment.owner.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        double best = std::numeric_limits<double>::infinity();
        for (const CellKey& key : subsets) {
            const double c = point_cost(model, scene.points[l], centers, key);
            if (c < best) {
                best = c;
                out.assignment.owner[l] = key;
            }
        }
        out.H += scene.weights[l] * best;
    }
    out.assignment.regions = regions_of(out.assignment.owner, m);

    if (model.kind() == CostKind::sum_squares) {
        // Odometer over every owner map; each center at its weighted mean.
        std::vector<std::size_t> pick(n, 0);
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> w(m), sx(m), sy(m), sq(m);
        for (;;) {
            std::fill(w.begin(), w.end(), 0.0);
            std::fill(sx.begin(), sx.end(), 0.0);
            std::fill(sy.begin(), sy.end(), 0.0);
            std::fill(sq.begin(), sq.end(), 0.0);
            for (std::size_t l = 0; l < n; ++l) {
                const Point2 q = scene.points[l];
                const double wl = scene.weights[l];
                for (std::size_t i : subsets[pick[l]].indices()) {
                    w[i] += wl;
                    sx[i] += wl * q.x;
                    sy[i] += wl * q.y;
                    sq[i] += wl * (q.x * q.x + q.y * q.y);
                }
            }
            double h = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (w[i] > 0.0) h += 0.5 * (sq[i] - (sx[i] * sx[i] + sy[i] * sy[i]) / w[i]);
            }
            if (h < best) {
                best = h;
                std::vector<CellKey> owner(n);
                for (std::size_t l = 0; l < n; ++l) owner[l] = subsets[pick[l]];
                out.global_owner = std::move(owner);
            }
            std::size_t pos = 0;
            while (pos < n && ++pick[pos] == subsets.size()) pick[pos++] = 0;
            if (pos == n) break;
        }
        out.global_H = best;
    }
    return out;
}

}  // namespace kcover
