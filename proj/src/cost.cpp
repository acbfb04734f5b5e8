#include "kcover/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "kcover/error.hpp"
#include "kcover/kernels.hpp"
#include "kcover/parallel.hpp"

namespace kcover {

std::string_view cost_kind_name(CostKind kind) {
    switch (kind) {
        case CostKind::sum_distances: return "sum_distances";
        case CostKind::sum_squares: return "sum_squares";
        case CostKind::pnorm: return "pnorm";
        case CostKind::max_distance: return "max_distance";
        case CostKind::collision_averse: return "collision_averse";
        case CostKind::bistatic_radar: return "bistatic_radar";
    }
    return "unknown";
}

CostModel CostModel::sum_distances(std::size_t k) {
    if (k < 1) throw std::invalid_argument("cost arity must be positive");
    return {CostKind::sum_distances, k};
}

CostModel CostModel::sum_squares(std::size_t k) {
    if (k < 1) throw std::invalid_argument("cost arity must be positive");
    return {CostKind::sum_squares, k};
}

CostModel CostModel::pnorm(std::size_t k, double p) {
    if (k < 1) throw std::invalid_argument("cost arity must be positive");
    if (!(p > 1.0) || !std::isfinite(p)) throw SchemaError("pnorm exponent must be finite and > 1");
    CostModel m(CostKind::pnorm, k);
    m.p_ = p;
    return m;
}

CostModel CostModel::max_distance(std::size_t k) {
    if (k < 1) throw std::invalid_argument("cost arity must be positive");
    return {CostKind::max_distance, k};
}

CostModel CostModel::collision_averse(double a) {
    if (!(a > 0.0 && a <= 1.0)) throw SchemaError("collision_averse parameter a must lie in (0, 1]");
    CostModel m(CostKind::collision_averse, 2);
    m.a_ = a;
    return m;
}

CostModel CostModel::bistatic_radar(const RadarParams& params) {
    if (!(params.gain > 0.0) || !(params.threshold > 0.0) || !(params.noise > 0.0) || !std::isfinite(params.gain) ||
        !std::isfinite(params.threshold) || !std::isfinite(params.noise)) {
        throw SchemaError("bistatic_radar parameters must be finite and positive");
    }
    CostModel m(CostKind::bistatic_radar, 2);
    m.radar_ = params;
    return m;
}

namespace {

// exp(-x) I_nu(x) for x >= 0, nu in {0, 1}.
double bessel_i_scaled(int nu, double x) {
    if (x < 600.0) return std::exp(-x) * boost::math::cyl_bessel_i(nu, x);
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    for (int j = 1; j <= 6; ++j) {
        const double odd = 2.0 * j - 1.0;
        term *= -(mu - odd * odd) / (j * 8.0 * x);
        sum += term;
    }
    return sum / std::sqrt(2.0 * M_PI * x);
}

double radar_snr_amplitude(double r1, double r2, const RadarParams& rp) {
    return std::sqrt(rp.gain) / (rp.noise * r1 * r2);
}

struct RadarValue {
    double p;
    // dP/dR1 * R1 = dP/dR2 * R2 = -s dP/ds
    double scaled_slope;
};

RadarValue radar_value(double r1, double r2, const RadarParams& rp) {
    const double s = radar_snr_amplitude(r1, r2, rp);
    if (!std::isfinite(s) || s > 1e150) return {1.0, 0.0};
    const double b = std::sqrt(rp.threshold);
    return {marcum_q1(s, b), -s * marcum_q1_da(s, b)};
}

// f and df/dd_m for every m. `farthest` is the member known to be farthest on
// the current sub-piece, or d.size() when unknown.
void f_and_partials(const CostModel& model, std::span<const double> d, std::size_t farthest, double& f,
                    std::span<double> df) {
    const std::size_t k = d.size();
    switch (model.kind()) {
        case CostKind::sum_distances:
            f = 0.0;
            for (std::size_t m = 0; m < k; ++m) {
                f += d[m];
                df[m] = 1.0;
            }
            return;
        case CostKind::sum_squares:
            f = 0.0;
            for (std::size_t m = 0; m < k; ++m) {
                f += 0.5 * d[m] * d[m];
                df[m] = d[m];
            }
            return;
        case CostKind::pnorm: {
            const double p = model.p();
            double s = 0.0;
            for (std::size_t m = 0; m < k; ++m) s += std::pow(d[m], p);
            f = std::pow(s, 1.0 / p);
            for (std::size_t m = 0; m < k; ++m) df[m] = f > 0.0 ? std::pow(d[m] / f, p - 1.0) : 0.0;
            return;
        }
        case CostKind::max_distance: {
            std::size_t arg = farthest;
            if (arg >= k) arg = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
            f = d[arg];
            for (std::size_t m = 0; m < k; ++m) df[m] = m == arg ? 1.0 : 0.0;
            return;
        }
        case CostKind::collision_averse: {
            const double a = model.a();
            std::size_t far = farthest;
            if (far >= 2) far = d[1] > d[0] ? 1 : 0;
            const std::size_t near = 1 - far;
            f = 0.5 * ((1.0 - a) * d[far] * d[far] + (1.0 + a) * d[near] * d[near]);
            df[far] = (1.0 - a) * d[far];
            df[near] = (1.0 + a) * d[near];
            return;
        }
        case CostKind::bistatic_radar: {
            const RadarValue v = radar_value(d[0], d[1], model.radar());
            f = -v.p;
            df[0] = d[0] > 0.0 ? -v.scaled_slope / d[0] : 0.0;
            df[1] = d[1] > 0.0 ? -v.scaled_slope / d[1] : 0.0;
            return;
        }
    }
}

void check_arity(const CostModel& model, std::size_t got) {
    if (got != model.arity()) {
        throw ArityMismatch("cost expects " + std::to_string(model.arity()) + " distances, got " +
                            std::to_string(got));
    }
}

}  // namespace

double CostModel::evaluate(std::span<const double> d) const {
    check_arity(*this, d.size());
    double f = 0.0;
    std::vector<double> df(d.size());
    f_and_partials(*this, d, d.size(), f, df);
    return f;
}

double CostModel::partial(std::size_t m, std::span<const double> d) const {
    check_arity(*this, d.size());
    if (m >= d.size()) throw std::out_of_range("partial index out of range");
    double f = 0.0;
    std::vector<double> df(d.size());
    f_and_partials(*this, d, d.size(), f, df);
    return df[m];
}

double evaluate_f(const CostModel& model, std::span<const double> distances) {
    check_arity(model, distances.size());
    for (double d : distances) {
        if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("distances must be finite and >= 0");
        if (model.kind() == CostKind::bistatic_radar && d < 1e-9) {
            throw RadarSingularity("radar range below 1e-9");
        }
    }
    return model.evaluate(distances);
}

double marcum_q1(double a, double b) {
    if (a < 0.0 || b < 0.0) throw std::invalid_argument("Marcum Q arguments must be >= 0");
    if (b == 0.0) return 1.0;
    // Mass beyond this many units from b is below 1e-17 relative.
    constexpr double window = 9.0;
    if (a - b > 38.5) return 1.0;
    // r exp(-(r^2 + a^2)/2) I_0(a r) written with the scaled Bessel function.
    auto g = [a](double r) { return r * std::exp(-0.5 * (r - a) * (r - a)) * bessel_i_scaled(0, a * r); };
    using GL = boost::math::quadrature::gauss<double, 10>;
    constexpr int panels = 6;
    auto composite = [&](double lo, double hi) {
        double sum = 0.0;
        const double w = (hi - lo) / panels;
        for (int i = 0; i < panels; ++i) sum += GL::integrate(g, lo + i * w, lo + (i + 1) * w);
        return sum;
    };
    if (b < a) {
        // Most of the mass lies above b; integrate the complement.
        return std::clamp(1.0 - composite(std::max(0.0, b - window), b), 0.0, 1.0);
    }
    return std::clamp(composite(b, b + window), 0.0, 1.0);
}

double marcum_q1_da(double a, double b) {
    if (a < 0.0 || b < 0.0) throw std::invalid_argument("Marcum Q arguments must be >= 0");
    return b * std::exp(-0.5 * (a - b) * (a - b)) * bessel_i_scaled(1, a * b);
}

double radar_detection_probability(double r1, double r2, const RadarParams& params) {
    if (!(r1 >= 1e-9) || !(r2 >= 1e-9)) throw RadarSingularity("radar range below 1e-9");
    return radar_value(r1, r2, params).p;
}

double radar_threshold_for_false_alarm(double pfa) {
    if (!(pfa > 0.0 && pfa < 1.0)) throw std::invalid_argument("false-alarm probability must lie in (0, 1)");
    return -2.0 * std::log(pfa);
}

namespace {

struct SubPiece {
    ConvexPolygon poly;
    std::size_t farthest;  // key slot, or k when not split
};

// Splits a piece into the regions where each member is the farthest. Returns
// false when two members coincide (degenerate split; the lower slot wins).
bool farthest_split(const CellPiece& piece, std::vector<SubPiece>& out) {
    const std::size_t k = piece.sites.size();
    bool clean = true;
    for (std::size_t m = 0; m < k; ++m) {
        std::optional<ConvexPolygon> cur = piece.polygon;
        for (std::size_t j = 0; j < k && cur; ++j) {
            if (j == m) continue;
            if (distance(piece.sites[j], piece.sites[m]) <= 1e-9) {
                clean = false;
                if (j < m) cur.reset();
                continue;
            }
            // Points at least as close to j as to m.
            cur = clip_halfplane(*cur, perpendicular_bisector(piece.sites[j], piece.sites[m]));
        }
        if (cur) out.push_back({std::move(*cur), m});
    }
    return clean;
}

struct CellResult {
    double h = 0.0;
    std::vector<Vec2> grad;  // per key slot
    bool degenerate = false;
};

CellResult cell_contribution(const Cell& cell, const CostModel& model, const DensityField& density, bool want_grad) {
    const std::size_t k = cell.key.size();
    check_arity(model, k);
    CellResult res;
    res.grad.assign(k, Vec2{});
    std::vector<SubPiece> subs;
    for (const CellPiece& piece : cell.pieces) {
        subs.clear();
        if (model.needs_farthest_split()) {
            if (!farthest_split(piece, subs)) res.degenerate = true;
        } else {
            subs.push_back({piece.polygon, k});
        }
        for (const SubPiece& sp : subs) {
            if (model.is_piecewise_quadratic()) {
                for (std::size_t m = 0; m < k; ++m) {
                    double c = 0.5;
                    if (model.kind() == CostKind::collision_averse) {
                        c = m == sp.farthest ? 0.5 * (1.0 - model.a()) : 0.5 * (1.0 + model.a());
                    }
                    const RawMoments raw = raw_moments(sp.poly, density, piece.sites[m]);
                    res.h += c * raw.second;
                    res.grad[m] -= 2.0 * c * raw.first;
                }
                continue;
            }
            const std::size_t n_out = want_grad ? 1 + 2 * k : 1;
            std::vector<double> acc(n_out, 0.0);
            std::vector<double> d(k), df(k);
            const std::vector<Point2>& sites = piece.sites;
            const std::size_t far = sp.farthest;
            auto field = [&](Point2 q, std::span<double> out) {
                for (std::size_t m = 0; m < k; ++m) d[m] = distance(q, sites[m]);
                double f = 0.0;
                f_and_partials(model, d, far, f, df);
                out[0] = f;
                if (!want_grad) return;
                for (std::size_t m = 0; m < k; ++m) {
                    const double w = d[m] > 0.0 ? df[m] / d[m] : 0.0;
                    out[1 + 2 * m] = w * (sites[m].x - q.x);
                    out[2 + 2 * m] = w * (sites[m].y - q.y);
                }
            };
            QuadratureOptions opts;
            opts.singular_points = sites;
            integrate_many(sp.poly, field, density, acc, opts);
            res.h += acc[0];
            if (want_grad) {
                for (std::size_t m = 0; m < k; ++m) res.grad[m] += Vec2{acc[1 + 2 * m], acc[2 + 2 * m]};
            }
        }
    }
    return res;
}

std::vector<CellResult> all_cells(const OrderKPartition& partition, const CostModel& model,
                                  const DensityField& density, bool want_grad) {
    if (partition.is_torus() && !density.is_uniform()) {
        throw SchemaError("torus regions support only a uniform density");
    }
    const auto cells = partition.cells();
    std::vector<CellResult> out(cells.size());
    parallel_for(cells.size(), [&](std::size_t c) { out[c] = cell_contribution(cells[c], model, density, want_grad); });
    return out;
}

}  // namespace

double evaluate_H(const OrderKPartition& partition, const CostModel& model, const DensityField& density) {
    check_arity(model, partition.order());
    double h = 0.0;
    for (const CellResult& r : all_cells(partition, model, density, false)) h += r.h;
    return h;
}

double evaluate_H(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                  const DensityField& density) {
    check_arity(model, k);
    return evaluate_H(order_k_partition(config, k), model, density);
}

GradientResult gradient_H(const OrderKPartition& partition, const CostModel& model, const DensityField& density) {
    check_arity(model, partition.order());
    GradientResult g;
    g.gradient.assign(partition.agent_count(), Vec2{});
    const auto results = all_cells(partition, model, density, true);
    const auto cells = partition.cells();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t m = 0; m < cells[c].key.size(); ++m) g.gradient[cells[c].key[m]] += results[c].grad[m];
        if (results[c].degenerate) g.subgradient = true;
    }
    return g;
}

GradientResult gradient_H(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                          const DensityField& density) {
    check_arity(model, k);
    return gradient_H(order_k_partition(config, k), model, density);
}

GradientVector gradient_H_fd(const AgentConfiguration& config, std::size_t k, const CostModel& model,
                             const DensityField& density, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const std::size_t n = config.size();
    GradientVector g(n);
    std::vector<Point2> pos(config.positions().begin(), config.positions().end());
    auto h_at = [&](std::size_t i, Vec2 delta) {
        std::vector<Point2> moved = pos;
        moved[i] += delta;
        return evaluate_H(AgentConfiguration::relaxed(std::move(moved), config.region()), k, model, density);
    };
    for (std::size_t i = 0; i < n; ++i) {
        g[i].x = (h_at(i, {step, 0.0}) - h_at(i, {-step, 0.0})) / (2.0 * step);
        g[i].y = (h_at(i, {0.0, step}) - h_at(i, {0.0, -step})) / (2.0 * step);
    }
    return g;
}

double evaluate_H_discrete(std::span<const Point2> points, std::span<const double> weights,
                           std::span<const Point2> centers, std::size_t k, const CostModel& model) {
    check_arity(model, k);
    if (points.empty()) throw std::invalid_argument("discrete cost needs at least one point");
    if (weights.size() != points.size()) throw std::invalid_argument("one weight per point required");
    if (k > centers.size()) throw std::invalid_argument("k exceeds the number of centers");
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
    }
    const std::size_t n = points.size();
    const std::size_t m = centers.size();
    std::vector<double> xs(n), ys(n);
    for (std::size_t l = 0; l < n; ++l) {
        xs[l] = points[l].x;
        ys[l] = points[l].y;
    }
    std::vector<double> rows(m * n);
    for (std::size_t j = 0; j < m; ++j) {
        kernels::squared_distances(xs, ys, centers[j], std::span<double>(rows.data() + j * n, n));
    }
    std::vector<double> best(m), d(k), df(k);
    double total = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        for (std::size_t j = 0; j < m; ++j) best[j] = rows[j * n + l];
        std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(k), best.end());
        for (std::size_t s = 0; s < k; ++s) d[s] = std::sqrt(best[s]);
        double f = 0.0;
        f_and_partials(model, d, k, f, df);
        total += weights[l] * f;
    }
    return total;
}

std::vector<WMeasures> w_measures(const OrderKPartition& partition, const DensityField& density) {
    if (partition.is_torus() && !density.is_uniform()) {
        throw SchemaError("torus regions support only a uniform density");
    }
    const auto cells = partition.cells();
    struct Slot {
        std::vector<RawMoments> per_member;
    };
    std::vector<Slot> slots(cells.size());
    parallel_for(cells.size(), [&](std::size_t c) {
        const Cell& cell = cells[c];
        slots[c].per_member.assign(cell.key.size(), RawMoments{});
        for (const CellPiece& piece : cell.pieces) {
            for (std::size_t m = 0; m < cell.key.size(); ++m) {
                const RawMoments r = raw_moments(piece.polygon, density, piece.sites[m]);
                slots[c].per_member[m].mass += r.mass;
                slots[c].per_member[m].first += r.first;
            }
        }
    });
    const std::size_t n = partition.agent_count();
    std::vector<double> mass(n, 0.0);
    std::vector<Vec2> first(n);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t m = 0; m < cells[c].key.size(); ++m) {
            mass[cells[c].key[m]] += slots[c].per_member[m].mass;
            first[cells[c].key[m]] += slots[c].per_member[m].first;
        }
    }
    std::vector<WMeasures> out(n);
    const auto gen = partition.generators();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(mass[i] >= 1e-14)) throw ZeroMass("W_" + std::to_string(i) + " has zero mass");
        out[i].mass = mass[i];
        out[i].centroid = gen[i] + first[i] / mass[i];
    }
    return out;
}

}  // namespace kcover
