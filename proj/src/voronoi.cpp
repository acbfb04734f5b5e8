#include "kcover/voronoi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "kcover/error.hpp"
#include "kcover/kernels.hpp"
#include "kcover/parallel.hpp"

namespace kcover {

Point2 wrap_torus(Point2 p) {
    auto w = [](double x) {
        double r = x - std::floor(x + 0.5);
        if (r >= 0.5) r -= 1.0;
        return r;
    };
    return {w(p.x), w(p.y)};
}

Vec2 torus_displacement(Vec2 d) { return wrap_torus(d); }

AgentConfiguration::AgentConfiguration(std::vector<Point2> positions, Region region)
    : positions_(std::move(positions)),
      region_(std::move(region)),
      domain_(std::holds_alternative<Torus>(region_) ? Torus::fundamental_square()
                                                     : std::get<ConvexPolygon>(region_)) {
    if (positions_.empty()) throw SchemaError("configuration needs at least one agent");
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        const Point2 p = positions_[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw SchemaError("non-finite agent position");
        if (!domain_.contains(p, 1e-9)) {
            throw SchemaError("agent " + std::to_string(i) + " lies outside the region");
        }
    }
}

AgentConfiguration::AgentConfiguration(Relaxed, std::vector<Point2> positions, Region region)
    : positions_(std::move(positions)),
      region_(std::move(region)),
      domain_(std::holds_alternative<Torus>(region_) ? Torus::fundamental_square()
                                                     : std::get<ConvexPolygon>(region_)) {
    if (is_torus()) {
        for (auto& p : positions_) p = wrap_torus(p);
    }
}

AgentConfiguration AgentConfiguration::relaxed(std::vector<Point2> positions, Region region) {
    return AgentConfiguration(Relaxed{}, std::move(positions), std::move(region));
}

double AgentConfiguration::separation() const {
    double best = std::numeric_limits<double>::infinity();
    const bool torus = is_torus();
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        for (std::size_t j = i + 1; j < positions_.size(); ++j) {
            const Vec2 d = positions_[j] - positions_[i];
            best = std::min(best, torus ? norm(torus_displacement(d)) : norm(d));
        }
    }
    return best;
}

CellKey::CellKey(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    for (std::size_t m = 1; m < indices_.size(); ++m) {
        if (indices_[m - 1] >= indices_[m]) throw std::invalid_argument("cell key must be strictly increasing");
    }
}

bool CellKey::contains(std::size_t i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

std::size_t CellKey::slot_of(std::size_t i) const {
    const auto it = std::lower_bound(indices_.begin(), indices_.end(), i);
    if (it == indices_.end() || *it != i) return indices_.size();
    return static_cast<std::size_t>(it - indices_.begin());
}

double Cell::area() const {
    double a = 0.0;
    for (const auto& p : pieces) a += p.polygon.area();
    return a;
}

OrderKPartition::OrderKPartition(std::size_t order, ConvexPolygon region, bool torus, std::vector<Point2> generators,
                                 std::vector<Cell> cells)
    : order_(order),
      region_(std::move(region)),
      torus_(torus),
      generators_(std::move(generators)),
      cells_(std::move(cells)) {
    std::sort(cells_.begin(), cells_.end(), [](const Cell& a, const Cell& b) { return a.key < b.key; });
}

const Cell* OrderKPartition::find(const CellKey& key) const {
    const auto it =
        std::lower_bound(cells_.begin(), cells_.end(), key, [](const Cell& c, const CellKey& k) { return c.key < k; });
    if (it == cells_.end() || it->key != key) return nullptr;
    return &*it;
}

namespace {

// All k-subsets of {0..n-1} in lexicographic order, flattened.
std::vector<std::uint32_t> enumerate_subsets(std::size_t n, std::size_t k) {
    std::vector<std::uint32_t> flat;
    std::vector<std::uint32_t> c(k);
    std::iota(c.begin(), c.end(), 0u);
    while (true) {
        flat.insert(flat.end(), c.begin(), c.end());
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
    }
    return flat;
}

double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

void check_order(const AgentConfiguration& config, std::size_t k) {
    const std::size_t n = config.size();
    if (k < 1 || k > n) {
        throw std::invalid_argument("order k=" + std::to_string(k) + " must satisfy 1 <= k <= n=" + std::to_string(n));
    }
    if (k < n && config.separation() <= AgentConfiguration::kMinSeparation) {
        throw DegenerateGenerators("two agents closer than 1e-9");
    }
    if (binomial(n, k) > 5e7) throw TooLarge("too many candidate subsets for the order-k partition");
}

struct Outsider {
    Point2 p;
    double d2;
};

// Clips `poly` so every point is at least as close to each site as to every
// outsider. Outsiders must be sorted by distance so empty cells exit early.
std::optional<ConvexPolygon> clip_cell(ConvexPolygon poly, std::span<const Point2> sites,
                                       std::span<const Outsider> outsiders) {
    for (const Outsider& w : outsiders) {
        for (const Point2& v : sites) {
            auto r = clip_halfplane(poly, perpendicular_bisector(v, w.p));
            if (!r) return std::nullopt;
            poly = std::move(*r);
        }
    }
    return poly;
}

std::vector<Cell> compact(std::vector<std::optional<Cell>>& slots) {
    std::vector<Cell> out;
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    return out;
}

}  // namespace

OrderKPartition order_k_partition(const AgentConfiguration& config, std::size_t k) {
    if (config.is_torus()) return torus_order_k_partition(config, k);
    const std::size_t n = config.size();
    check_order(config, k);
    const ConvexPolygon& region = config.domain();
    const auto gen = config.positions();
    const double sliver = kSliverFraction * region.area();

    const std::vector<std::uint32_t> subsets = enumerate_subsets(n, k);
    const std::size_t count = subsets.size() / k;
    std::vector<std::optional<Cell>> slots(count);

    parallel_for(count, [&](std::size_t s) {
        const std::uint32_t* t = subsets.data() + s * k;
        std::vector<std::size_t> key(t, t + k);
        std::vector<Point2> sites;
        Point2 center{};
        for (std::size_t m = 0; m < k; ++m) {
            sites.push_back(gen[t[m]]);
            center += gen[t[m]];
        }
        center = center / static_cast<double>(k);
        std::vector<Outsider> outs;
        outs.reserve(n - k);
        std::size_t m = 0;
        for (std::size_t w = 0; w < n; ++w) {
            if (m < k && t[m] == w) {
                ++m;
                continue;
            }
            outs.push_back({gen[w], norm_sq(gen[w] - center)});
        }
        std::sort(outs.begin(), outs.end(), [](const Outsider& a, const Outsider& b) { return a.d2 < b.d2; });
        auto poly = clip_cell(region, sites, outs);
        if (!poly || poly->area() < sliver) return;
        Cell cell{CellKey(std::move(key)), {}};
        cell.pieces.push_back({std::move(*poly), std::move(sites)});
        slots[s] = std::move(cell);
    });

    return OrderKPartition(k, region, false, {gen.begin(), gen.end()}, compact(slots));
}

OrderKPartition torus_order_k_partition(const AgentConfiguration& config, std::size_t k) {
    if (!config.is_torus()) throw std::invalid_argument("torus partition needs a torus configuration");
    const std::size_t n = config.size();
    check_order(config, k);
    const ConvexPolygon square = Torus::fundamental_square();
    std::vector<Point2> gen;
    for (const Point2& p : config.positions()) gen.push_back(wrap_torus(p));

    // For each agent, the parts of the square where a given lattice image is
    // the nearest copy: square ∩ (image + [-1/2, 1/2]^2).
    struct Box {
        Point2 image;
        Point2 lo, hi;
    };
    std::vector<std::vector<Box>> boxes(n);
    std::vector<std::array<Point2, 9>> images(n);
    for (std::size_t v = 0; v < n; ++v) {
        int slot = 0;
        for (int zx = -1; zx <= 1; ++zx) {
            for (int zy = -1; zy <= 1; ++zy) {
                const Point2 img = gen[v] + Point2{double(zx), double(zy)};
                images[v][slot++] = img;
                const Point2 lo{std::max(-0.5, img.x - 0.5), std::max(-0.5, img.y - 0.5)};
                const Point2 hi{std::min(0.5, img.x + 0.5), std::min(0.5, img.y + 0.5)};
                if (hi.x - lo.x > ConvexPolygon::kVertexMergeTol && hi.y - lo.y > ConvexPolygon::kVertexMergeTol) {
                    boxes[v].push_back({img, lo, hi});
                }
            }
        }
    }

    const double sliver = kSliverFraction;
    const std::vector<std::uint32_t> subsets = enumerate_subsets(n, k);
    const std::size_t count = subsets.size() / k;
    std::vector<std::optional<Cell>> slots(count);

    parallel_for(count, [&](std::size_t s) {
        const std::uint32_t* t = subsets.data() + s * k;
        std::vector<std::size_t> key(t, t + k);
        std::vector<bool> member(n, false);
        for (std::size_t m = 0; m < k; ++m) member[t[m]] = true;

        Cell cell{CellKey(key), {}};
        std::vector<std::size_t> choice(k, 0);
        std::vector<Point2> sites(k);
        std::vector<Outsider> outs;
        outs.reserve(9 * (n - k));
        while (true) {
            Point2 lo{-0.5, -0.5};
            Point2 hi{0.5, 0.5};
            for (std::size_t m = 0; m < k; ++m) {
                const Box& b = boxes[t[m]][choice[m]];
                lo = {std::max(lo.x, b.lo.x), std::max(lo.y, b.lo.y)};
                hi = {std::min(hi.x, b.hi.x), std::min(hi.y, b.hi.y)};
                sites[m] = b.image;
            }
            if (hi.x - lo.x > ConvexPolygon::kVertexMergeTol && hi.y - lo.y > ConvexPolygon::kVertexMergeTol) {
                const Point2 mid = 0.5 * (lo + hi);
                outs.clear();
                for (std::size_t w = 0; w < n; ++w) {
                    if (member[w]) continue;
                    for (const Point2& img : images[w]) outs.push_back({img, norm_sq(img - mid)});
                }
                std::sort(outs.begin(), outs.end(), [](const Outsider& a, const Outsider& b) { return a.d2 < b.d2; });
                auto poly = clip_cell(ConvexPolygon::rectangle(lo.x, lo.y, hi.x, hi.y), sites, outs);
                if (poly && poly->area() >= sliver) cell.pieces.push_back({std::move(*poly), sites});
            }
            // Next combination of boxes.
            std::size_t m = 0;
            while (m < k) {
                if (++choice[m] < boxes[t[m]].size()) break;
                choice[m] = 0;
                ++m;
            }
            if (m == k) break;
        }
        if (!cell.pieces.empty()) slots[s] = std::move(cell);
    });

    return OrderKPartition(k, square, true, std::move(gen), compact(slots));
}

std::vector<Point2> WRegion::vertices_in_owner_frame(Point2 owner_position) const {
    std::vector<Point2> out;
    for (const Cell& c : cells) {
        const std::size_t slot = c.key.slot_of(owner);
        for (const CellPiece& p : c.pieces) {
            const Vec2 shift = owner_position - p.sites[slot];
            for (const Point2& v : p.polygon.vertices()) out.push_back(v + shift);
        }
    }
    return out;
}

WRegion w_region(const OrderKPartition& partition, std::size_t i) {
    if (i >= partition.agent_count()) throw std::out_of_range("agent index out of range");
    WRegion w;
    w.owner = i;
    for (const Cell& c : partition.cells()) {
        if (c.key.contains(i)) w.cells.push_back(c);
    }
    return w;
}

namespace {

double shared_length_offset(const ConvexPolygon& a, const ConvexPolygon& b, Vec2 shift, double tol) {
    const auto va = a.vertices();
    const auto vb = b.vertices();
    double total = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const Point2 a0 = va[i];
        const Point2 a1 = va[(i + 1) % va.size()];
        const Vec2 e = a1 - a0;
        const double len = norm(e);
        if (len <= tol) continue;
        const Vec2 u = e / len;
        for (std::size_t j = 0; j < vb.size(); ++j) {
            const Point2 b0 = vb[j] + shift;
            const Point2 b1 = vb[(j + 1) % vb.size()] + shift;
            if (std::abs(cross(u, b0 - a0)) > tol || std::abs(cross(u, b1 - a0)) > tol) continue;
            // Adjacent convex polygons traverse a shared edge in opposite directions.
            const double s0 = dot(u, b0 - a0);
            const double s1 = dot(u, b1 - a0);
            if (s1 >= s0) continue;
            const double overlap = std::min(len, s0) - std::max(0.0, s1);
            if (overlap > 0.0) total += overlap;
        }
    }
    return total;
}

bool boxes_touch(const BoundingBox& a, const BoundingBox& b, Vec2 shift, double tol) {
    return a.lo.x <= b.hi.x + shift.x + tol && b.lo.x + shift.x <= a.hi.x + tol && a.lo.y <= b.hi.y + shift.y + tol &&
           b.lo.y + shift.y <= a.hi.y + tol;
}

}  // namespace

double shared_boundary_length(const ConvexPolygon& a, const ConvexPolygon& b, double tol) {
    return shared_length_offset(a, b, {0.0, 0.0}, tol);
}

std::set<std::size_t> neighbors(const OrderKPartition& partition, std::size_t i) {
    if (i >= partition.agent_count()) throw std::out_of_range("agent index out of range");
    constexpr double tol = 1e-9;
    std::set<std::size_t> out;
    std::vector<Vec2> shifts{{0.0, 0.0}};
    if (partition.is_torus()) {
        for (int zx = -1; zx <= 1; ++zx) {
            for (int zy = -1; zy <= 1; ++zy) {
                if (zx != 0 || zy != 0) shifts.push_back({double(zx), double(zy)});
            }
        }
    }
    std::vector<const CellPiece*> own;
    for (const Cell& c : partition.cells()) {
        if (!c.key.contains(i)) continue;
        for (std::size_t j : c.key.indices()) out.insert(j);
        for (const CellPiece& p : c.pieces) own.push_back(&p);
    }
    for (const Cell& c : partition.cells()) {
        if (c.key.contains(i)) continue;
        bool adjacent = false;
        for (const CellPiece& p : c.pieces) {
            const BoundingBox pb = p.polygon.bounds();
            for (const CellPiece* a : own) {
                const BoundingBox ab = a->polygon.bounds();
                for (const Vec2& s : shifts) {
                    if (!boxes_touch(ab, pb, s, tol)) continue;
                    if (shared_length_offset(a->polygon, p.polygon, s, tol) > tol) {
                        adjacent = true;
                        break;
                    }
                }
                if (adjacent) break;
            }
            if (adjacent) break;
        }
        if (adjacent) {
            for (std::size_t j : c.key.indices()) out.insert(j);
        }
    }
    out.erase(i);
    return out;
}

CellKey k_nearest_key(std::span<const Point2> generators, Point2 q, std::size_t k, bool torus) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(generators.size());
    for (std::size_t j = 0; j < generators.size(); ++j) {
        const Vec2 v = torus ? torus_displacement(generators[j] - q) : generators[j] - q;
        d.push_back({norm_sq(v), j});
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<std::size_t> idx;
    for (std::size_t m = 0; m < k; ++m) idx.push_back(d[m].second);
    std::sort(idx.begin(), idx.end());
    return CellKey(std::move(idx));
}

OracleReport grid_oracle_check(const OrderKPartition& partition, const AgentConfiguration& config, std::size_t k,
                               int resolution) {
    if (resolution < 1) throw std::invalid_argument("oracle resolution must be positive");
    const ConvexPolygon& region = partition.region();
    const BoundingBox bb = region.bounds();
    const bool torus = partition.is_torus();
    const std::size_t n = config.size();
    std::vector<Point2> gen(config.positions().begin(), config.positions().end());
    if (torus) {
        for (auto& p : gen) p = wrap_torus(p);
    }

    OracleReport rep;
    rep.grid_spacing = std::max(bb.width(), bb.height()) / resolution;
    rep.heuristic_bound =
        2.0 * region.perimeter() * static_cast<double>(partition.cells().size()) / (resolution * region.area());

    std::vector<double> xs, ys;
    for (int iy = 0; iy < resolution; ++iy) {
        for (int ix = 0; ix < resolution; ++ix) {
            const Point2 q{bb.lo.x + (ix + 0.5) * bb.width() / resolution,
                           bb.lo.y + (iy + 0.5) * bb.height() / resolution};
            if (!region.contains(q)) continue;
            xs.push_back(q.x);
            ys.push_back(q.y);
        }
    }
    rep.points_checked = xs.size();

    constexpr std::size_t chunk = 4096;
    std::vector<double> rows;
    std::vector<double> tmp(chunk);
    std::vector<std::pair<double, std::size_t>> best;
    for (std::size_t start = 0; start < xs.size(); start += chunk) {
        const std::size_t len = std::min(chunk, xs.size() - start);
        const std::span<const double> cx(xs.data() + start, len);
        const std::span<const double> cy(ys.data() + start, len);
        rows.assign(n * len, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            std::span<double> row(rows.data() + j * len, len);
            if (!torus) {
                kernels::squared_distances(cx, cy, gen[j], row);
                continue;
            }
            std::fill(row.begin(), row.end(), std::numeric_limits<double>::infinity());
            for (int zx = -1; zx <= 1; ++zx) {
                for (int zy = -1; zy <= 1; ++zy) {
                    kernels::squared_distances(cx, cy, gen[j] + Point2{double(zx), double(zy)},
                                               std::span<double>(tmp.data(), len));
                    kernels::min_inplace(row, std::span<const double>(tmp.data(), len));
                }
            }
        }
        for (std::size_t p = 0; p < len; ++p) {
            best.clear();
            for (std::size_t j = 0; j < n; ++j) best.push_back({rows[j * len + p], j});
            std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(k), best.end());
            std::vector<std::size_t> idx;
            for (std::size_t m = 0; m < k; ++m) idx.push_back(best[m].second);
            std::sort(idx.begin(), idx.end());
            const Point2 q{cx[p], cy[p]};
            const Cell* cell = partition.find(CellKey(std::move(idx)));
            bool inside = false;
            double gap = std::numeric_limits<double>::infinity();
            if (cell) {
                for (const CellPiece& piece : cell->pieces) {
                    if (piece.polygon.contains(q, 1e-7)) {
                        inside = true;
                        break;
                    }
                    gap = std::min(gap, piece.polygon.boundary_distance(q));
                }
            }
            if (inside) continue;
            ++rep.mismatches;
            if (gap > rep.grid_spacing) ++rep.far_mismatches;
        }
    }
    rep.mismatch_fraction =
        rep.points_checked ? static_cast<double>(rep.mismatches) / static_cast<double>(rep.points_checked) : 0.0;
    return rep;
}

double intersection_area(const ConvexPolygon& a, const ConvexPolygon& b) {
    std::optional<ConvexPolygon> cur = a;
    const auto vb = b.vertices();
    for (std::size_t i = 0; i < vb.size() && cur; ++i) {
        const Point2 p0 = vb[i];
        const Point2 p1 = vb[(i + 1) % vb.size()];
        const Vec2 e = p1 - p0;
        // Interior of a CCW polygon is to the left of each edge.
        const Vec2 outward = Vec2{e.y, -e.x} / norm(e);
        cur = clip_halfplane(*cur, {outward, dot(outward, p0)});
    }
    return cur ? cur->area() : 0.0;
}

PartitionDiagnostics diagnose(const OrderKPartition& partition) {
    PartitionDiagnostics d;
    d.region_area = partition.region().area();
    d.min_convexity_cross = std::numeric_limits<double>::infinity();
    std::vector<const ConvexPolygon*> polys;
    for (const Cell& c : partition.cells()) {
        for (const CellPiece& p : c.pieces) polys.push_back(&p.polygon);
    }
    d.piece_count = polys.size();
    std::vector<BoundingBox> boxes;
    for (const ConvexPolygon* p : polys) {
        d.area_sum += p->area();
        boxes.push_back(p->bounds());
        const auto v = p->vertices();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point2 a = v[i];
            const Point2 b = v[(i + 1) % v.size()];
            const Point2 c = v[(i + 2) % v.size()];
            d.min_convexity_cross = std::min(d.min_convexity_cross, cross(b - a, c - b));
        }
    }
    for (std::size_t i = 0; i < polys.size(); ++i) {
        for (std::size_t j = i + 1; j < polys.size(); ++j) {
            if (!boxes_touch(boxes[i], boxes[j], {0.0, 0.0}, 0.0)) continue;
            d.max_pair_overlap = std::max(d.max_pair_overlap, intersection_area(*polys[i], *polys[j]));
        }
    }
    return d;
}

}  // namespace kcover
