#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "kcover/geometry.hpp"

namespace kcover {

// Fundamental square [-1/2, 1/2)^2 with the wraparound metric.
struct Torus {
    static ConvexPolygon fundamental_square() { return ConvexPolygon::rectangle(-0.5, -0.5, 0.5, 0.5); }
};

using Region = std::variant<ConvexPolygon, Torus>;

// Maps a point into [-1/2, 1/2)^2.
Point2 wrap_torus(Point2 p);
// Lattice translate of d with the smallest norm (torus displacement).
Vec2 torus_displacement(Vec2 d);

class AgentConfiguration {
public:
    static constexpr double kMinSeparation = 1e-9;

    // Throws SchemaError when a position lies outside the region (the
    // fundamental square on the torus). Separation is checked by the
    // partition builders, which need it only when k < n.
    AgentConfiguration(std::vector<Point2> positions, Region region);

    // Skips the containment check; used by finite-difference probes that
    // step generators across the boundary. Torus positions are wrapped.
    static AgentConfiguration relaxed(std::vector<Point2> positions, Region region);

    std::span<const Point2> positions() const { return positions_; }
    Point2 operator[](std::size_t i) const { return positions_[i]; }
    std::size_t size() const { return positions_.size(); }
    const Region& region() const { return region_; }
    bool is_torus() const { return std::holds_alternative<Torus>(region_); }
    // Region polygon; the fundamental square for the torus.
    const ConvexPolygon& domain() const { return domain_; }
    // Smallest pairwise distance (torus metric on the torus).
    double separation() const;

    AgentConfiguration with_positions(std::vector<Point2> positions) const {
        return AgentConfiguration(std::move(positions), region_);
    }

private:
    struct Relaxed {};
    AgentConfiguration(Relaxed, std::vector<Point2> positions, Region region);

    std::vector<Point2> positions_;
    Region region_;
    ConvexPolygon domain_;
};

// Strictly increasing agent indices.
class CellKey {
public:
    CellKey() = default;
    // Throws std::invalid_argument when the indices are not strictly increasing.
    explicit CellKey(std::vector<std::size_t> indices);

    std::span<const std::size_t> indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    std::size_t operator[](std::size_t m) const { return indices_[m]; }
    bool contains(std::size_t i) const;
    // Position of agent i inside the key, or size() if absent.
    std::size_t slot_of(std::size_t i) const;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;

private:
    std::vector<std::size_t> indices_;
};

// One convex piece of an order-k cell. `sites[m]` is the position of agent
// key[m] as seen from this piece: the generator itself in the plane, its
// nearest lattice image on the torus.
struct CellPiece {
    ConvexPolygon polygon;
    std::vector<Point2> sites;
};

struct Cell {
    CellKey key;
    std::vector<CellPiece> pieces;

    double area() const;
};

class OrderKPartition {
public:
    OrderKPartition(std::size_t order, ConvexPolygon region, bool torus, std::vector<Point2> generators,
                    std::vector<Cell> cells);

    std::size_t order() const { return order_; }
    const ConvexPolygon& region() const { return region_; }
    bool is_torus() const { return torus_; }
    std::span<const Point2> generators() const { return generators_; }
    std::size_t agent_count() const { return generators_.size(); }
    // Sorted by key.
    std::span<const Cell> cells() const { return cells_; }
    const Cell* find(const CellKey& key) const;

private:
    std::size_t order_;
    ConvexPolygon region_;
    bool torus_;
    std::vector<Point2> generators_;
    std::vector<Cell> cells_;
};

// Cells with area below this fraction of the region are dropped.
inline constexpr double kSliverFraction = 1e-12;

// Order-k partition of the configuration's region (dispatches to the torus
// construction for torus configurations). Throws std::invalid_argument unless
// 1 <= k <= n, DegenerateGenerators for generators closer than 1e-9 when
// k < n (with k = n the single cell needs no bisectors).
OrderKPartition order_k_partition(const AgentConfiguration& config, std::size_t k);
OrderKPartition torus_order_k_partition(const AgentConfiguration& config, std::size_t k);

struct WRegion {
    std::size_t owner = 0;
    std::vector<Cell> cells;

    // All piece vertices, expressed in the owner's frame (torus pieces are
    // shifted so the owner's site coincides with its generator).
    std::vector<Point2> vertices_in_owner_frame(Point2 owner_position) const;
};

WRegion w_region(const OrderKPartition& partition, std::size_t i);

std::set<std::size_t> neighbors(const OrderKPartition& partition, std::size_t i);

// Length of boundary shared by two convex polygons (collinear, overlapping
// edges within `tol`).
double shared_boundary_length(const ConvexPolygon& a, const ConvexPolygon& b, double tol = 1e-9);

struct OracleReport {
    std::size_t points_checked = 0;
    std::size_t mismatches = 0;
    // Mismatches more than one grid spacing away from the cell the oracle
    // assigns them to (or whose cell is missing).
    std::size_t far_mismatches = 0;
    double mismatch_fraction = 0.0;
    double grid_spacing = 0.0;
    // 2 * perimeter * cellcount / (resolution * area)
    double heuristic_bound = 0.0;
};

// Classifies the centers of a resolution x resolution grid over the region by
// their k nearest generators (ties by lower index) and checks each lies in
// the matching cell within 1e-7.
OracleReport grid_oracle_check(const OrderKPartition& partition, const AgentConfiguration& config, std::size_t k,
                               int resolution);

// Keys of the k nearest generators to q, ties broken by lower index; torus
// metric when `torus`.
CellKey k_nearest_key(std::span<const Point2> generators, Point2 q, std::size_t k, bool torus);

struct PartitionDiagnostics {
    double area_sum = 0.0;
    double region_area = 0.0;
    double max_pair_overlap = 0.0;
    double min_convexity_cross = 0.0;
    std::size_t piece_count = 0;
};

PartitionDiagnostics diagnose(const OrderKPartition& partition);

// Area of the intersection of two convex polygons.
double intersection_area(const ConvexPolygon& a, const ConvexPolygon& b);

}  // namespace kcover
