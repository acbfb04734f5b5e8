#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace kcover {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Point2& operator+=(Point2 o) { x += o.x; y += o.y; return *this; }
    constexpr Point2& operator-=(Point2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Point2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point2 operator-(Point2 a) { return {-a.x, -a.y}; }
    friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr Point2 operator/(Point2 a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

// A displacement in the plane; same representation as a point.
using Vec2 = Point2;

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm_sq(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// {q : normal . q <= offset}
struct HalfPlane {
    Vec2 normal;
    double offset = 0.0;

    double signed_distance(Point2 q) const { return dot(normal, q) - offset; }
    bool contains(Point2 q, double tol = 0.0) const { return signed_distance(q) <= tol; }
};

struct Circle {
    Point2 center;
    double radius = 0.0;

    bool contains(Point2 q, double tol = 1e-9) const { return distance(center, q) <= radius + tol; }
};

struct BoundingBox {
    Point2 lo;
    Point2 hi;

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double diagonal() const { return std::hypot(width(), height()); }
};

// Integrals of the monomials 1, x, y, x^2, xy, y^2 over a polygon, with x and
// y measured from `origin`.
struct PolygonMoments {
    Point2 origin;
    double area = 0.0;
    double x = 0.0;
    double y = 0.0;
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;
};

class ConvexPolygon {
public:
    static constexpr double kVertexMergeTol = 1e-12;
    static constexpr double kConvexityTol = 1e-12;

    // Validates: >= 3 vertices, counter-clockwise, convex, no near-duplicate
    // consecutive vertices. Throws InvalidPolygon.
    explicit ConvexPolygon(std::vector<Point2> vertices);

    // Accepts either orientation and drops repeated vertices before validating.
    static ConvexPolygon from_points(std::vector<Point2> vertices);

    static ConvexPolygon rectangle(double x0, double y0, double x1, double y1);
    static ConvexPolygon regular(Point2 center, double radius, int sides, double phase = 0.0);

    std::span<const Point2> vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    Point2 operator[](std::size_t i) const { return vertices_[i]; }

    double area() const;
    double perimeter() const;
    Point2 centroid() const;
    PolygonMoments moments(Point2 origin) const;
    BoundingBox bounds() const;
    double diameter() const;

    // Inside or within `tol` of the boundary.
    bool contains(Point2 q, double tol = 0.0) const;
    // Unsigned distance from q to the polygon boundary.
    double boundary_distance(Point2 q) const;
    // Nearest point of the closed polygon to q (q itself when inside).
    Point2 closest_point(Point2 q) const;

private:
    struct Unchecked {};
    ConvexPolygon(Unchecked, std::vector<Point2> vertices) : vertices_(std::move(vertices)) {}

    friend std::optional<ConvexPolygon> clip_halfplane(const ConvexPolygon&, const HalfPlane&);

    std::vector<Point2> vertices_;
};

// Half-plane of points at least as close to `pi` as to `pj`.
// Throws DegenerateGenerators when the points are closer than 1e-9.
HalfPlane perpendicular_bisector(Point2 pi, Point2 pj);

// poly intersected with h; nullopt when the intersection has zero area.
std::optional<ConvexPolygon> clip_halfplane(const ConvexPolygon& poly, const HalfPlane& h);

// Smallest circle enclosing all points (randomized incremental, fixed seed).
Circle min_enclosing_circle(std::span<const Point2> points);

}  // namespace kcover
