#include "kcover/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "kcover/error.hpp"

namespace kcover {

namespace {

double signed_area2(std::span<const Point2> v) {
    double s = 0.0;
    const Point2 o = v[0];
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        s += cross(v[i] - o, v[i + 1] - o);
    }
    return s;
}

Point2 segment_closest(Point2 a, Point2 b, Point2 q) {
    const Vec2 ab = b - a;
    const double len2 = norm_sq(ab);
    if (len2 == 0.0) return a;
    const double t = std::clamp(dot(q - a, ab) / len2, 0.0, 1.0);
    return a + t * ab;
}

}  // namespace

ConvexPolygon::ConvexPolygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
    const std::size_t n = vertices_.size();
    if (n < 3) {
        throw InvalidPolygon("polygon needs at least 3 vertices, got " + std::to_string(n));
    }
    for (const Point2& p : vertices_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidPolygon("non-finite polygon vertex");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (distance(vertices_[i], vertices_[(i + 1) % n]) < kVertexMergeTol) {
            throw InvalidPolygon("consecutive polygon vertices coincide");
        }
    }
    if (signed_area2(vertices_) <= 0.0) throw InvalidPolygon("polygon is not counter-clockwise");
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = vertices_[i];
        const Point2 b = vertices_[(i + 1) % n];
        const Point2 c = vertices_[(i + 2) % n];
        if (cross(b - a, c - b) < -kConvexityTol) throw InvalidPolygon("polygon is not convex");
    }
}

ConvexPolygon ConvexPolygon::from_points(std::vector<Point2> vertices) {
    std::vector<Point2> cleaned;
    cleaned.reserve(vertices.size());
    for (const Point2& p : vertices) {
        if (cleaned.empty() || distance(cleaned.back(), p) >= kVertexMergeTol) cleaned.push_back(p);
    }
    while (cleaned.size() > 1 && distance(cleaned.front(), cleaned.back()) < kVertexMergeTol) {
        cleaned.pop_back();
    }
    if (cleaned.size() >= 3 && signed_area2(cleaned) < 0.0) std::reverse(cleaned.begin(), cleaned.end());
    return ConvexPolygon(std::move(cleaned));
}

ConvexPolygon ConvexPolygon::rectangle(double x0, double y0, double x1, double y1) {
    return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

ConvexPolygon ConvexPolygon::regular(Point2 center, double radius, int sides, double phase) {
    std::vector<Point2> v;
    v.reserve(static_cast<std::size_t>(sides));
    for (int i = 0; i < sides; ++i) {
        const double a = phase + 2.0 * std::numbers::pi * i / sides;
        v.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return ConvexPolygon(std::move(v));
}

double ConvexPolygon::area() const { return 0.5 * signed_area2(vertices_); }

double ConvexPolygon::perimeter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        s += distance(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
    }
    return s;
}

PolygonMoments ConvexPolygon::moments(Point2 origin) const {
    PolygonMoments m;
    m.origin = origin;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = vertices_[i] - origin;
        const Point2 b = vertices_[(i + 1) % n] - origin;
        const double c = cross(a, b);
        m.area += c;
        m.x += (a.x + b.x) * c;
        m.y += (a.y + b.y) * c;
        m.xx += (a.x * a.x + a.x * b.x + b.x * b.x) * c;
        m.yy += (a.y * a.y + a.y * b.y + b.y * b.y) * c;
        m.xy += (a.x * b.y + 2.0 * a.x * a.y + 2.0 * b.x * b.y + b.x * a.y) * c;
    }
    m.area /= 2.0;
    m.x /= 6.0;
    m.y /= 6.0;
    m.xx /= 12.0;
    m.yy /= 12.0;
    m.xy /= 24.0;
    return m;
}

Point2 ConvexPolygon::centroid() const {
    const PolygonMoments m = moments(vertices_[0]);
    return vertices_[0] + Point2{m.x / m.area, m.y / m.area};
}

BoundingBox ConvexPolygon::bounds() const {
    BoundingBox b{vertices_[0], vertices_[0]};
    for (const Point2& p : vertices_) {
        b.lo.x = std::min(b.lo.x, p.x);
        b.lo.y = std::min(b.lo.y, p.y);
        b.hi.x = std::max(b.hi.x, p.x);
        b.hi.y = std::max(b.hi.y, p.y);
    }
    return b;
}

double ConvexPolygon::diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        for (std::size_t j = i + 1; j < vertices_.size(); ++j) d = std::max(d, distance(vertices_[i], vertices_[j]));
    }
    return d;
}

bool ConvexPolygon::contains(Point2 q, double tol) const {
    const std::size_t n = vertices_.size();
    bool inside = true;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = vertices_[i];
        const Point2 b = vertices_[(i + 1) % n];
        const Vec2 e = b - a;
        const double len = norm(e);
        if (cross(e, q - a) / len < 0.0) {
            inside = false;
            break;
        }
    }
    if (inside) return true;
    return tol > 0.0 && boundary_distance(q) <= tol;
}

double ConvexPolygon::boundary_distance(Point2 q) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        best = std::min(best, distance(q, segment_closest(vertices_[i], vertices_[(i + 1) % n], q)));
    }
    return best;
}

Point2 ConvexPolygon::closest_point(Point2 q) const {
    if (contains(q)) return q;
    Point2 best = vertices_[0];
    double best_d = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 c = segment_closest(vertices_[i], vertices_[(i + 1) % n], q);
        const double d = distance(q, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

HalfPlane perpendicular_bisector(Point2 pi, Point2 pj) {
    const Vec2 d = pj - pi;
    const double len = norm(d);
    if (!(len > 1e-9)) throw DegenerateGenerators("generators closer than 1e-9");
    const Vec2 n = d / len;
    const Point2 mid = 0.5 * (pi + pj);
    return {n, dot(n, mid)};
}

std::optional<ConvexPolygon> clip_halfplane(const ConvexPolygon& poly, const HalfPlane& h) {
    const auto v = poly.vertices();
    const std::size_t n = v.size();

    // Fast exits for the fully inside / fully outside cases.
    bool all_in = true;
    bool all_out = true;
    double sd_stack[16];
    std::vector<double> sd_heap;
    double* sd = sd_stack;
    if (n > 16) {
        sd_heap.resize(n);
        sd = sd_heap.data();
    }
    for (std::size_t i = 0; i < n; ++i) {
        sd[i] = h.signed_distance(v[i]);
        // Vertices within the merge tolerance of the line count as on it.
        if (std::abs(sd[i]) < ConvexPolygon::kVertexMergeTol) sd[i] = 0.0;
        if (sd[i] > 0.0) all_in = false;
        if (sd[i] < 0.0) all_out = false;
    }
    if (all_in) return poly;
    if (all_out) return std::nullopt;

    std::vector<Point2> out;
    out.reserve(n + 2);
    auto push = [&out](Point2 p) {
        if (out.empty() || distance(out.back(), p) >= ConvexPolygon::kVertexMergeTol) out.push_back(p);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double sa = sd[i];
        const double sb = sd[j];
        if (sa <= 0.0) push(v[i]);
        if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
            const double t = sa / (sa - sb);
            push(v[i] + t * (v[j] - v[i]));
        }
    }
    while (out.size() > 1 && distance(out.front(), out.back()) < ConvexPolygon::kVertexMergeTol) out.pop_back();
    if (out.size() < 3) return std::nullopt;
    if (signed_area2(out) <= 0.0) return std::nullopt;
    return ConvexPolygon(ConvexPolygon::Unchecked{}, std::move(out));
}

namespace {

bool in_circle(const Circle& c, Point2 p) {
    return distance(c.center, p) <= c.radius * (1.0 + 1e-14) + 1e-300;
}

Circle circle_two(Point2 a, Point2 b) {
    const Point2 c = 0.5 * (a + b);
    return {c, std::max(distance(c, a), distance(c, b))};
}

Circle circle_three(Point2 a, Point2 b, Point2 c) {
    const Vec2 ab = b - a;
    const Vec2 ac = c - a;
    const double d = 2.0 * cross(ab, ac);
    const double scale = std::max({norm_sq(ab), norm_sq(ac), norm_sq(c - b)});
    if (std::abs(d) <= 1e-14 * scale) {
        // Collinear: the two farthest points span the circle.
        Circle best = circle_two(a, b);
        for (const Circle& cand : {circle_two(a, c), circle_two(b, c)}) {
            if (cand.radius > best.radius) best = cand;
        }
        return best;
    }
    const double b2 = norm_sq(ab);
    const double c2 = norm_sq(ac);
    const Vec2 u{(ac.y * b2 - ab.y * c2) / d, (ab.x * c2 - ac.x * b2) / d};
    const Point2 center = a + u;
    return {center, std::max({distance(center, a), distance(center, b), distance(center, c)})};
}

}  // namespace

Circle min_enclosing_circle(std::span<const Point2> points) {
    if (points.empty()) return {};
    std::vector<Point2> pts(points.begin(), points.end());
    std::mt19937_64 rng(0x6b636f76ULL);
    std::shuffle(pts.begin(), pts.end(), rng);

    Circle c{pts[0], 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (in_circle(c, pts[i])) continue;
        c = {pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (in_circle(c, pts[j])) continue;
            c = circle_two(pts[i], pts[j]);
            for (std::size_t l = 0; l < j; ++l) {
                if (!in_circle(c, pts[l])) c = circle_three(pts[i], pts[j], pts[l]);
            }
        }
    }
    return c;
}

}  // namespace kcover
