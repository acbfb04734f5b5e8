#include "kcover/density.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "kcover/error.hpp"
#include "kcover/kernels.hpp"

namespace kcover {

DensityField::DensityField(Kind kind) : kind_(std::move(kind)) {
    if (const auto* u = std::get_if<UniformDensity>(&kind_)) {
        if (!(u->value > 0.0) || !std::isfinite(u->value)) throw SchemaError("uniform density must be positive");
    } else if (const auto* g = std::get_if<GaussianDensity>(&kind_)) {
        const double det = g->sxx * g->syy - g->sxy * g->sxy;
        if (!(g->sxx > 0.0) || !(det > 0.0)) throw SchemaError("gaussian covariance must be positive definite");
        if (!(g->amplitude > 0.0)) throw SchemaError("gaussian amplitude must be positive");
        ixx_ = g->syy / det;
        ixy_ = -g->sxy / det;
        iyy_ = g->sxx / det;
        norm_ = g->amplitude / (2.0 * std::numbers::pi * std::sqrt(det));
    } else {
        const auto& p = std::get<PolynomialDensity>(kind_);
        for (const auto& t : p.terms) {
            if (t.px < 0 || t.py < 0) throw SchemaError("polynomial density exponents must be non-negative");
        }
    }
}

double DensityField::operator()(Point2 q) const {
    switch (kind_.index()) {
        case 0: return std::get<UniformDensity>(kind_).value;
        case 1: {
            const auto& g = std::get<GaussianDensity>(kind_);
            const double dx = q.x - g.mean.x;
            const double dy = q.y - g.mean.y;
            return norm_ * std::exp(-0.5 * (ixx_ * dx * dx + 2.0 * ixy_ * dx * dy + iyy_ * dy * dy));
        }
        default: {
            double s = 0.0;
            for (const auto& t : std::get<PolynomialDensity>(kind_).terms) {
                double m = t.coef;
                for (int i = 0; i < t.px; ++i) m *= q.x;
                for (int i = 0; i < t.py; ++i) m *= q.y;
                s += m;
            }
            return s;
        }
    }
}

double DensityField::uniform_value() const { return std::get<UniformDensity>(kind_).value; }

double DensityField::sampled_minimum(const ConvexPolygon& region, int resolution) const {
    double lo = std::numeric_limits<double>::infinity();
    for (const Point2& v : region.vertices()) lo = std::min(lo, (*this)(v));
    const BoundingBox b = region.bounds();
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            const Point2 q{b.lo.x + (i + 0.5) * b.width() / resolution, b.lo.y + (j + 0.5) * b.height() / resolution};
            if (region.contains(q)) lo = std::min(lo, (*this)(q));
        }
    }
    return lo;
}

namespace {

// Collapsed (conical product) Gauss-Legendre rule on the reference square:
// q(u, v) = a + u (b - a) + u v (c - b), Jacobian u * 2|T|.
struct CollapsedRule {
    std::vector<double> u;
    std::vector<double> uv;
    std::vector<double> w;  // includes the factor u, excludes 2|T|
};

template <std::size_t N>
std::vector<std::pair<double, double>> unit_interval_gauss() {
    using G = boost::math::quadrature::gauss<double, N>;
    std::vector<std::pair<double, double>> out;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.emplace_back(0.5 * (1.0 + x[i]), 0.5 * w[i]);
        if (x[i] != 0.0) out.emplace_back(0.5 * (1.0 - x[i]), 0.5 * w[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

template <std::size_t N>
CollapsedRule make_collapsed_rule() {
    const auto g = unit_interval_gauss<N>();
    CollapsedRule r;
    for (const auto& [u, wu] : g) {
        for (const auto& [v, wv] : g) {
            r.u.push_back(u);
            r.uv.push_back(u * v);
            r.w.push_back(wu * wv * u);
        }
    }
    return r;
}

const CollapsedRule& low_rule() {
    static const CollapsedRule r = make_collapsed_rule<5>();
    return r;
}

const CollapsedRule& high_rule() {
    static const CollapsedRule r = make_collapsed_rule<8>();
    return r;
}

struct Triangle {
    Point2 a, b, c;
    // Vertex a is a singular point of the integrand.
    bool apex = false;
    double twice_area() const { return std::abs(cross(b - a, c - a)); }
};

class TriangleIntegrator {
public:
    TriangleIntegrator(IntegrandRef field, const DensityField& density, std::size_t n_out)
        : field_(field), density_(density), n_out_(n_out), point_vals_(n_out) {}

    // Writes integral estimates into `out` (n_out values) and, when `abs_out` is
    // non-null, the matching integrals of |f| phi.
    void apply(const CollapsedRule& rule, const Triangle& t, std::span<double> out, double* abs_out) {
        const std::size_t m = rule.w.size();
        vals_.resize(m * n_out_);
        wphi_.resize(m);
        const Vec2 ab = t.b - t.a;
        const Vec2 bc = t.c - t.b;
        const double j = t.twice_area();
        for (std::size_t i = 0; i < m; ++i) {
            const Point2 q = t.a + rule.u[i] * ab + rule.uv[i] * bc;
            field_(q, point_vals_);
            for (std::size_t c = 0; c < n_out_; ++c) vals_[c * m + i] = point_vals_[c];
            wphi_[i] = rule.w[i] * j * density_(q);
        }
        for (std::size_t c = 0; c < n_out_; ++c) {
            const std::span<const double> row(vals_.data() + c * m, m);
            out[c] = kernels::dot(row, wphi_);
            if (abs_out != nullptr) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) s += std::abs(row[i]) * std::abs(wphi_[i]);
                abs_out[c] = s;
            }
        }
    }

    std::size_t n_out() const { return n_out_; }

private:
    IntegrandRef field_;
    const DensityField& density_;
    std::size_t n_out_;
    std::vector<double> point_vals_;
    std::vector<double> vals_;
    std::vector<double> wphi_;
};

struct Piece {
    ConvexPolygon poly;
    std::optional<Point2> singular;
};

void split_for_singular(const ConvexPolygon& poly, std::span<const Point2> points, std::vector<Piece>& out) {
    std::vector<Point2> inside;
    const double near = 1e-9 * (1.0 + poly.bounds().diagonal());
    for (Point2 p : points) {
        if (!poly.contains(p, 1e-12)) {
            // A point just outside still spoils the rule; fan from its foot.
            if (poly.boundary_distance(p) > near) continue;
            p = poly.closest_point(p);
        }
        const bool dup = std::any_of(inside.begin(), inside.end(), [&](Point2 s) { return distance(s, p) < 1e-12; });
        if (!dup) inside.push_back(p);
    }
    if (inside.empty()) {
        out.push_back({poly, std::nullopt});
        return;
    }
    if (inside.size() == 1) {
        out.push_back({poly, inside[0]});
        return;
    }
    const HalfPlane h = perpendicular_bisector(inside[0], inside[1]);
    const HalfPlane other{-h.normal, -h.offset};
    if (auto lhs = clip_halfplane(poly, h)) split_for_singular(*lhs, inside, out);
    if (auto rhs = clip_halfplane(poly, other)) split_for_singular(*rhs, inside, out);
}

void fan(const Piece& piece, std::vector<Triangle>& out) {
    const auto v = piece.poly.vertices();
    const std::size_t n = v.size();
    if (piece.singular) {
        const Point2 s = *piece.singular;
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 b = v[i];
            const Point2 c = v[(i + 1) % n];
            const double area2 = cross(b - s, c - s);
            if (area2 <= 1e-14 * distance(b, s) * distance(c, s)) continue;
            out.push_back({s, b, c, true});
        }
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) out.push_back({v[0], v[i], v[i + 1]});
}

}  // namespace

void integrate_many(const ConvexPolygon& poly, IntegrandRef field, const DensityField& density,
                    std::span<double> result, const QuadratureOptions& opts) {
    const std::size_t n_out = result.size();
    std::vector<Piece> pieces;
    split_for_singular(poly, opts.singular_points, pieces);
    std::vector<Triangle> tris;
    for (const Piece& p : pieces) fan(p, tris);
    if (tris.empty()) return;

    TriangleIntegrator integ(field, density, n_out);
    const double poly_area = poly.area();

    std::vector<double> hi(tris.size() * n_out);
    std::vector<double> lo(tris.size() * n_out);
    std::vector<double> abs_total(n_out, 0.0);
    std::vector<double> abs_tri(n_out);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        integ.apply(high_rule(), tris[t], std::span(hi.data() + t * n_out, n_out), abs_tri.data());
        integ.apply(low_rule(), tris[t], std::span(lo.data() + t * n_out, n_out), nullptr);
        for (std::size_t c = 0; c < n_out; ++c) abs_total[c] += abs_tri[c];
    }

    constexpr std::size_t kRefineBudget = 20000;
    std::size_t refined = 0;
    // Accepts when every component's rule disagreement is within its share of
    // the global tolerance, otherwise splits into four and recurses.
    auto accept = [&](const double* h, const double* l, double area_share) {
        for (std::size_t c = 0; c < n_out; ++c) {
            const double tol = opts.rel_tol * abs_total[c] * area_share + 1e-15 * abs_total[c];
            if (std::abs(h[c] - l[c]) > tol) return false;
        }
        return true;
    };
    auto refine = [&](auto&& self, const Triangle& t, int depth, double* acc) -> void {
        if (depth > opts.max_depth) {
            throw QuadratureNotConverged("triangle refinement exceeded depth " + std::to_string(opts.max_depth));
        }
        if (++refined > kRefineBudget) {
            throw QuadratureNotConverged("triangle refinement exceeded " + std::to_string(kRefineBudget) + " splits");
        }
        const Point2 mab = 0.5 * (t.a + t.b);
        const Point2 mbc = 0.5 * (t.b + t.c);
        const Point2 mca = 0.5 * (t.c + t.a);
        std::vector<Triangle> kids;
        if (t.apex) {
            // Self-similar apex children would keep the same angular error,
            // so halve the opening angle as well as the radius.
            const Point2 mid = 0.5 * (mab + mca);
            kids = {{t.a, mab, mid, true}, {t.a, mid, mca, true}, {mab, t.b, mbc},
                    {mab, mbc, mid},      {mid, mbc, t.c},       {mid, t.c, mca}};
        } else {
            kids = {{t.a, mab, mca}, {mab, t.b, mbc}, {mca, mbc, t.c}, {mbc, mca, mab}};
        }
        for (const Triangle& k : kids) {
            std::vector<double> h(n_out), l(n_out);
            integ.apply(high_rule(), k, h, nullptr);
            integ.apply(low_rule(), k, l, nullptr);
            if (accept(h.data(), l.data(), 0.5 * k.twice_area() / poly_area)) {
                for (std::size_t c = 0; c < n_out; ++c) acc[c] += h[c];
            } else {
                self(self, k, depth + 1, acc);
            }
        }
    };

    for (std::size_t t = 0; t < tris.size(); ++t) {
        const double* h = hi.data() + t * n_out;
        const double* l = lo.data() + t * n_out;
        if (accept(h, l, 0.5 * tris[t].twice_area() / poly_area)) {
            for (std::size_t c = 0; c < n_out; ++c) result[c] += h[c];
        } else {
            refine(refine, tris[t], 1, result.data());
        }
    }
}

double integrate(const ConvexPolygon& poly, const std::function<double(Point2)>& field,
                 const DensityField& density, const QuadratureOptions& opts) {
    double out = 0.0;
    auto f = [&field](Point2 q, std::span<double> o) { o[0] = field(q); };
    integrate_many(poly, f, density, std::span(&out, 1), opts);
    return out;
}

double integrate(const ConvexPolygon& poly, const QuadraticField& field, const DensityField& density) {
    if (density.is_uniform()) {
        const PolygonMoments m = poly.moments(field.origin);
        const double s = field.c0 * m.area + field.cx * m.x + field.cy * m.y + field.cxx * m.xx + field.cxy * m.xy +
                         field.cyy * m.yy;
        return density.uniform_value() * s;
    }
    return integrate(poly, std::function<double(Point2)>(field), density);
}

RawMoments raw_moments(const ConvexPolygon& poly, const DensityField& density, Point2 origin) {
    RawMoments r;
    if (density.is_uniform()) {
        const PolygonMoments m = poly.moments(origin);
        const double c = density.uniform_value();
        r.mass = c * m.area;
        r.first = {c * m.x, c * m.y};
        r.second = c * (m.xx + m.yy);
        return r;
    }
    std::array<double, 4> acc{};
    auto f = [origin](Point2 q, std::span<double> o) {
        const double u = q.x - origin.x;
        const double v = q.y - origin.y;
        o[0] = 1.0;
        o[1] = u;
        o[2] = v;
        o[3] = u * u + v * v;
    };
    integrate_many(poly, f, density, acc);
    r.mass = acc[0];
    r.first = {acc[1], acc[2]};
    r.second = acc[3];
    return r;
}

CellMeasures cell_measures(const ConvexPolygon& poly, const DensityField& density) {
    const Point2 o = poly.centroid();
    const RawMoments r = raw_moments(poly, density, o);
    if (!(r.mass >= 1e-14)) throw ZeroMass("cell mass below 1e-14");
    const Vec2 shift = r.first / r.mass;
    CellMeasures m;
    m.mass = r.mass;
    m.centroid = o + shift;
    m.polar_moment = std::max(0.0, r.second - r.mass * norm_sq(shift));
    return m;
}

}  // namespace kcover
