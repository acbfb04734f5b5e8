#pragma once

#include <functional>
#include <span>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "kcover/geometry.hpp"

namespace kcover {

struct UniformDensity {
    double value = 1.0;
};

// amplitude * N(mean, covariance)
struct GaussianDensity {
    Point2 mean;
    double sxx = 1.0;
    double sxy = 0.0;
    double syy = 1.0;
    double amplitude = 1.0;
};

// sum_t coef_t * x^px_t * y^py_t
struct PolynomialDensity {
    struct Term {
        int px = 0;
        int py = 0;
        double coef = 0.0;
    };
    std::vector<Term> terms;
};

class DensityField {
public:
    using Kind = std::variant<UniformDensity, GaussianDensity, PolynomialDensity>;

    DensityField() : kind_(UniformDensity{}) {}
    // Throws SchemaError for a non-positive uniform value or a covariance that
    // is not positive definite.
    explicit DensityField(Kind kind);

    static DensityField uniform(double value = 1.0) { return DensityField(UniformDensity{value}); }

    double operator()(Point2 q) const;
    const Kind& kind() const { return kind_; }
    bool is_uniform() const { return std::holds_alternative<UniformDensity>(kind_); }
    double uniform_value() const;

    // Minimum of the density over a sample grid plus the vertices of `region`.
    double sampled_minimum(const ConvexPolygon& region, int resolution = 64) const;

private:
    Kind kind_;
    // Cached inverse covariance and normalizer for the Gaussian kind.
    double ixx_ = 0.0, ixy_ = 0.0, iyy_ = 0.0, norm_ = 0.0;
};

// c0 + cx*u + cy*v + cxx*u^2 + cxy*u*v + cyy*v^2 with (u, v) = q - origin.
struct QuadraticField {
    Point2 origin;
    double c0 = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double cxx = 0.0;
    double cxy = 0.0;
    double cyy = 0.0;

    double operator()(Point2 q) const {
        const double u = q.x - origin.x;
        const double v = q.y - origin.y;
        return c0 + cx * u + cy * v + cxx * u * u + cxy * u * v + cyy * v * v;
    }

    // ||q - a||^2
    static QuadraticField squared_distance_to(Point2 a) { return {a, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0}; }
};

struct CellMeasures {
    double mass = 0.0;
    Point2 centroid;
    double polar_moment = 0.0;
};

struct QuadratureOptions {
    // Points where the integrand is only Lipschitz (cone points of |q - p|).
    // Triangles are fanned from these so the collapsed rule sees a smooth
    // integrand.
    std::span<const Point2> singular_points;
    double rel_tol = 1e-8;
    int max_depth = 48;
};

// Non-owning callable reference for vector-valued integrands:
// fn(q, out) writes out.size() values at q.
class IntegrandRef {
public:
    template <class F>
        requires(!std::is_same_v<std::remove_cvref_t<F>, IntegrandRef>)
    IntegrandRef(F&& f)  // NOLINT(google-explicit-constructor)
        : obj_(const_cast<void*>(static_cast<const void*>(std::addressof(f)))),
          call_([](void* o, Point2 q, std::span<double> out) {
              (*static_cast<std::remove_reference_t<F>*>(o))(q, out);
          }) {}

    void operator()(Point2 q, std::span<double> out) const { call_(obj_, q, out); }

private:
    void* obj_;
    void (*call_)(void*, Point2, std::span<double>);
};

// result[c] += integral over poly of field_c(q) * density(q) for every
// component c. Throws QuadratureNotConverged when refinement exceeds
// opts.max_depth or a fixed budget of triangle splits.
void integrate_many(const ConvexPolygon& poly, IntegrandRef field, const DensityField& density,
                    std::span<double> result, const QuadratureOptions& opts = {});

double integrate(const ConvexPolygon& poly, const std::function<double(Point2)>& field,
                 const DensityField& density, const QuadratureOptions& opts = {});

// Closed form (polygon moments) for a uniform density; quadrature otherwise.
double integrate(const ConvexPolygon& poly, const QuadraticField& field, const DensityField& density);

// Mass, centroid and polar moment about the centroid. Throws ZeroMass when the
// mass is below 1e-14.
CellMeasures cell_measures(const ConvexPolygon& poly, const DensityField& density);

// Raw first/second moments of density over poly relative to `origin`:
// {mass, int (q-o) phi, int |q-o|^2 phi}. Mass may be zero.
struct RawMoments {
    double mass = 0.0;
    Vec2 first;
    double second = 0.0;
};
RawMoments raw_moments(const ConvexPolygon& poly, const DensityField& density, Point2 origin);

}  // namespace kcover
