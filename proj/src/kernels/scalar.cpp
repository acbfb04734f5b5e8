#include "kcover/kernels.hpp"

namespace kcover::kernels::scalar {

void squared_distances(const double* xs, const double* ys, double px, double py, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - px;
        const double dy = ys[i] - py;
        const double xx = dx * dx;
        const double yy = dy * dy;
        out[i] = xx + yy;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void min_inplace(double* out, const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = v[i] < out[i] ? v[i] : out[i];
}

}  // namespace kcover::kernels::scalar
