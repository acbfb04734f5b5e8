// Compiled with -mavx2 only (no FMA) so squared distances round exactly like
// the scalar reference.

#include <immintrin.h>

#include "kcover/kernels.hpp"

namespace kcover::kernels::avx2 {

void squared_distances(const double* xs, const double* ys, double px, double py, double* out, std::size_t n) {
    const __m256d vpx = _mm256_set1_pd(px);
    const __m256d vpy = _mm256_set1_pd(py);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vpx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vpy);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
    }
    for (; i < n; ++i) {
        const double dx = xs[i] - px;
        const double dy = ys[i] - py;
        const double xx = dx * dx;
        const double yy = dy * dy;
        out[i] = xx + yy;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    const __m256d acc = _mm256_add_pd(acc0, acc1);
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    double s = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void min_inplace(double* out, const double* v, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // _mm256_min_pd(a, b) returns b when either is NaN; keep the
        // scalar convention (take v only when strictly smaller).
        const __m256d o = _mm256_loadu_pd(out + i);
        const __m256d x = _mm256_loadu_pd(v + i);
        const __m256d lt = _mm256_cmp_pd(x, o, _CMP_LT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(o, x, lt));
    }
    for (; i < n; ++i) out[i] = v[i] < out[i] ? v[i] : out[i];
}

}  // namespace kcover::kernels::avx2
