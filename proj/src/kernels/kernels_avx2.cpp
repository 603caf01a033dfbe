// AVX2/FMA lane.  Compiled with -mavx2 -mfma; only ever dispatched to after
// a runtime cpuid check, so the rest of the library stays runnable on
// baseline x86-64.

#include "pentropy/kernels.hpp"

#if defined(PENTROPY_HAVE_AVX2_BUILD)

#include <immintrin.h>

#include <cstddef>

namespace pentropy::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double avx2_dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum(acc) + tail;
}

double avx2_sum_squares(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * a[i];
    return hsum(acc) + tail;
}

double avx2_sum_squares_intpow(const double* a, std::size_t n, int m) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        __m256d p = v;
        for (int k = 1; k < m; ++k) p = _mm256_mul_pd(p, v);
        acc = _mm256_fmadd_pd(p, p, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        double p = a[i];
        for (int k = 1; k < m; ++k) p *= a[i];
        tail += p * p;
    }
    return hsum(acc) + tail;
}

double avx2_l1_distance(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        tail += d < 0.0 ? -d : d;
    }
    return hsum(acc) + tail;
}

void avx2_matvec(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        __m256d acc = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4)
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc);
        double tail = 0.0;
        for (; c < cols; ++c) tail += row[c] * x[c];
        y[r] = hsum(acc) + tail;
    }
}

void avx2_accumulate_outer_lower(double* c, const double* x, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        double* row = c + i * d;
        const __m256d xi = _mm256_set1_pd(x[i]);
        std::size_t j = 0;
        const std::size_t stop = i + 1;
        for (; j + 4 <= stop; j += 4) {
            const __m256d cur = _mm256_loadu_pd(row + j);
            _mm256_storeu_pd(row + j, _mm256_fmadd_pd(xi, _mm256_loadu_pd(x + j), cur));
        }
        for (; j < stop; ++j) row[j] += x[i] * x[j];
    }
}

constexpr detail::Table kAvx2Table = {
    avx2_dot,         avx2_sum_squares, avx2_sum_squares_intpow,
    avx2_l1_distance, avx2_matvec,      avx2_accumulate_outer_lower,
};

}  // namespace

namespace detail {
const Table& avx2_table() { return kAvx2Table; }
}  // namespace detail

}  // namespace pentropy::kernels

#endif  // PENTROPY_HAVE_AVX2_BUILD
