// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a CPU feature check.

#include "pacrr/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace pacrr::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    }
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) {
        sum += a[k] * b[k];
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    }
    for (; k < n; ++k) {
        y[k] += alpha * x[k];
    }
}

void conv_window(const double* window, std::size_t stride, const double* weights,
                 const double* bias, std::size_t size, std::size_t filters, double* out) {
    std::size_t f = 0;
    // Blocks of 16 filters stay in registers across the whole window.
    for (; f + 16 <= filters; f += 16) {
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        __m256d acc2 = _mm256_setzero_pd();
        __m256d acc3 = _mm256_setzero_pd();
        for (std::size_t dy = 0; dy < size; ++dy) {
            for (std::size_t dx = 0; dx < size; ++dx) {
                const __m256d x = _mm256_broadcast_sd(window + dy * stride + dx);
                const double* w = weights + (dy * size + dx) * filters + f;
                acc0 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w), acc0);
                acc1 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w + 4), acc1);
                acc2 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w + 8), acc2);
                acc3 = _mm256_fmadd_pd(x, _mm256_loadu_pd(w + 12), acc3);
            }
        }
        _mm256_storeu_pd(out + f, _mm256_add_pd(acc0, _mm256_loadu_pd(bias + f)));
        _mm256_storeu_pd(out + f + 4, _mm256_add_pd(acc1, _mm256_loadu_pd(bias + f + 4)));
        _mm256_storeu_pd(out + f + 8, _mm256_add_pd(acc2, _mm256_loadu_pd(bias + f + 8)));
        _mm256_storeu_pd(out + f + 12, _mm256_add_pd(acc3, _mm256_loadu_pd(bias + f + 12)));
    }
    for (; f + 4 <= filters; f += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t dy = 0; dy < size; ++dy) {
            for (std::size_t dx = 0; dx < size; ++dx) {
                const __m256d x = _mm256_broadcast_sd(window + dy * stride + dx);
                acc = _mm256_fmadd_pd(x, _mm256_loadu_pd(weights + (dy * size + dx) * filters + f), acc);
            }
        }
        _mm256_storeu_pd(out + f, _mm256_add_pd(acc, _mm256_loadu_pd(bias + f)));
    }
    for (; f < filters; ++f) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < size; ++dy) {
            for (std::size_t dx = 0; dx < size; ++dx) {
                acc += window[dy * stride + dx] * weights[(dy * size + dx) * filters + f];
            }
        }
        out[f] = acc + bias[f];
    }
}

void relu(double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(x + k, _mm256_max_pd(_mm256_loadu_pd(x + k), zero));
    }
    for (; k < n; ++k) {
        x[k] = std::max(x[k], 0.0);
    }
}

}  // namespace pacrr::kernels::avx2
