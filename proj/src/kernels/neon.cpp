#include "pacrr/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>

namespace pacrr::kernels::neon {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; k < n; ++k) {
        sum += a[k] * b[k];
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), a, vld1q_f64(x + k)));
    }
    for (; k < n; ++k) {
        y[k] += alpha * x[k];
    }
}

void conv_window(const double* window, std::size_t stride, const double* weights,
                 const double* bias, std::size_t size, std::size_t filters, double* out) {
    std::size_t f = 0;
    for (; f + 8 <= filters; f += 8) {
        float64x2_t acc0 = vdupq_n_f64(0.0);
        float64x2_t acc1 = vdupq_n_f64(0.0);
        float64x2_t acc2 = vdupq_n_f64(0.0);
        float64x2_t acc3 = vdupq_n_f64(0.0);
        for (std::size_t dy = 0; dy < size; ++dy) {
            for (std::size_t dx = 0; dx < size; ++dx) {
                const float64x2_t x = vdupq_n_f64(window[dy * stride + dx]);
                const double* w = weights + (dy * size + dx) * filters + f;
                acc0 = vfmaq_f64(acc0, x, vld1q_f64(w));
                acc1 = vfmaq_f64(acc1, x, vld1q_f64(w + 2));
                acc2 = vfmaq_f64(acc2, x, vld1q_f64(w + 4));
                acc3 = vfmaq_f64(acc3, x, vld1q_f64(w + 6));
            }
        }
        vst1q_f64(out + f, vaddq_f64(acc0, vld1q_f64(bias + f)));
        vst1q_f64(out + f + 2, vaddq_f64(acc1, vld1q_f64(bias + f + 2)));
        vst1q_f64(out + f + 4, vaddq_f64(acc2, vld1q_f64(bias + f + 4)));
        vst1q_f64(out + f + 6, vaddq_f64(acc3, vld1q_f64(bias + f + 6)));
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
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        vst1q_f64(x + k, vmaxq_f64(vld1q_f64(x + k), zero));
    }
    for (; k < n; ++k) {
        x[k] = std::max(x[k], 0.0);
    }
}

}  // namespace pacrr::kernels::neon
