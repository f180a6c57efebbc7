#include "pacrr/kernels.hpp"

#include <algorithm>

namespace pacrr::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += a[k] * b[k];
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        y[k] += alpha * x[k];
    }
}

void conv_window(const double* window, std::size_t stride, const double* weights,
                 const double* bias, std::size_t size, std::size_t filters, double* out) {
    std::fill(out, out + filters, 0.0);
    for (std::size_t dy = 0; dy < size; ++dy) {
        for (std::size_t dx = 0; dx < size; ++dx) {
            const double x = window[dy * stride + dx];
            const double* w = weights + (dy * size + dx) * filters;
            for (std::size_t f = 0; f < filters; ++f) {
                out[f] += x * w[f];
            }
        }
    }
    for (std::size_t f = 0; f < filters; ++f) {
        out[f] += bias[f];
    }
}

void relu(double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = std::max(x[k], 0.0);
    }
}

}  // namespace pacrr::kernels::scalar
