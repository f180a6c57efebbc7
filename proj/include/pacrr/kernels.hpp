#pragma once

// Dense double-precision inner loops used by the model, in a scalar
// reference form plus SIMD variants. The active variant is chosen once at
// runtime from the CPU's capabilities; PACRR_SIMD=scalar forces the
// reference path.

#include <cstddef>
#include <string_view>

namespace pacrr::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend backend);

struct KernelTable {
    Backend backend;

    // sum_k a[k] * b[k]
    double (*dot)(const double* a, const double* b, std::size_t n);

    // y[k] += alpha * x[k]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

    // For one output cell of a same-padded convolution:
    //   out[f] = bias[f] + sum_{dy,dx} window[dy*stride + dx] * weights[(dy*size + dx)*filters + f]
    // `window` points at the top-left input element of the cell's window.
    void (*conv_window)(const double* window, std::size_t stride, const double* weights,
                        const double* bias, std::size_t size, std::size_t filters, double* out);

    // x[k] = max(x[k], 0)
    void (*relu)(double* x, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void conv_window(const double* window, std::size_t stride, const double* weights,
                 const double* bias, std::size_t size, std::size_t filters, double* out);
void relu(double* x, std::size_t n);
}  // namespace scalar

/// Table for the requested backend, or nullptr when it was not compiled in
/// or the running CPU lacks the instructions.
const KernelTable* table_for(Backend backend);

/// The table selected for this process.
const KernelTable& active();

/// Overrides the process-wide selection. Returns false (and leaves the
/// selection unchanged) if the backend is unavailable.
bool select(Backend backend);

}  // namespace pacrr::kernels
