#include "pacrr/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace pacrr::kernels {

#if defined(PACRR_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void conv_window(const double* window, std::size_t stride, const double* weights,
                 const double* bias, std::size_t size, std::size_t filters, double* out);
void relu(double* x, std::size_t n);
}  // namespace avx2
#endif

#if defined(PACRR_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void conv_window(const double* window, std::size_t stride, const double* weights,
                 const double* bias, std::size_t size, std::size_t filters, double* out);
void relu(double* x, std::size_t n);
}  // namespace neon
#endif

namespace {

constexpr KernelTable kScalarTable{Backend::Scalar, scalar::dot, scalar::axpy,
                                   scalar::conv_window, scalar::relu};

#if defined(PACRR_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Backend::Avx2, avx2::dot, avx2::axpy, avx2::conv_window,
                                 avx2::relu};

bool cpu_has_avx2() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if defined(PACRR_HAVE_NEON)
constexpr KernelTable kNeonTable{Backend::Neon, neon::dot, neon::axpy, neon::conv_window,
                                 neon::relu};
#endif

const KernelTable* initial_table() {
    if (const char* env = std::getenv("PACRR_SIMD"); env != nullptr && std::string(env) == "scalar") {
        return &kScalarTable;
    }
    if (const KernelTable* t = table_for(Backend::Avx2)) {
        return t;
    }
    if (const KernelTable* t = table_for(Backend::Neon)) {
        return t;
    }
    return &kScalarTable;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::Scalar:
            return "scalar";
        case Backend::Avx2:
            return "avx2";
        case Backend::Neon:
            return "neon";
    }
    return "unknown";
}

const KernelTable* table_for(Backend backend) {
    switch (backend) {
        case Backend::Scalar:
            return &kScalarTable;
        case Backend::Avx2:
#if defined(PACRR_HAVE_AVX2)
            if (cpu_has_avx2()) {
                return &kAvx2Table;
            }
#endif
            return nullptr;
        case Backend::Neon:
#if defined(PACRR_HAVE_NEON)
            // Advanced SIMD is mandatory on AArch64.
            return &kNeonTable;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable& active() {
    return *current().load(std::memory_order_acquire);
}

bool select(Backend backend) {
    const KernelTable* t = table_for(backend);
    if (t == nullptr) {
        return false;
    }
    current().store(t, std::memory_order_release);
    return true;
}

}  // namespace pacrr::kernels
