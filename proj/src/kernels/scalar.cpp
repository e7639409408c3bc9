#include "ip2cp/kernels.hpp"

namespace ip2cp::simd {
namespace {

void axpy(std::size_t n, float a, const float* x, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

float dot(std::size_t n, const float* x, const float* y) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

float sum(std::size_t n, const float* x) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void relu(std::size_t n, float* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const float* act, float* g) {
    for (std::size_t i = 0; i < n; ++i) g[i] = act[i] > 0.0f ? g[i] : 0.0f;
}

void sub(std::size_t n, const float* a, const float* b, float* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void minmax(std::size_t n, const float* x, float* lo, float* hi) {
    float l = x[0], h = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        l = x[i] < l ? x[i] : l;
        h = x[i] > h ? x[i] : h;
    }
    *lo = l;
    *hi = h;
}

void normalize(std::size_t n, float* x, float lo, float range) {
    for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] - lo) / range;
}

void bytes_to_unit(std::size_t n, const std::uint8_t* in, float* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(in[i]) / 255.0f;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Backend::Scalar, "scalar", axpy, dot, sum, relu, relu_backward,
                                   sub, minmax, normalize, bytes_to_unit};
    return table;
}

}  // namespace ip2cp::simd
