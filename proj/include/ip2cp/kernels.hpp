#pragma once

// Data-parallel inner loops shared by the encoder and the embedder.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is chosen once at startup from CPUID and can be
// overridden with set_backend(). Elementwise kernels are bit-identical across
// backends; reductions (dot, sum) differ only by summation order.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace ip2cp::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
    Backend backend;
    const char* name;

    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, float a, const float* x, float* y);
    // sum x[i] * y[i]
    float (*dot)(std::size_t n, const float* x, const float* y);
    // sum x[i]
    float (*sum)(std::size_t n, const float* x);
    // x[i] = x[i] > 0 ? x[i] : 0
    void (*relu)(std::size_t n, float* x);
    // g[i] = act[i] > 0 ? g[i] : 0
    void (*relu_backward)(std::size_t n, const float* act, float* g);
    // out[i] = a[i] - b[i]
    void (*sub)(std::size_t n, const float* a, const float* b, float* out);
    // min/max over x; n > 0
    void (*minmax)(std::size_t n, const float* x, float* lo, float* hi);
    // x[i] = (x[i] - lo) / range
    void (*normalize)(std::size_t n, float* x, float lo, float range);
    // out[i] = in[i] / 255
    void (*bytes_to_unit)(std::size_t n, const std::uint8_t* in, float* out);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// Currently active table.
const KernelTable& kernels();

bool backend_available(Backend b);
// Throws ConfigError if the backend is unavailable on this machine.
void set_backend(Backend b);
Backend best_backend();

Backend parse_backend(std::string_view name);  // "scalar" | "avx2" | "auto"

}  // namespace ip2cp::simd
