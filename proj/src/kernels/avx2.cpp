#include <immintrin.h>

#include "ip2cp/kernels.hpp"

namespace ip2cp::simd {
namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

// Multiply then add (no FMA) so results match the scalar reference bit for bit.
void axpy(std::size_t n, float a, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_add_ps(vy, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

float dot(std::size_t n, const float* x, const float* y) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    float acc = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

float sum(std::size_t n, const float* x) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void relu(std::size_t n, float* x) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        // max_ps(a, b) == (a > b ? a : b), matching the scalar select.
        _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    }
    for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const float* act, float* g) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(act + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(g + i, _mm256_and_ps(mask, _mm256_loadu_ps(g + i)));
    }
    for (; i < n; ++i) g[i] = act[i] > 0.0f ? g[i] : 0.0f;
}

void sub(std::size_t n, const float* a, const float* b, float* out) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void minmax(std::size_t n, const float* x, float* lo, float* hi) {
    float l = x[0], h = x[0];
    std::size_t i = 0;
    if (n >= 8) {
        __m256 vl = _mm256_loadu_ps(x);
        __m256 vh = vl;
        for (i = 8; i + 8 <= n; i += 8) {
            const __m256 v = _mm256_loadu_ps(x + i);
            vl = _mm256_min_ps(vl, v);
            vh = _mm256_max_ps(vh, v);
        }
        alignas(32) float bl[8], bh[8];
        _mm256_store_ps(bl, vl);
        _mm256_store_ps(bh, vh);
        l = bl[0];
        h = bh[0];
        for (int k = 1; k < 8; ++k) {
            l = bl[k] < l ? bl[k] : l;
            h = bh[k] > h ? bh[k] : h;
        }
    }
    for (; i < n; ++i) {
        l = x[i] < l ? x[i] : l;
        h = x[i] > h ? x[i] : h;
    }
    *lo = l;
    *hi = h;
}

void normalize(std::size_t n, float* x, float lo, float range) {
    const __m256 vlo = _mm256_set1_ps(lo);
    const __m256 vr = _mm256_set1_ps(range);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_div_ps(_mm256_sub_ps(_mm256_loadu_ps(x + i), vlo), vr));
    for (; i < n; ++i) x[i] = (x[i] - lo) / range;
}

void bytes_to_unit(std::size_t n, const std::uint8_t* in, float* out) {
    const __m256 scale = _mm256_set1_ps(255.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i bytes = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(in + i));
        const __m256 v = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(bytes));
        _mm256_storeu_ps(out + i, _mm256_div_ps(v, scale));
    }
    for (; i < n; ++i) out[i] = static_cast<float>(in[i]) / 255.0f;
}

}  // namespace

const KernelTable& avx2_kernels() {
    static const KernelTable table{Backend::Avx2, "avx2", axpy, dot, sum, relu, relu_backward,
                                   sub, minmax, normalize, bytes_to_unit};
    return table;
}

}  // namespace ip2cp::simd
