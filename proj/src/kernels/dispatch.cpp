#include <atomic>
#include <string>

#include "ip2cp/error.hpp"
#include "ip2cp/kernels.hpp"

namespace ip2cp::simd {

#if defined(IP2CP_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(IP2CP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& table_for(Backend b) {
    if (b == Backend::Avx2) {
        if (const KernelTable* t = avx2_table()) return *t;
        throw ConfigError("AVX2 kernels are not available on this machine");
    }
    return scalar_table();
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{&table_for(best_backend())};
    return table;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(IP2CP_HAVE_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &avx2_kernels() : nullptr;
#else
    return nullptr;
#endif
}

Backend best_backend() { return avx2_table() ? Backend::Avx2 : Backend::Scalar; }

bool backend_available(Backend b) { return b == Backend::Scalar || avx2_table() != nullptr; }

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void set_backend(Backend b) { active().store(&table_for(b), std::memory_order_release); }

Backend parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::Scalar;
    if (name == "avx2") return Backend::Avx2;
    if (name == "auto") return best_backend();
    throw ConfigError("unknown kernel backend '" + std::string(name) + "' (expected scalar|avx2|auto)");
}

}  // namespace ip2cp::simd
