#include <cstdlib>
#include <string_view>

#include "vqr/simd.hpp"

namespace vqr::simd {

#if defined(VQR_HAVE_AVX2)
const KernelTable& avx2_table_impl() noexcept;
#endif

const KernelTable* avx2_kernels() noexcept {
#if defined(VQR_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("VQR_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    if (const auto* t = avx2_kernels()) return t;
    return &scalar_kernels();
  }();
  return *chosen;
}

}  // namespace vqr::simd
