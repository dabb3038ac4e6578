#include <cstdlib>
#include <string_view>

#include "mmrd/numerics/kernels.hpp"

namespace mmrd::kernels {

#if defined(MMRD_HAVE_AVX2_TU)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2() {
#if defined(MMRD_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("MMRD_KERNELS");
    const std::string_view want = env ? env : "";
    if (want == "scalar") return &scalar();
    if (const KernelTable* t = avx2()) return t;
    return &scalar();
  }();
  return *chosen;
}

}  // namespace mmrd::kernels
