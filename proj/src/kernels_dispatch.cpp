#include "frkd/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace frkd::kernels {

#if defined(FRKD_HAVE_AVX2_TU)
namespace detail {
const Ops* avx2_table();
}
const Ops* avx2() {
  static const Ops* table = detail::avx2_table();
  return table;
}
#else
const Ops* avx2() { return nullptr; }
#endif

const Ops& active() {
  static const Ops& chosen = []() -> const Ops& {
    if (const char* env = std::getenv("FRKD_KERNEL")) {
      if (std::strcmp(env, "scalar") == 0) return scalar();
      if (std::strcmp(env, "avx2") == 0 && avx2() != nullptr) return *avx2();
    }
    if (const Ops* o = avx2()) return *o;
    return scalar();
  }();
  return chosen;
}

}  // namespace frkd::kernels
