#pragma once

#include "ecgbal/kernels.hpp"

namespace ecgbal::kernels {

namespace scalar {
const Table& table();
}

#if defined(ECGBAL_WITH_AVX2)
namespace avx2 {
const Table& table();
}
#endif

}  // namespace ecgbal::kernels
