#pragma once

// Internal: per-lane op tables wired up by the dispatcher in vec.cpp.

#include "cqte/vec.hpp"

namespace cqte::vec {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

const Ops& scalar_ops();

#if defined(__x86_64__)
const Ops& avx2_ops();
#endif

} // namespace cqte::vec
