// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sclfish {

// Execution mode for the compute kernels. Every kernel produces bit-identical
// results in both modes and for any thread count: parallel regions only fill
// per-item slots, and all floating-point reductions happen afterwards in a
// fixed serial order.
enum class ExecMode { Serial, OpenMP };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace sclfish
