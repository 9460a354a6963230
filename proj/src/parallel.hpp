#pragma once

// Index-parallel loop used by the OpenMP kernels. Each index owns its output
// slot, so results do not depend on the thread count. An exception thrown by
// any index is rethrown after the loop; when several indices fail, the one
// with the smallest index wins so error reporting is deterministic too.

#include <cstddef>
#include <exception>
#include <limits>

#include "tvcn/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tvcn::detail {

template <class F>
void for_each_index(std::size_t count, ExecPolicy policy, F&& body) {
  if (policy == ExecPolicy::serial || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  const auto signed_count = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < signed_count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(tvcn_for_each_index)
      {
        if (static_cast<std::size_t>(i) < error_index) {
          error_index = static_cast<std::size_t>(i);
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace tvcn::detail
