#pragma once

#include <cstddef>

namespace semsheaf {

// Selects between the OpenMP kernel and the serial reference loop. Both
// paths write results into per-index slots, so they are bit-identical.
enum class Execution { Serial, Parallel };

template <class Fn>
void for_each_index(Execution exec, std::ptrdiff_t count, Fn&& fn) {
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
}

}  // namespace semsheaf
