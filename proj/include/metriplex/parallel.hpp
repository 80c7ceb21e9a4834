#pragma once

#include <cstddef>
#include <functional>

namespace metriplex {

/// Worker count used by parallel_for; 1 runs everything inline.
void set_thread_count(int n);
int thread_count();

/// Calls body(begin, end) on disjoint contiguous chunks of [0, n).  Chunk
/// boundaries depend only on n and the thread count, and bodies write to
/// disjoint outputs, so results do not depend on scheduling.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace metriplex
