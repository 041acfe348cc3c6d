#pragma once

#include <cstddef>
#include <functional>

namespace bdsoc::parallel {

/// Process-wide worker count used by parallel_for. Results never depend on
/// it: every parallel loop writes to disjoint, index-addressed slots.
void set_workers(unsigned workers);
unsigned workers();

/// Runs body(i) for i in [0, count), split into contiguous chunks.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace bdsoc::parallel
