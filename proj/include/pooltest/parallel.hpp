#pragma once

#include <cstddef>
#include <functional>

namespace pooltest {

// 0 means "use hardware concurrency".
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs body(i) for i in [0, count). Work is distributed over threads but each
// index is handled exactly once, so callers that write into slot i get results
// that do not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace pooltest
