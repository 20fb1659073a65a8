#pragma once

#include <cstddef>
#include <functional>

namespace qlscm {

/// Process-wide cap on worker threads (0 = hardware concurrency).
/// The CLI sets this from QLSCM_THREADS; tests set it directly.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs fn(i) for i in [0, n). Work items must be independent; results must
/// be written to pre-allocated slots indexed by i so the outcome does not
/// depend on scheduling. Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qlscm
