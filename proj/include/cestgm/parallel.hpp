#ifndef CESTGM_PARALLEL_HPP
#define CESTGM_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace cestgm {

// Worker count: CESTGM_THREADS when set, else hardware concurrency.
int thread_budget();

// Runs fn(begin, end) over disjoint chunks of [0, n) on thread_budget()
// threads. Falls back to a single call when n is small.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace cestgm

#endif
