#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace entk {

// Worker count: explicit override, else ENTK_THREADS, else 1.
int thread_count();
void set_thread_count(int n);  // n <= 0 restores the environment default

// Runs fn(i) for i in [0, n). Work is split into contiguous static blocks so
// each index is always handled the same way; callers write results per index
// and reduce serially afterwards, which keeps output independent of the
// thread count. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// splitmix64 finaliser; used to derive independent per-item RNG seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace entk
