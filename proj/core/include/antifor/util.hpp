#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace antifor {

std::uint64_t fnv1a64(const std::string& s);

// Stateless mix for deriving independent per-item seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Chunked parallel loop. Output slots must be disjoint per index so results
// are identical for any worker count. workers <= 1 runs inline.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace antifor
