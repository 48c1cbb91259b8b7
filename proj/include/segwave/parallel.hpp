#pragma once

#include <cstdint>

namespace segwave {

// Worker cap for OpenMP regions. Reads SEGWAVE_THREADS once; falls back to
// the OpenMP default. set_max_threads overrides both.
int max_threads();
void set_max_threads(int n);

// Deterministic 64-bit mixing used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace segwave
