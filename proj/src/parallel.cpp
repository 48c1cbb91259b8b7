#include "segwave/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace segwave {

namespace {

int threads_from_env() {
    const char* raw = std::getenv("SEGWAVE_THREADS");
    if (raw == nullptr) {
        return omp_get_max_threads();
    }
    try {
        const int n = std::stoi(raw);
        return n >= 1 ? n : omp_get_max_threads();
    } catch (...) {
        return omp_get_max_threads();
    }
}

std::atomic<int> override_threads{0};

}  // namespace

int max_threads() {
    const int forced = override_threads.load(std::memory_order_relaxed);
    if (forced > 0) {
        return forced;
    }
    static const int from_env = threads_from_env();
    return from_env;
}

void set_max_threads(int n) { override_threads.store(n > 0 ? n : 0, std::memory_order_relaxed); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer applied over the three words
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ a);
    h = mix(h ^ b);
    return h;
}

}  // namespace segwave
