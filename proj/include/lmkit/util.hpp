#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace lmkit::util {

// FNV-1a over UTF-8 bytes. Empty input yields the offset basis.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr std::uint64_t kFnv64Basis = 14695981039346656037ULL;

// Portable uniform double in [0, 1) from a 64-bit engine draw.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Portable bounded draw and Fisher-Yates shuffle; the standard library's
// equivalents are implementation-defined, which would break cross-platform
// reproducibility of seeded runs.
inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t n) {
    return n == 0 ? 0 : rng() % n;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[bounded_uint(rng, i)]);
}

// One independent stream per example, derived from the run seed and the
// example's position, so evaluation results cannot depend on worker count
// or visit order.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t mix = seed;
    mix ^= index + 0x9e3779b97f4a7c15ULL + (mix << 6) + (mix >> 2);
    mix *= 0xff51afd7ed558ccdULL;
    mix ^= mix >> 33;
    return std::mt19937_64(mix);
}

// Index-ordered parallel map: fn(i) runs on worker threads, results land at
// their input index, so output order never depends on worker count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    unsigned count = std::min<unsigned>(workers, std::thread::hardware_concurrency());
    if (count == 0) count = workers;
    for (unsigned t = 1; t < count; ++t) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

}  // namespace lmkit::util
