#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace voiceclone {

// Seeded generator whose draws are reproducible across platforms.
//
// std::mt19937_64 output is fixed by the standard, but the standard
// distributions are not, so bounded draws and shuffles are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= threshold) {
                return x % bound;
            }
        }
    }

    // Partial Fisher-Yates: after the call, the first `count` elements are a
    // uniform sample without replacement, in draw order.
    template <typename T>
    void partial_shuffle(std::span<T> items, std::size_t count) {
        const std::size_t n = items.size();
        if (count > n) {
            count = n;
        }
        for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            using std::swap;
            swap(items[i], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::span<T> items) {
        partial_shuffle(items, items.size());
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace voiceclone
