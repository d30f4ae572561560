#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace deltagossip {

// Engine seeded from a base seed plus stream coordinates (node id, epoch, ...).
// Distinct coordinate tuples yield independent streams.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * stream.size());
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto v : stream) push(v);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace deltagossip
