#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace herlab {

// std::mt19937_64 output is fully specified by the standard; the distributions
// below come from Boost.Random so draws are identical across standard libraries.
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed of the named sub-stream `stream`/`index` under `parent`.
///
/// Streams are independent of each other and of the order in which they are
/// requested, so an episode's room, timeout and relabel draws can be recomputed
/// in isolation (e.g. by a stage-wise CLI re-run or a different worker).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(parent ^ fnv1a(stream)) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double uniform01(Engine& rng);
double standard_normal(Engine& rng);
double beta_sample(Engine& rng, double alpha, double beta);
std::size_t uniform_index(Engine& rng, std::size_t n);

template <typename T>
void shuffle(std::span<T> items, Engine& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

}  // namespace herlab
