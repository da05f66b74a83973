/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#ifndef TOPOMAN_RNG_HPP
#define TOPOMAN_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace topoman {

/// Deterministic random stream. All simulator randomness flows from one seed;
/// independent subsystems fork their own stream so that enabling one feature
/// (e.g. payload sealing) never perturbs the draws of another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Bounded draw via 128-bit multiply; avoids the implementation-defined
  /// behaviour of std::uniform_int_distribution.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  void fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t word = next_u64();
      for (int b = 0; b < 8 && i < out.size(); ++b, ++i)
        out[i] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }

  /// Derive an independent stream; splitmix-style mixing keeps forks with
  /// different salts uncorrelated.
  Rng fork(std::uint64_t salt) const {
    std::uint64_t z = seed_ + salt + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return Rng(z ^ (z >> 31));
  }

  /// Fork keyed by a string (e.g. a device id).
  Rng fork(const std::string& tag) const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : tag) h = (h ^ c) * 1099511628211ull;
    return fork(h);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace topoman

#endif
