/*
 * Copyright 2026 The FedBit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDBIT_MODULUS_HPP_
#define FEDBIT_MODULUS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedbit/common.hpp"

namespace fedbit {

using u128 = unsigned __int128;

namespace detail {

inline std::uint64_t MulHi(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>((static_cast<u128>(a) * b) >> 64);
}

// Reference reduction through the compiler's 128-bit division. Used only
// where speed does not matter (primality testing, table setup).
inline std::uint64_t MulModSlow(std::uint64_t a, std::uint64_t b,
                                std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<u128>(a) * b) % m);
}

inline std::uint64_t PowModSlow(std::uint64_t base, std::uint64_t exp,
                                std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) result = MulModSlow(result, base, m);
    base = MulModSlow(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

// Deterministic Miller-Rabin; the base set is exact for all 64-bit inputs.
inline bool IsPrime(std::uint64_t n) {
  if (n < 2) return false;
  constexpr std::array<std::uint64_t, 12> kBases = {2,  3,  5,  7,  11, 13,
                                                    17, 19, 23, 29, 31, 37};
  for (std::uint64_t p : kBases) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : kBases) {
    std::uint64_t x = detail::PowModSlow(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = detail::MulModSlow(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// A word-sized NTT-friendly prime together with its Barrett constant and a
// primitive 2N-th root of unity.
class Modulus {
 public:
  // Largest supported modulus; keeps lazy sums and Barrett/Shoup products
  // inside 64-bit words.
  static constexpr std::uint64_t kMaxValue = (std::uint64_t{1} << 62) - 1;

  // Throws ContractViolation unless value is a prime < 2^62 with
  // value == 1 (mod 2 * ring_degree).
  static Modulus Create(std::uint64_t value, std::size_t ring_degree) {
    if (ring_degree < 2 || (ring_degree & (ring_degree - 1)) != 0) {
      throw ContractViolation("ring degree must be a power of two >= 2");
    }
    if (value < 3 || value > kMaxValue) {
      throw ContractViolation("modulus out of range: " + std::to_string(value));
    }
    if (!IsPrime(value)) {
      throw ContractViolation("modulus is not prime: " + std::to_string(value));
    }
    const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(ring_degree);
    if ((value - 1) % two_n != 0) {
      throw ContractViolation("modulus " + std::to_string(value) +
                              " is not 1 mod 2N");
    }
    Modulus m;
    m.value_ = value;
    // floor(2^128 / value) as (lo, hi).
    const u128 hi_q = (~u128{0}) / value;
    m.barrett_lo_ = static_cast<std::uint64_t>(hi_q);
    m.barrett_hi_ = static_cast<std::uint64_t>(hi_q >> 64);
    m.two_n_root_ = MinimalTwoNRoot(value, two_n);
    return m;
  }

  std::uint64_t value() const { return value_; }
  std::uint64_t barrett_hi() const { return barrett_hi_; }
  std::uint64_t barrett_lo() const { return barrett_lo_; }
  std::uint64_t two_n_root() const { return two_n_root_; }

  // Barrett reduction; requires x < value * 2^64 so the quotient fits a word.
  std::uint64_t Reduce(u128 x) const {
    const std::uint64_t lo = static_cast<std::uint64_t>(x);
    const std::uint64_t hi = static_cast<std::uint64_t>(x >> 64);
    // Top 128 bits of the 256-bit product x * floor(2^128 / value).
    u128 t = static_cast<u128>(lo) * barrett_lo_;
    std::uint64_t carry = static_cast<std::uint64_t>(t >> 64);
    t = static_cast<u128>(lo) * barrett_hi_ + carry;
    std::uint64_t mid = static_cast<std::uint64_t>(t);
    std::uint64_t top = static_cast<std::uint64_t>(t >> 64);
    t = static_cast<u128>(hi) * barrett_lo_ + mid;
    carry = static_cast<std::uint64_t>(t >> 64);
    const std::uint64_t quotient = hi * barrett_hi_ + top + carry;
    std::uint64_t r = lo - quotient * value_;
    while (r >= value_) r -= value_;
    return r;
  }

  std::uint64_t Reduce(std::uint64_t x) const {
    return x < value_ ? x : Reduce(static_cast<u128>(x));
  }

  friend bool operator==(const Modulus& a, const Modulus& b) {
    return a.value_ == b.value_ && a.two_n_root_ == b.two_n_root_;
  }

 private:
  Modulus() = default;

  static std::uint64_t MinimalTwoNRoot(std::uint64_t p, std::uint64_t two_n) {
    const std::uint64_t cofactor = (p - 1) / two_n;
    for (std::uint64_t x = 2; x < p; ++x) {
      const std::uint64_t g = detail::PowModSlow(x, cofactor, p);
      // Order of g divides 2N; it is exactly 2N iff g^N = -1.
      if (detail::PowModSlow(g, two_n / 2, p) != p - 1) continue;
      // Every primitive 2N-th root is an odd power of g; keep the smallest.
      const std::uint64_t g2 = detail::MulModSlow(g, g, p);
      std::uint64_t best = g;
      std::uint64_t cur = g;
      for (std::uint64_t i = 1; i < two_n / 2; ++i) {
        cur = detail::MulModSlow(cur, g2, p);
        if (cur < best) best = cur;
      }
      return best;
    }
    throw ContractViolation("no primitive 2N-th root found");
  }

  std::uint64_t value_ = 0;
  std::uint64_t barrett_lo_ = 0;
  std::uint64_t barrett_hi_ = 0;
  std::uint64_t two_n_root_ = 0;
};

inline std::uint64_t AddMod(std::uint64_t a, std::uint64_t b,
                            const Modulus& m) {
  const std::uint64_t s = a + b;
  return s >= m.value() ? s - m.value() : s;
}

inline std::uint64_t SubMod(std::uint64_t a, std::uint64_t b,
                            const Modulus& m) {
  return a >= b ? a - b : a + m.value() - b;
}

inline std::uint64_t NegMod(std::uint64_t a, const Modulus& m) {
  return a == 0 ? 0 : m.value() - a;
}

// (a * b) mod m for a, b < m.value().
inline std::uint64_t MulMod(std::uint64_t a, std::uint64_t b,
                            const Modulus& m) {
  return m.Reduce(static_cast<u128>(a) * b);
}

inline std::uint64_t PowMod(std::uint64_t base, std::uint64_t exp,
                            const Modulus& m) {
  std::uint64_t result = 1;
  base = m.Reduce(base);
  while (exp != 0) {
    if (exp & 1) result = MulMod(result, base, m);
    base = MulMod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Inverse in the prime field.
inline std::uint64_t InvMod(std::uint64_t a, const Modulus& m) {
  if (m.Reduce(a) == 0) throw ContractViolation("zero has no inverse");
  return PowMod(a, m.value() - 2, m);
}

// Fixed multiplicand with precomputed floor(operand * 2^64 / p), for the
// NTT butterflies.
struct ShoupOperand {
  std::uint64_t operand = 0;
  std::uint64_t quotient = 0;

  ShoupOperand() = default;
  ShoupOperand(std::uint64_t w, const Modulus& m)
      : operand(w),
        quotient(static_cast<std::uint64_t>((static_cast<u128>(w) << 64) /
                                            m.value())) {}

  std::uint64_t MulMod(std::uint64_t x, const Modulus& m) const {
    const std::uint64_t q = detail::MulHi(x, quotient);
    std::uint64_t r = x * operand - q * m.value();
    return r >= m.value() ? r - m.value() : r;
  }
};

// Smallest `count` primes strictly greater than 2^min_bits with
// p == 1 (mod 2 * ring_degree), ascending.
inline std::vector<std::uint64_t> GenerateNttPrimes(std::size_t ring_degree,
                                                    std::size_t count,
                                                    int min_bits) {
  if (min_bits < 2 || min_bits > 61) {
    throw ContractViolation("prime size must be in [2, 61] bits");
  }
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(ring_degree);
  const std::uint64_t floor = std::uint64_t{1} << min_bits;
  std::uint64_t candidate = (floor / two_n + 1) * two_n + 1;
  std::vector<std::uint64_t> primes;
  while (primes.size() < count) {
    if (candidate > Modulus::kMaxValue) {
      throw ContractViolation("ran out of NTT-friendly primes");
    }
    if (IsPrime(candidate)) primes.push_back(candidate);
    candidate += two_n;
  }
  return primes;
}

}  // namespace fedbit

#endif  // FEDBIT_MODULUS_HPP_
