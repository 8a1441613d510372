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

#ifndef FEDBIT_RANDOM_HPP_
#define FEDBIT_RANDOM_HPP_

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "fedbit/common.hpp"

namespace fedbit {

// 32-byte seed from which every random stream in the library is derived.
using Seed = std::array<std::uint8_t, 32>;

namespace detail {

inline void EnsureSodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error("libsodium initialization failed");
}

}  // namespace detail

// Seed whose first eight bytes hold `value` little-endian; the rest is zero.
inline Seed SeedFromInteger(std::uint64_t value) {
  Seed seed{};
  for (int i = 0; i < 8; ++i) seed[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return seed;
}

// Domain-separated child seed: BLAKE2b(parent || label || ids).
inline Seed DeriveSeed(const Seed& parent, std::string_view label,
                       std::initializer_list<std::uint64_t> ids = {}) {
  detail::EnsureSodium();
  crypto_generichash_state state;
  crypto_generichash_init(&state, nullptr, 0, crypto_generichash_BYTES);
  crypto_generichash_update(&state, parent.data(), parent.size());
  const std::uint64_t label_len = label.size();
  std::uint8_t word[8];
  for (int i = 0; i < 8; ++i) word[i] = static_cast<std::uint8_t>(label_len >> (8 * i));
  crypto_generichash_update(&state, word, sizeof(word));
  crypto_generichash_update(
      &state, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  for (std::uint64_t id : ids) {
    for (int i = 0; i < 8; ++i) word[i] = static_cast<std::uint8_t>(id >> (8 * i));
    crypto_generichash_update(&state, word, sizeof(word));
  }
  Seed out{};
  crypto_generichash_final(&state, out.data(), out.size());
  return out;
}

// Deterministic ChaCha20 keystream keyed by a Seed. Blocks are generated
// with the nonce set to a running block counter.
class SeededStream {
 public:
  explicit SeededStream(const Seed& seed) : key_(seed) {
    detail::EnsureSodium();
  }

  void Fill(std::uint8_t* out, std::size_t len) {
    while (len > 0) {
      if (pos_ == buffer_.size()) Refill();
      const std::size_t take = std::min(len, buffer_.size() - pos_);
      std::memcpy(out, buffer_.data() + pos_, take);
      pos_ += take;
      out += take;
      len -= take;
    }
  }

  std::uint64_t NextU64() {
    std::uint8_t bytes[8];
    Fill(bytes, sizeof(bytes));
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
  }

  // Uniform in [0, bound) by rejection; bound > 0.
  std::uint64_t Uniform(std::uint64_t bound) {
    if (bound == 0) throw ContractViolation("empty sampling range");
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
    for (;;) {
      const std::uint64_t v = NextU64();
      if (v < limit) return v % bound;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double UniformDouble() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double Normal() {
    double u1 = UniformDouble();
    while (u1 <= 0.0) u1 = UniformDouble();
    const double u2 = UniformDouble();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  void Refill() {
    std::uint8_t nonce[crypto_stream_chacha20_ietf_NONCEBYTES] = {};
    for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>(block_ >> (8 * i));
    crypto_stream_chacha20_ietf(buffer_.data(), buffer_.size(), nonce, key_.data());
    ++block_;
    pos_ = 0;
  }

  Seed key_;
  std::array<std::uint8_t, 4096> buffer_{};
  std::size_t pos_ = 4096;
  std::uint64_t block_ = 0;
};

}  // namespace fedbit

#endif  // FEDBIT_RANDOM_HPP_
