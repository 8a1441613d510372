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

// Quick invariant checks behind `fedbit selftest`. Small trial counts; the
// exhaustive versions live in the test suite.

#ifndef FEDBIT_HARNESS_SELFTEST_HPP_
#define FEDBIT_HARNESS_SELFTEST_HPP_

#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "fedbit/bfv.hpp"
#include "fedbit/harness/experiment.hpp"
#include "fedbit/packing.hpp"
#include "fedbit/random.hpp"
#include "fedbit/ring.hpp"
#include "fedbit/wire.hpp"

namespace fedbit::harness {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline CheckResult RunCheck(const std::string& name, const std::function<std::string()>& body) {
  try {
    const std::string failure = body();
    return {name, failure.empty(), failure};
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

inline std::string CheckPackingGolden() {
  FieldLayout layout;
  layout.beta = 8;
  layout.delta = 2;
  layout.slots = 2;
  layout.max_clients = 3;
  layout.ring_degree = 1;
  const PackedLayer packed = PackLayer(std::vector<std::uint64_t>{0, 9}, layout);
  if (packed.polys.at(0).coeffs.at(0) != 9216) return "pack(0, 9) != 9216";
  const PlaintextPoly agg{{368919}};
  const auto sums = UnpackLayer(std::span(&agg, 1), layout, 2);
  if (sums != std::vector<std::uint64_t>{279, 360}) return "unpack(368919) != (279, 360)";
  if (AverageUnpacked(sums, 3) != std::vector<std::uint64_t>{93, 120}) {
    return "average != (93, 120)";
  }
  return {};
}

inline std::string CheckCapacity() {
  const std::uint64_t t = kDefaultPlainModulus;
  if (MaxSlots(12, 3, 5, t) != 2) return "max_slots(12,3,5) != 2";
  if (MaxSlots(8, 3, 5, t) != 2) return "max_slots(8,3,5) != 2";
  if (MaxSlots(6, 3, 5, t) != 3) return "max_slots(6,3,5) != 3";
  return {};
}

// Ring product against a direct O(N^2) negacyclic convolution.
inline std::string CheckRingProduct() {
  const auto ctx = RingContext::CreateDefault(16, 2, kDefaultPlainModulus, SecurityLevel::kNone);
  SeededStream rng(SeedFromInteger(77));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint64_t> a(16), b(16);
    for (auto& x : a) x = rng.Uniform(1u << 20);
    for (auto& x : b) x = rng.Uniform(1u << 20);
    const Polynomial prod = NttInverse(Multiply(NttForward(Polynomial::FromUnsigned(ctx, a)),
                                                NttForward(Polynomial::FromUnsigned(ctx, b))));
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
      const std::uint64_t p = ctx->limb(l).value();
      for (std::size_t k = 0; k < 16; ++k) {
        unsigned __int128 pos = 0, neg = 0;
        for (std::size_t i = 0; i < 16; ++i) {
          for (std::size_t j = 0; j < 16; ++j) {
            const unsigned __int128 term = static_cast<unsigned __int128>(a[i]) * b[j];
            if (i + j == k) pos += term;
            if (i + j == k + 16) neg += term;
          }
        }
        const std::uint64_t want =
            static_cast<std::uint64_t>(((pos % p) + p - (neg % p)) % p);
        if (prod.limb(l)[k] != want) return "mismatch at trial " + std::to_string(trial);
      }
    }
  }
  return {};
}

inline std::string CheckBfv() {
  const auto ctx = RingContext::CreateDefault();
  const SecretKey sk = KeyGen(ctx, SeedFromInteger(5));
  SeededStream rng(SeedFromInteger(6));
  std::uint64_t mask_id = 0;
  double worst_margin = 1e9;
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Ciphertext> cts;
    PlaintextPoly sum{std::vector<std::uint64_t>(ctx->n(), 0)};
    for (int k = 0; k < 5; ++k) {
      PlaintextPoly m;
      for (std::size_t i = 0; i < ctx->n(); ++i) m.coeffs.push_back(rng.Uniform(ctx->t()));
      EncryptionMask mask = PrepareMask(sk, SeedFromInteger(1000 + mask_id++));
      cts.push_back(Encrypt(m, mask));
      if (Decrypt(cts.back(), sk) != m) return "round-trip failed";
      for (std::size_t i = 0; i < ctx->n(); ++i) {
        sum.coeffs[i] = (sum.coeffs[i] + m.coeffs[i]) % ctx->t();
      }
    }
    const Ciphertext agg = AddCiphertexts(cts);
    if (Decrypt(agg, sk) != sum) return "5-way sum failed";
    worst_margin = std::min(worst_margin, NoiseMargin(agg, sum, sk));
  }
  if (worst_margin <= 40) return "noise margin " + std::to_string(worst_margin) + " <= 40 bits";
  return {};
}

inline std::string CheckWire() {
  const auto ctx = RingContext::CreateDefault(64, 2, kDefaultPlainModulus, SecurityLevel::kNone);
  const SecretKey sk = KeyGen(ctx, SeedFromInteger(8));
  EncryptionMask mask = PrepareMask(sk, SeedFromInteger(9));
  EncryptedUpdate u;
  u.client_id = 3;
  u.round = 2;
  u.cts.push_back(Encrypt(PlaintextPoly{std::vector<std::uint64_t>(64, 7)}, mask, 2, 0));
  u.quant_meta = {{-1.0, 2.0}};
  const auto bytes = EncodeMessage(u);
  if (bytes.size() != EncryptedUpdateWireBytes(1, 1, *ctx)) return "encoded size != formula";
  if (std::get<EncryptedUpdate>(DecodeMessage(bytes, ctx)) != u) return "round-trip differs";
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 1);
  try {
    DecodeMessage(cut, ctx);
    return "truncated frame accepted";
  } catch (const DecodeError&) {
  }
  return {};
}

inline std::string CheckEndToEnd() {
  ExperimentConfig c;
  c.n = 1024;
  c.security = SecurityLevel::kNone;
  c.rounds = 3;
  c.features = 16;
  c.trainer.samples_per_client = 50;
  c.trainer.test_samples = 200;
  const auto enc = RunExperiment(c, {false, true});
  c.plaintext_control = true;
  const auto ctl = RunExperiment(c, {false, true});
  if (enc.history != ctl.history) return "encrypted and plaintext-control models differ";
  if (!enc.traffic_matches_prediction) return "ledger bytes differ from prediction";
  return {};
}

}  // namespace detail

inline std::vector<CheckResult> RunSelfTest() {
  return {
      detail::RunCheck("packing golden vector", detail::CheckPackingGolden),
      detail::RunCheck("packing capacity", detail::CheckCapacity),
      detail::RunCheck("ring product vs schoolbook", detail::CheckRingProduct),
      detail::RunCheck("bfv round-trip, 5-way sum, noise margin", detail::CheckBfv),
      detail::RunCheck("wire round-trip and truncation", detail::CheckWire),
      detail::RunCheck("encrypted run equals plaintext control", detail::CheckEndToEnd),
  };
}

}  // namespace fedbit::harness

#endif  // FEDBIT_HARNESS_SELFTEST_HPP_
