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

// Packed updates from three clients are summed under encryption and decrypted
// back to their average.

#include <cstdint>
#include <iostream>
#include <vector>

#include "fedbit/bfv.hpp"
#include "fedbit/packing.hpp"

int main() {
  using namespace fedbit;
  const RingContextPtr ctx = RingContext::CreateDefault();
  const SecretKey sk = KeyGen(ctx, SeedFromInteger(42));
  const FieldLayout layout = FieldLayout::Create(8, 3, 3, ctx->n(), ctx->t());
  std::cout << "slots per coefficient: " << layout.slots << "\n";

  const std::vector<std::vector<double>> clients = {
      {0.10, -0.50, 0.90}, {0.20, -0.40, 0.70}, {0.00, -0.60, 1.00}};
  const QuantParams params{-1.0, 1.0, layout.beta};

  std::vector<Ciphertext> cts;
  std::uint64_t mask_seed = 1;
  for (const auto& w : clients) {
    const PackedLayer packed = PackLayer(QuantizeLayer(w, params), layout);
    EncryptionMask mask = PrepareMask(sk, SeedFromInteger(mask_seed++));
    cts.push_back(Encrypt(packed.polys.at(0), mask));
  }

  const Ciphertext sum = AddCiphertexts(cts);
  const PlaintextPoly plain = Decrypt(sum, sk);
  const auto sums = UnpackLayer(std::span(&plain, 1), layout, 3);
  const auto avg = DequantizeLayer(AverageUnpacked(sums, clients.size()), params);
  std::cout << "noise margin: " << NoiseMargin(sum, plain, sk) << " bits\naverage:";
  for (double x : avg) std::cout << ' ' << x;
  std::cout << "\n";
  return 0;
}
