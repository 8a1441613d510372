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

// Analytic traffic and packing capacity.

#ifndef FEDBIT_HARNESS_TRAFFIC_HPP_
#define FEDBIT_HARNESS_TRAFFIC_HPP_

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "fedbit/packing.hpp"
#include "fedbit/protocol.hpp"
#include "fedbit/wire.hpp"

namespace fedbit::harness {

struct TrafficPrediction {
  std::uint64_t upload = 0;    // one participating client, one round
  std::uint64_t download = 0;  // every client, one round
  std::size_t ciphertexts = 0;
};

inline TrafficPrediction PredictTraffic(const ModelSchema& schema, const RingContext& ctx) {
  TrafficPrediction p;
  p.ciphertexts = schema.TotalPolynomials();
  p.upload = EncryptedUpdateWireBytes(p.ciphertexts, schema.layers.size(), ctx);
  p.download = AggregateBroadcastWireBytes(p.ciphertexts, schema.layers.size(), ctx);
  return p;
}

struct CapacityRow {
  int beta = 0;
  int delta = 0;
  bool feasible = false;
  std::string note;
  int slots = 0;
  std::size_t polynomials = 0;
  std::uint64_t upload_bytes = 0;
  double bytes_per_weight = 0;
  double ct_bits_per_weight = 0;  // 2 log2(q) / m, ignoring framing
  double expansion = 0;           // upload bytes over r * beta / 8
  BigInt carry_margin;
  BigInt modulus_margin;
};

inline std::vector<CapacityRow> CapacityTable(const RingContext& ctx, std::uint64_t max_clients,
                                              const std::vector<int>& betas, int delta,
                                              std::size_t reference_weights) {
  std::vector<CapacityRow> rows;
  for (int beta : betas) {
    CapacityRow row;
    row.beta = beta;
    row.delta = delta;
    FieldLayout layout;
    layout.beta = beta;
    layout.delta = delta;
    layout.max_clients = max_clients;
    layout.ring_degree = ctx.n();
    layout.plain_modulus = ctx.t();
    try {
      layout.slots = MaxSlots(beta, delta, max_clients, ctx.t());
      row.feasible = true;
    } catch (const InfeasibleLayout& e) {
      layout.slots = 1;
      row.note = e.what();
    }
    const LayoutReport report = ValidateLayout(layout);
    row.carry_margin = report.carry_margin;
    row.modulus_margin = report.modulus_margin;
    if (row.feasible) {
      row.slots = layout.slots;
      const ModelSchema schema{{{"reference", reference_weights, layout}}};
      row.polynomials = schema.TotalPolynomials();
      row.upload_bytes = PredictTraffic(schema, ctx).upload;
      if (reference_weights > 0) {
        row.bytes_per_weight =
            static_cast<double>(row.upload_bytes) / static_cast<double>(reference_weights);
        row.expansion = static_cast<double>(row.upload_bytes) /
                        (static_cast<double>(reference_weights) * beta / 8.0);
      }
      row.ct_bits_per_weight = 2.0 * ctx.log2_q() / row.slots;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string FormatCapacityTable(const std::vector<CapacityRow>& rows,
                                       std::size_t reference_weights) {
  std::ostringstream out;
  out << "reference model: " << reference_weights << " weights\n";
  out << std::left << std::setw(6) << "beta" << std::setw(6) << "delta" << std::setw(6) << "m"
      << std::setw(6) << "T" << std::setw(14) << "upload_B" << std::setw(12) << "B/weight"
      << std::setw(14) << "ct_bits/w" << std::setw(11) << "expansion" << std::setw(14)
      << "carry_margin" << "modulus_margin\n";
  out << std::fixed;
  for (const auto& r : rows) {
    out << std::setw(6) << r.beta << std::setw(6) << r.delta;
    if (!r.feasible) {
      out << "INFEASIBLE  " << r.note << "\n";
      continue;
    }
    out << std::setw(6) << r.slots << std::setw(6) << r.polynomials << std::setw(14)
        << r.upload_bytes << std::setw(12) << std::setprecision(3) << r.bytes_per_weight
        << std::setw(14) << std::setprecision(2) << r.ct_bits_per_weight << std::setw(11)
        << std::setprecision(2) << r.expansion << std::setw(14) << r.carry_margin
        << r.modulus_margin << "\n";
  }
  return out.str();
}

}  // namespace fedbit::harness

#endif  // FEDBIT_HARNESS_TRAFFIC_HPP_
