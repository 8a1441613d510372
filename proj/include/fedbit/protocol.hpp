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

// Federated rounds over encrypted, bit-packed updates.
//
// Round t:
//   1. M of U clients are sampled.
//   2. Each sampled client trains from W^(t-1), quantizes against the range
//      of W^(t-1), packs, encrypts every polynomial under a fresh mask, and
//      uploads one EncryptedUpdate.
//   3. The server, which holds no key, adds the M updates position-wise and
//      broadcasts the sum to all U clients.
//   4. Every client decrypts, unpacks, divides by M, dequantizes and replaces
//      its model.

#ifndef FEDBIT_PROTOCOL_HPP_
#define FEDBIT_PROTOCOL_HPP_

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "fedbit/bfv.hpp"
#include "fedbit/packing.hpp"
#include "fedbit/random.hpp"
#include "fedbit/transport.hpp"
#include "fedbit/wire.hpp"

namespace fedbit {

struct LayerSpec {
  std::string name;
  std::size_t weight_count = 0;
  FieldLayout layout;
};

struct ModelSchema {
  std::vector<LayerSpec> layers;

  std::size_t TotalPolynomials() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += PolynomialCount(l.weight_count, l.layout);
    return total;
  }

  std::size_t TotalWeights() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.weight_count;
    return total;
  }

  // Throws InfeasibleLayout naming the first invalid layer.
  void Validate() const {
    for (const auto& l : layers) {
      const LayoutReport report = ValidateLayout(l.layout);
      if (!report.ok()) throw InfeasibleLayout("layer '" + l.name + "': " + report.Describe());
    }
  }

  void RequireShape(const Model& model, const char* what) const {
    if (model.size() != layers.size()) {
      throw ContractViolation(std::string(what) + ": expected " + std::to_string(layers.size()) +
                              " layers, got " + std::to_string(model.size()));
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (model[i].size() != layers[i].weight_count) {
        throw ContractViolation(std::string(what) + ": layer '" + layers[i].name +
                                "' has " + std::to_string(model[i].size()) +
                                " weights, schema says " +
                                std::to_string(layers[i].weight_count));
      }
    }
  }
};

// Local training step: returns the client's new weights given W^(t-1).
using TrainerHook =
    std::function<Model(std::uint64_t client_id, std::uint64_t round, const Model& global)>;

struct ClientStageTimes {
  double train_us = 0;
  double quantize_us = 0;
  double pack_us = 0;
  double encrypt_us = 0;
};

struct ApplyStageTimes {
  double decrypt_us = 0;
  double unpack_us = 0;
  double dequantize_us = 0;
};

namespace detail {

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double LapMicros() {
    const auto now = std::chrono::steady_clock::now();
    const double us = std::chrono::duration<double, std::micro>(now - start_).count();
    start_ = now;
    return us;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Per-layer (min, max) of a model; every party derives it from W^(t-1).
inline std::vector<LayerRange> DeriveQuantRanges(const Model& model) {
  std::vector<LayerRange> out;
  out.reserve(model.size());
  for (const auto& layer : model) {
    const QuantParams p = QuantParams::FromWeights(layer, 1);
    out.push_back({p.lo, p.hi});
  }
  return out;
}

// Uniform M-of-U sample without replacement, ascending ids.
inline std::vector<std::uint64_t> SelectClients(std::uint64_t total, std::uint64_t sample,
                                                const Seed& seed) {
  if (sample > total) {
    throw ContractViolation("cannot select " + std::to_string(sample) + " of " +
                            std::to_string(total) + " clients");
  }
  std::vector<std::uint64_t> ids(total);
  std::iota(ids.begin(), ids.end(), 0);
  SeededStream stream(seed);
  for (std::uint64_t i = 0; i < sample; ++i) {
    const std::uint64_t j = i + stream.Uniform(total - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(sample);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// The sample for one round, a pure function of the run seed.
inline std::vector<std::uint64_t> SelectionForRound(const Seed& run_seed, std::uint64_t total,
                                                    std::uint64_t sample, std::uint64_t round) {
  return SelectClients(total, sample, DeriveSeed(run_seed, "fedbit/selection", {round}));
}

// Client state: shared secret key, private randomness, current global model.
class Client {
 public:
  Client(std::uint64_t id, RingContextPtr ctx, SecretKey sk, ModelSchema schema,
         const Seed& randomness)
      : id_(id),
        ctx_(std::move(ctx)),
        sk_(std::move(sk)),
        schema_(std::move(schema)),
        randomness_(randomness) {
    schema_.Validate();
  }

  std::uint64_t id() const { return id_; }
  const Model& model() const { return model_; }
  std::uint64_t last_round() const { return last_round_; }
  const std::vector<std::uint64_t>& used_mask_ids() const { return used_mask_ids_; }

  void Initialize(const Model& w0, std::uint64_t round = 0) {
    schema_.RequireShape(w0, "initial model");
    model_ = w0;
    last_round_ = round;
  }

  // Phase 2: train, quantize, pack, encrypt.
  EncryptedUpdate ComputeUpdate(std::uint64_t round, const TrainerHook& trainer,
                                ClientStageTimes* times = nullptr) {
    detail::StageTimer timer;
    ClientStageTimes local;
    const Model trained = trainer(id_, round, model_);
    schema_.RequireShape(trained, "trainer output");
    local.train_us = timer.LapMicros();

    const auto ranges = DeriveQuantRanges(model_);
    std::vector<std::vector<std::uint64_t>> quantized(schema_.layers.size());
    for (std::size_t l = 0; l < schema_.layers.size(); ++l) {
      const QuantParams params{ranges[l].lo, ranges[l].hi, schema_.layers[l].layout.beta};
      quantized[l] = QuantizeLayer(trained[l], params);
    }
    local.quantize_us = timer.LapMicros();

    std::vector<PlaintextPoly> plain;
    plain.reserve(schema_.TotalPolynomials());
    for (std::size_t l = 0; l < schema_.layers.size(); ++l) {
      PackedLayer packed = PackLayer(quantized[l], schema_.layers[l].layout);
      for (auto& p : packed.polys) plain.push_back(std::move(p));
    }
    local.pack_us = timer.LapMicros();

    // Preparation runs as one batch ahead of the per-polynomial encryption.
    std::vector<EncryptionMask> masks;
    masks.reserve(plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
      masks.push_back(PrepareMask(sk_, DeriveSeed(randomness_, "fedbit/mask", {round, i})));
      used_mask_ids_.push_back(masks.back().id());
    }
    EncryptedUpdate update;
    update.client_id = id_;
    update.round = round;
    update.quant_meta = ranges;
    update.cts.reserve(plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
      update.cts.push_back(Encrypt(plain[i], masks[i], round, static_cast<std::uint32_t>(i)));
    }
    local.encrypt_us = timer.LapMicros();
    if (times != nullptr) *times = local;
    return update;
  }

  // Phase 4: decrypt, unpack, average, dequantize; replaces the model.
  const Model& ApplyBroadcast(const AggregateBroadcast& broadcast,
                              ApplyStageTimes* times = nullptr) {
    if (broadcast.round <= last_round_) {
      throw ContractViolation("broadcast for round " + std::to_string(broadcast.round) +
                              " but client is already at round " + std::to_string(last_round_));
    }
    if (broadcast.participants == 0) throw IntegrityError("broadcast has zero participants");
    if (broadcast.cts.size() != schema_.TotalPolynomials()) {
      throw IntegrityError("broadcast carries " + std::to_string(broadcast.cts.size()) +
                           " ciphertexts, schema needs " +
                           std::to_string(schema_.TotalPolynomials()));
    }
    const auto ranges = DeriveQuantRanges(model_);
    if (broadcast.quant_meta != ranges) {
      throw IntegrityError("broadcast quantization ranges disagree with the local model");
    }

    detail::StageTimer timer;
    ApplyStageTimes local;
    std::vector<PlaintextPoly> plain;
    plain.reserve(broadcast.cts.size());
    for (const auto& ct : broadcast.cts) plain.push_back(Decrypt(ct, sk_));
    local.decrypt_us = timer.LapMicros();

    std::vector<std::vector<std::uint64_t>> averaged(schema_.layers.size());
    std::size_t offset = 0;
    for (std::size_t l = 0; l < schema_.layers.size(); ++l) {
      const LayerSpec& spec = schema_.layers[l];
      const std::size_t count = PolynomialCount(spec.weight_count, spec.layout);
      const auto sums = UnpackLayer(std::span(plain).subspan(offset, count), spec.layout,
                                    spec.weight_count);
      averaged[l] = AverageUnpacked(sums, broadcast.participants);
      offset += count;
    }
    local.unpack_us = timer.LapMicros();

    Model next(schema_.layers.size());
    for (std::size_t l = 0; l < schema_.layers.size(); ++l) {
      const QuantParams params{ranges[l].lo, ranges[l].hi, schema_.layers[l].layout.beta};
      next[l] = DequantizeLayer(averaged[l], params);
    }
    local.dequantize_us = timer.LapMicros();

    model_ = std::move(next);
    last_round_ = broadcast.round;
    if (times != nullptr) *times = local;
    return model_;
  }

 private:
  std::uint64_t id_;
  RingContextPtr ctx_;
  SecretKey sk_;
  ModelSchema schema_;
  Seed randomness_;
  Model model_;
  std::uint64_t last_round_ = 0;
  std::vector<std::uint64_t> used_mask_ids_;
};

// Aggregator. Holds only public parameters; it has no key and never sees a
// plaintext.
class Server {
 public:
  Server(RingContextPtr ctx, ModelSchema schema)
      : ctx_(std::move(ctx)), schema_(std::move(schema)) {}

  const RingContextPtr& context() const { return ctx_; }
  const ModelSchema& schema() const { return schema_; }

  AggregateBroadcast Aggregate(std::span<const EncryptedUpdate> updates,
                               std::uint32_t expected) const {
    if (expected == 0) throw ContractViolation("expected participant count must be >= 1");
    const std::uint64_t round = updates.empty() ? 0 : updates.front().round;
    if (updates.size() < expected) {
      throw RoundAbort(round, "received " + std::to_string(updates.size()) + " of " +
                                  std::to_string(expected) + " updates");
    }
    if (updates.size() > expected) {
      throw ContractViolation("received more updates than expected");
    }
    const std::size_t polys = schema_.TotalPolynomials();
    std::vector<std::uint64_t> seen;
    for (const auto& u : updates) {
      if (u.round != round) {
        throw ContractViolation("updates from different rounds (" + std::to_string(u.round) +
                                " vs " + std::to_string(round) + ")");
      }
      if (u.cts.size() != polys) {
        throw ContractViolation("client " + std::to_string(u.client_id) + " sent " +
                                std::to_string(u.cts.size()) + " ciphertexts, expected " +
                                std::to_string(polys));
      }
      if (u.quant_meta != updates.front().quant_meta) {
        throw ContractViolation("client " + std::to_string(u.client_id) +
                                " used inconsistent quantization ranges");
      }
      if (std::find(seen.begin(), seen.end(), u.client_id) != seen.end()) {
        throw ContractViolation("duplicate update from client " + std::to_string(u.client_id));
      }
      seen.push_back(u.client_id);
    }

    AggregateBroadcast out;
    out.round = round;
    out.participants = expected;
    out.quant_meta = updates.front().quant_meta;
    out.cts.reserve(polys);
    std::vector<Ciphertext> column(updates.size());
    for (std::size_t i = 0; i < polys; ++i) {
      Ciphertext sum = updates[0].cts[i];
      for (std::size_t u = 1; u < updates.size(); ++u) {
        const Ciphertext& ct = updates[u].cts[i];
        if (ct.round_tag != sum.round_tag || ct.index != sum.index) {
          throw ContractViolation("ciphertext tags differ at position " + std::to_string(i));
        }
        AddInPlace(sum.c0, ct.c0);
        AddInPlace(sum.c1, ct.c1);
      }
      out.cts.push_back(std::move(sum));
    }
    return out;
  }

 private:
  RingContextPtr ctx_;
  ModelSchema schema_;
};

struct RoundTimings {
  double train_us = 0;
  double quantize_us = 0;
  double pack_us = 0;
  double encrypt_us = 0;
  double aggregate_us = 0;
  double decrypt_us = 0;
  double unpack_us = 0;
  double dequantize_us = 0;

  double Total() const {
    return train_us + quantize_us + pack_us + encrypt_us + aggregate_us + decrypt_us +
           unpack_us + dequantize_us;
  }
};

struct RoundOutcome {
  std::uint64_t round = 0;
  std::vector<std::uint64_t> selected;
  Model model;
  std::map<PartyId, TrafficLedger::Counts> traffic;
  RoundTimings timings;
};

struct FederationConfig {
  std::uint64_t clients = 10;
  std::uint64_t sample = 5;
  Seed seed{};
  std::chrono::milliseconds timeout{60000};
};

// Drives the server and U clients through rounds over a transport.
class Federation {
 public:
  Federation(RingContextPtr ctx, ModelSchema schema, FederationConfig config,
             Transport& transport, TrainerHook trainer)
      : ctx_(std::move(ctx)),
        schema_(std::move(schema)),
        config_(config),
        metered_(transport, ledger_),
        trainer_(std::move(trainer)),
        server_(ctx_, schema_) {
    schema_.Validate();
    if (config_.sample == 0 || config_.sample > config_.clients) {
      throw ContractViolation("need 1 <= sample <= clients");
    }
    for (const auto& l : schema_.layers) {
      if (l.layout.max_clients < config_.sample) {
        throw InfeasibleLayout("layer '" + l.name + "' admits " +
                               std::to_string(l.layout.max_clients) +
                               " summands but rounds aggregate " + std::to_string(config_.sample));
      }
    }
    const SecretKey sk = KeyGen(ctx_, DeriveSeed(config_.seed, "fedbit/shared-key"));
    for (std::uint64_t i = 0; i < config_.clients; ++i) {
      clients_.emplace_back(i, ctx_, sk, schema_,
                            DeriveSeed(config_.seed, "fedbit/client-randomness", {i}));
    }
  }

  const TrafficLedger& ledger() const { return ledger_; }
  const Server& server() const { return server_; }
  const std::vector<Client>& clients() const { return clients_; }
  const ModelSchema& schema() const { return schema_; }

  // Sends W^(0) to every client as a round-0 ModelInit frame.
  void Initialize(const Model& w0) {
    schema_.RequireShape(w0, "initial model");
    metered_.set_round(0);
    for (auto& c : clients_) {
      metered_.Send(kServerId, c.id(), EncodeMessage(ModelInit{0, w0}));
    }
    for (auto& c : clients_) {
      auto env = metered_.Receive(c.id(), config_.timeout);
      if (!env) throw RoundAbort(0, "client " + std::to_string(c.id()) + " got no initial model");
      const Message msg = DecodeMessage(env->frame, ctx_);
      const auto* init = std::get_if<ModelInit>(&msg);
      if (init == nullptr) throw IntegrityError("expected a model init frame");
      c.Initialize(init->weights, init->round);
    }
  }

  std::vector<std::uint64_t> Selection(std::uint64_t round) const {
    return SelectionForRound(config_.seed, config_.clients, config_.sample, round);
  }

  RoundOutcome RunRound(std::uint64_t round) {
    metered_.set_round(round);
    RoundOutcome outcome;
    outcome.round = round;
    outcome.selected = Selection(round);

    // Phase 2, one thread per sampled client.
    std::vector<ClientStageTimes> client_times(outcome.selected.size());
    std::vector<std::string> client_errors(outcome.selected.size());
    {
      std::vector<std::thread> workers;
      for (std::size_t k = 0; k < outcome.selected.size(); ++k) {
        workers.emplace_back([&, k] {
          try {
            Client& c = clients_[outcome.selected[k]];
            EncryptedUpdate update = c.ComputeUpdate(round, trainer_, &client_times[k]);
            metered_.Send(c.id(), kServerId, EncodeMessage(update));
          } catch (const std::exception& e) {
            client_errors[k] = e.what();
          }
        });
      }
      for (auto& w : workers) w.join();
    }

    // Phase 3.
    std::vector<EncryptedUpdate> updates;
    std::string missing;
    for (std::size_t k = 0; k < outcome.selected.size(); ++k) {
      auto env = metered_.Receive(kServerId, config_.timeout);
      if (!env) break;
      Message msg = DecodeMessage(env->frame, ctx_);
      auto* update = std::get_if<EncryptedUpdate>(&msg);
      if (update == nullptr || update->round != round) {
        AbortRound(round, "unexpected frame at server");
        throw RoundAbort(round, "unexpected frame at server");
      }
      updates.push_back(std::move(*update));
    }
    if (updates.size() < outcome.selected.size()) {
      std::string why = "received " + std::to_string(updates.size()) + " of " +
                        std::to_string(outcome.selected.size()) + " updates";
      for (std::size_t k = 0; k < client_errors.size(); ++k) {
        if (!client_errors[k].empty()) {
          why += "; client " + std::to_string(outcome.selected[k]) + ": " + client_errors[k];
        }
      }
      AbortRound(round, why);
      throw RoundAbort(round, why);
    }
    std::sort(updates.begin(), updates.end(),
              [](const EncryptedUpdate& a, const EncryptedUpdate& b) {
                return a.client_id < b.client_id;
              });
    detail::StageTimer agg_timer;
    const AggregateBroadcast broadcast =
        server_.Aggregate(updates, static_cast<std::uint32_t>(config_.sample));
    outcome.timings.aggregate_us = agg_timer.LapMicros();
    const std::vector<std::uint8_t> frame = EncodeMessage(broadcast);
    for (const auto& c : clients_) metered_.Send(kServerId, c.id(), frame);

    // Phase 4, every client.
    std::vector<ApplyStageTimes> apply_times(clients_.size());
    std::vector<std::exception_ptr> apply_errors(clients_.size());
    {
      std::vector<std::thread> workers;
      for (std::size_t i = 0; i < clients_.size(); ++i) {
        workers.emplace_back([&, i] {
          try {
            auto env = metered_.Receive(clients_[i].id(), config_.timeout);
            if (!env) throw RoundAbort(round, "client " + std::to_string(i) + " timed out");
            const Message msg = DecodeMessage(env->frame, ctx_);
            if (const auto* abort = std::get_if<Abort>(&msg)) {
              throw RoundAbort(abort->round, abort->reason);
            }
            const auto* agg = std::get_if<AggregateBroadcast>(&msg);
            if (agg == nullptr) throw IntegrityError("expected an aggregate broadcast");
            clients_[i].ApplyBroadcast(*agg, &apply_times[i]);
          } catch (...) {
            apply_errors[i] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
    }
    for (const auto& e : apply_errors) {
      if (e) std::rethrow_exception(e);
    }
    for (const auto& c : clients_) {
      if (c.model() != clients_.front().model()) {
        throw IntegrityError("clients disagree on the global model after round " +
                             std::to_string(round));
      }
    }

    outcome.model = clients_.front().model();
    outcome.traffic = ledger_.RoundBreakdown(round);
    const double m = static_cast<double>(client_times.size());
    for (const auto& t : client_times) {
      outcome.timings.train_us += t.train_us / m;
      outcome.timings.quantize_us += t.quantize_us / m;
      outcome.timings.pack_us += t.pack_us / m;
      outcome.timings.encrypt_us += t.encrypt_us / m;
    }
    const double u = static_cast<double>(apply_times.size());
    for (const auto& t : apply_times) {
      outcome.timings.decrypt_us += t.decrypt_us / u;
      outcome.timings.unpack_us += t.unpack_us / u;
      outcome.timings.dequantize_us += t.dequantize_us / u;
    }
    return outcome;
  }

 private:
  void AbortRound(std::uint64_t round, const std::string& why) {
    const auto frame = EncodeMessage(Abort{round, why});
    for (const auto& c : clients_) metered_.Send(kServerId, c.id(), frame);
    // Drain so the next round starts from empty inboxes.
    for (const auto& c : clients_) metered_.Receive(c.id(), std::chrono::milliseconds(100));
  }

  RingContextPtr ctx_;
  ModelSchema schema_;
  FederationConfig config_;
  TrafficLedger ledger_;
  MeteredTransport metered_;
  TrainerHook trainer_;
  Server server_;
  std::vector<Client> clients_;
};

}  // namespace fedbit

#endif  // FEDBIT_PROTOCOL_HPP_
