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

// End-to-end experiment runner: rounds, metrics.csv and summary.json.

#ifndef FEDBIT_HARNESS_EXPERIMENT_HPP_
#define FEDBIT_HARNESS_EXPERIMENT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fedbit/harness/config.hpp"
#include "fedbit/harness/toy_task.hpp"
#include "fedbit/harness/traffic.hpp"
#include "fedbit/protocol.hpp"
#include "fedbit/transport.hpp"

namespace fedbit::harness {

inline constexpr std::array<const char*, 8> kStageNames = {
    "train", "quantize", "pack", "encrypt", "aggregate", "decrypt", "unpack", "dequantize"};

inline std::array<double, 8> StageValues(const RoundTimings& t) {
  return {t.train_us,     t.quantize_us, t.pack_us,   t.encrypt_us,
          t.aggregate_us, t.decrypt_us,  t.unpack_us, t.dequantize_us};
}

inline std::array<double, 8> StagePercentages(const RoundTimings& t) {
  std::array<double, 8> out{};
  const double total = t.Total();
  if (total <= 0) return out;
  const auto v = StageValues(t);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 100.0 * v[i] / total;
  return out;
}

struct MetricsRecord {
  std::uint64_t round = 0;
  RoundTimings timings;
  std::uint64_t upload_bytes = 0;    // per participating client
  std::uint64_t download_bytes = 0;  // per client
  double loss = 0;
  double accuracy = 0;
};

inline std::string MetricsCsvHeader() {
  std::string h = "round";
  for (const char* s : kStageNames) h += std::string(",") + s + "_us";
  return h + ",upload_bytes,download_bytes,loss,accuracy";
}

inline std::string MetricsCsvRow(const MetricsRecord& r) {
  std::ostringstream out;
  out << r.round << std::fixed << std::setprecision(3);
  for (double v : StageValues(r.timings)) out << ',' << v;
  out << ',' << r.upload_bytes << ',' << r.download_bytes << std::setprecision(12) << ','
      << r.loss << ',' << r.accuracy;
  return out.str();
}

struct ExperimentResult {
  std::vector<MetricsRecord> records;
  Model initial_model;
  std::vector<Model> history;  // model after each round, if requested
  Model final_model;
  TrafficPrediction predicted;
  TrafficLedger::Counts total_traffic;  // rounds 1..T only
  bool traffic_matches_prediction = true;
  Evaluation initial_eval;
  Evaluation final_eval;
  Json summary;
};

struct RunOptions {
  bool write_files = true;
  bool keep_history = false;
};

// One crypto-free round: quantize against W^(t-1), integer sum, rounded
// average, dequantize.
inline Model PlaintextControlRound(const Model& previous, const std::vector<std::uint64_t>& selected,
                                   std::uint64_t round, const TrainerHook& trainer,
                                   const ModelSchema& schema, RoundTimings* timings) {
  fedbit::detail::StageTimer timer;
  RoundTimings local;
  const auto ranges = DeriveQuantRanges(previous);
  std::vector<std::vector<std::uint64_t>> sums(schema.layers.size());
  for (std::size_t l = 0; l < schema.layers.size(); ++l) {
    sums[l].assign(schema.layers[l].weight_count, 0);
  }
  const double m = static_cast<double>(selected.size());
  for (std::uint64_t id : selected) {
    timer.LapMicros();
    const Model trained = trainer(id, round, previous);
    schema.RequireShape(trained, "trainer output");
    local.train_us += timer.LapMicros() / m;
    std::vector<std::vector<std::uint64_t>> q(schema.layers.size());
    for (std::size_t l = 0; l < schema.layers.size(); ++l) {
      q[l] = QuantizeLayer(trained[l],
                           QuantParams{ranges[l].lo, ranges[l].hi, schema.layers[l].layout.beta});
    }
    local.quantize_us += timer.LapMicros() / m;
    for (std::size_t l = 0; l < schema.layers.size(); ++l) {
      for (std::size_t i = 0; i < q[l].size(); ++i) sums[l][i] += q[l][i];
    }
    local.aggregate_us += timer.LapMicros();
  }
  timer.LapMicros();
  Model next(schema.layers.size());
  for (std::size_t l = 0; l < schema.layers.size(); ++l) {
    const auto avg = AverageUnpacked(sums[l], selected.size());
    next[l] = DequantizeLayer(avg,
                              QuantParams{ranges[l].lo, ranges[l].hi, schema.layers[l].layout.beta});
  }
  local.dequantize_us = timer.LapMicros();
  if (timings != nullptr) *timings = local;
  return next;
}

namespace detail {

inline Json EvalJson(const Evaluation& e) { return Json{{"loss", e.loss}, {"accuracy", e.accuracy}}; }

inline Json BuildSummary(const ExperimentConfig& config, const ExperimentResult& r) {
  Json stage_pct = Json::object();
  Json stage_us = Json::object();
  std::array<double, 8> pct{};
  std::array<double, 8> us{};
  for (const auto& rec : r.records) {
    const auto p = StagePercentages(rec.timings);
    const auto v = StageValues(rec.timings);
    for (std::size_t i = 0; i < 8; ++i) {
      pct[i] += p[i];
      us[i] += v[i];
    }
  }
  const double rounds = r.records.empty() ? 1.0 : static_cast<double>(r.records.size());
  for (std::size_t i = 0; i < 8; ++i) {
    stage_pct[kStageNames[i]] = pct[i] / rounds;
    stage_us[kStageNames[i]] = us[i] / rounds;
  }
  const std::size_t weights = config.Schema().TotalWeights();
  return Json{
      {"mode", config.plaintext_control ? "plaintext-control" : "encrypted"},
      {"config", ConfigToJson(config)},
      {"rounds", r.records.size()},
      {"weights", weights},
      {"ciphertexts_per_update", r.predicted.ciphertexts},
      {"predicted_traffic_per_round",
       {{"upload_per_participant", r.predicted.upload},
        {"download_per_client", r.predicted.download}}},
      {"total_traffic", {{"upload", r.total_traffic.upload}, {"download", r.total_traffic.download}}},
      {"traffic_matches_prediction", r.traffic_matches_prediction},
      {"expansion_ratio",
       weights == 0 ? 0.0
                    : static_cast<double>(r.predicted.upload) /
                          (static_cast<double>(weights) * config.beta / 8.0)},
      {"mean_stage_percent", stage_pct},
      {"mean_stage_us", stage_us},
      {"initial", EvalJson(r.initial_eval)},
      {"final", EvalJson(r.final_eval)},
  };
}

inline void WriteOutputs(const ExperimentConfig& config, const ExperimentResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out);
  {
    std::ofstream csv(fs::path(config.out) / "metrics.csv");
    csv << MetricsCsvHeader() << '\n';
    for (const auto& rec : r.records) csv << MetricsCsvRow(rec) << '\n';
    if (!csv) throw Error("failed to write metrics.csv in '" + config.out + "'");
  }
  {
    std::ofstream js(fs::path(config.out) / "summary.json");
    js << r.summary.dump(2) << '\n';
    if (!js) throw Error("failed to write summary.json in '" + config.out + "'");
  }
  {
    std::ofstream js(fs::path(config.out) / "final_model.json");
    js << Json{{"layers", r.final_model}}.dump() << '\n';
  }
}

}  // namespace detail

inline ExperimentResult RunExperiment(const ExperimentConfig& config, RunOptions options = {}) {
  config.Validate();
  const RingContextPtr ctx = config.Context();
  const ModelSchema schema = config.Schema();
  const auto task = std::make_shared<const ToyTask>(config);
  const TrainerHook trainer = MakeTrainer(config, task);

  ExperimentResult result;
  result.initial_model = InitialModel(config);
  result.predicted = PredictTraffic(schema, *ctx);
  result.initial_eval = Evaluate(result.initial_model.at(0), task->test_set());
  const Seed run_seed = SeedFromInteger(config.seed);

  auto record_round = [&](std::uint64_t round, const Model& model, const RoundTimings& timings,
                          std::uint64_t upload, std::uint64_t download) {
    MetricsRecord rec;
    rec.round = round;
    rec.timings = timings;
    rec.upload_bytes = upload;
    rec.download_bytes = download;
    const Evaluation e = Evaluate(model.at(0), task->test_set());
    rec.loss = e.loss;
    rec.accuracy = e.accuracy;
    result.records.push_back(rec);
    if (options.keep_history) result.history.push_back(model);
  };

  Model model = result.initial_model;
  if (config.plaintext_control) {
    for (std::uint64_t round = 1; round <= config.rounds; ++round) {
      const auto selected = SelectionForRound(run_seed, config.clients, config.sample, round);
      RoundTimings timings;
      model = PlaintextControlRound(model, selected, round, trainer, schema, &timings);
      record_round(round, model, timings, 0, 0);
    }
  } else {
    std::unique_ptr<Transport> transport;
    if (config.transport == "socket") {
      transport = std::make_unique<SocketTransport>(config.clients);
    } else {
      transport = std::make_unique<InMemoryTransport>(config.clients);
    }
    FederationConfig fc;
    fc.clients = config.clients;
    fc.sample = config.sample;
    fc.seed = run_seed;
    fc.timeout = std::chrono::milliseconds(config.timeout_ms);
    Federation fed(ctx, schema, fc, *transport, trainer);
    fed.Initialize(model);
    for (std::uint64_t round = 1; round <= config.rounds; ++round) {
      const RoundOutcome out = fed.RunRound(round);
      model = out.model;
      std::uint64_t upload = 0;
      std::uint64_t download = 0;
      for (std::uint64_t id = 0; id < config.clients; ++id) {
        const auto c = fed.ledger().ForClient(round, id);
        const bool selected =
            std::find(out.selected.begin(), out.selected.end(), id) != out.selected.end();
        if (c.upload != (selected ? result.predicted.upload : 0) ||
            c.download != result.predicted.download) {
          result.traffic_matches_prediction = false;
        }
        if (selected) upload = c.upload;
        download = c.download;
        result.total_traffic.upload += c.upload;
        result.total_traffic.download += c.download;
      }
      record_round(round, model, out.timings, upload, download);
    }
  }
  result.final_model = model;
  result.final_eval = Evaluate(model.at(0), task->test_set());
  result.summary = detail::BuildSummary(config, result);
  if (options.write_files) detail::WriteOutputs(config, result);
  return result;
}

}  // namespace fedbit::harness

#endif  // FEDBIT_HARNESS_EXPERIMENT_HPP_
