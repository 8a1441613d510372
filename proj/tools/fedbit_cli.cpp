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

// fedbit: experiment runner for encrypted, bit-packed federated averaging.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedbit/harness/config.hpp"
#include "fedbit/harness/experiment.hpp"
#include "fedbit/harness/selftest.hpp"
#include "fedbit/harness/traffic.hpp"

namespace {

using fedbit::harness::ExperimentConfig;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> rounds;
  std::optional<int> beta;
  std::optional<int> delta;
  std::optional<std::uint64_t> clients;
  std::optional<std::uint64_t> sample;
  std::optional<std::string> transport;
  std::optional<std::string> out;
  bool plaintext_control = false;

  void Register(CLI::App* app) {
    app->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "run seed");
    app->add_option("--rounds", rounds, "number of rounds T");
    app->add_option("--beta", beta, "quantization bits");
    app->add_option("--delta", delta, "carry margin bits");
    app->add_option("--clients", clients, "total clients U");
    app->add_option("--sample", sample, "clients per round M");
    app->add_option("--transport", transport, "mem or socket")
        ->check(CLI::IsMember({"mem", "socket"}));
    app->add_option("--out", out, "output directory");
    app->add_flag("--plaintext-control", plaintext_control,
                  "run the crypto-free control pipeline instead");
  }

  ExperimentConfig Resolve() const {
    ExperimentConfig c =
        config_path.empty() ? ExperimentConfig{} : fedbit::harness::LoadConfig(config_path);
    if (seed) c.seed = *seed;
    if (rounds) c.rounds = *rounds;
    if (beta) c.beta = *beta;
    if (delta) c.delta = *delta;
    if (clients) c.clients = *clients;
    if (sample) c.sample = *sample;
    if (transport) c.transport = *transport;
    if (out) c.out = *out;
    if (plaintext_control) c.plaintext_control = true;
    return c;
  }
};

int CmdRun(const Overrides& o) {
  const ExperimentConfig c = o.Resolve();
  const auto result = fedbit::harness::RunExperiment(c);
  const auto& s = result.summary;
  std::cout << "mode: " << s["mode"].get<std::string>() << "\n"
            << "rounds: " << result.records.size() << "\n"
            << "ciphertexts per update: " << result.predicted.ciphertexts << "\n"
            << "traffic: upload " << result.total_traffic.upload << " B, download "
            << result.total_traffic.download << " B\n"
            << "accuracy: " << result.initial_eval.accuracy << " -> "
            << result.final_eval.accuracy << "\n"
            << "wrote " << c.out << "/metrics.csv, summary.json, final_model.json\n";
  if (!c.plaintext_control && !result.traffic_matches_prediction) {
    std::cerr << "error: measured traffic differs from prediction\n";
    return 1;
  }
  return 0;
}

int CmdCapacity(const Overrides& o, const std::vector<int>& betas, std::size_t weights) {
  const ExperimentConfig c = o.Resolve();
  const auto ctx = c.Context();
  std::cout << "N=" << ctx->n() << " t=" << ctx->t() << " log2(q)=" << ctx->log2_q()
            << " U=" << c.sample << "\n";
  const auto rows = fedbit::harness::CapacityTable(*ctx, c.sample, betas, c.delta, weights);
  std::cout << fedbit::harness::FormatCapacityTable(rows, weights);
  return 0;
}

int CmdPredict(const Overrides& o, std::optional<std::size_t> weights) {
  const ExperimentConfig c = o.Resolve();
  c.Validate();
  const auto ctx = c.Context();
  fedbit::ModelSchema schema = c.Schema();
  if (weights) schema.layers = {{"model", *weights, schema.layers.at(0).layout}};
  const auto p = fedbit::harness::PredictTraffic(schema, *ctx);
  const auto& layout = schema.layers.at(0).layout;
  std::cout << "weights: " << schema.TotalWeights() << " (beta=" << layout.beta
            << ", delta=" << layout.delta << ", m=" << layout.slots << ")\n"
            << "ciphertexts per update: " << p.ciphertexts << "\n"
            << "upload per participant per round: " << p.upload << " B\n"
            << "download per client per round: " << p.download << " B\n"
            << "total over " << c.rounds << " rounds: upload " << p.upload * c.sample * c.rounds
            << " B, download " << p.download * c.clients * c.rounds << " B\n";
  return 0;
}

int CmdSelfTest() {
  int failed = 0;
  for (const auto& r : fedbit::harness::RunSelfTest()) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name;
    if (!r.pass) {
      std::cout << ": " << r.detail;
      ++failed;
    }
    std::cout << "\n";
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedbit: encrypted, bit-packed federated averaging"};
  app.require_subcommand(1);

  Overrides run_o, cap_o, pred_o;
  CLI::App* run = app.add_subcommand("run", "run an experiment");
  run_o.Register(run);

  CLI::App* cap = app.add_subcommand("capacity", "print the packing capacity table");
  cap_o.Register(cap);
  std::vector<int> betas = {6, 8, 12};
  std::size_t ref_weights = 61706;
  cap->add_option("--betas", betas, "quantization widths to tabulate")->delimiter(',');
  cap->add_option("--weights", ref_weights, "reference model size");

  CLI::App* pred = app.add_subcommand("predict-traffic", "analytic bytes per round");
  pred_o.Register(pred);
  std::optional<std::size_t> pred_weights;
  pred->add_option("--weights", pred_weights, "single-layer model of this many weights");

  CLI::App* self = app.add_subcommand("selftest", "run the quick invariant suite");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return CmdRun(run_o);
    if (*cap) return CmdCapacity(cap_o, betas, ref_weights);
    if (*pred) return CmdPredict(pred_o, pred_weights);
    if (*self) return CmdSelfTest();
  } catch (const fedbit::RoundAbort& e) {
    std::cerr << "error: round " << e.round() << " aborted: " << e.what() << "\n";
    return 3;
  } catch (const fedbit::InfeasibleLayout& e) {
    std::cerr << "error: infeasible layout: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
