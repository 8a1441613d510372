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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fedbit/harness/config.hpp"
#include "fedbit/harness/experiment.hpp"
#include "fedbit/harness/toy_task.hpp"
#include "fedbit/harness/traffic.hpp"

namespace fedbit::harness {
namespace {

namespace fs = std::filesystem;

ExperimentConfig SmallConfig() {
  ExperimentConfig c;
  c.n = 256;
  c.security = SecurityLevel::kNone;
  c.rounds = 4;
  c.features = 16;
  c.trainer.samples_per_client = 60;
  c.trainer.test_samples = 300;
  c.out = (fs::temp_directory_path() / "fedbit_harness_test").string();
  return c;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Config, DefaultsMatchExperimentSetup) {
  const ExperimentConfig c;
  EXPECT_EQ(c.n, 4096u);
  EXPECT_EQ(c.t, 2281701377u);
  EXPECT_EQ(c.clients, 10u);
  EXPECT_EQ(c.sample, 5u);
  EXPECT_EQ(c.rounds, 100u);
  EXPECT_EQ(c.delta, 3);
  EXPECT_EQ(c.beta, 8);
  EXPECT_NO_THROW(c.Validate());
}

TEST(Config, JsonRoundTripAndErrors) {
  const Json j = Json::parse(R"({"beta": 6, "clients": 4, "sample": 2,
      "model": {"features": 8}, "trainer": {"kind": "identity", "iid": false}})");
  const ExperimentConfig c = ConfigFromJson(j);
  EXPECT_EQ(c.beta, 6);
  EXPECT_EQ(c.clients, 4u);
  EXPECT_EQ(c.features, 8u);
  EXPECT_EQ(c.trainer.kind, "identity");
  EXPECT_FALSE(c.trainer.iid);
  EXPECT_EQ(ConfigToJson(ConfigFromJson(ConfigToJson(c))), ConfigToJson(c));

  EXPECT_THROW(ConfigFromJson(Json::parse(R"({"betta": 6})")), ContractViolation);
  EXPECT_THROW(ConfigFromJson(Json::parse(R"({"beta": "six"})")), ContractViolation);
  EXPECT_THROW(ConfigFromJson(Json::parse(R"({"model": {"layers": 3}})")), ContractViolation);
}

TEST(Config, ValidationNamesTheProblem) {
  ExperimentConfig c;
  c.sample = 11;
  EXPECT_THROW(c.Validate(), ContractViolation);
  c = ExperimentConfig{};
  c.transport = "carrier-pigeon";
  EXPECT_THROW(c.Validate(), ContractViolation);
  c = ExperimentConfig{};
  c.beta = 8;
  c.delta = 1;  // 5 * 255 >= 2^9
  try {
    c.Validate();
    FAIL();
  } catch (const InfeasibleLayout& e) {
    EXPECT_NE(std::string(e.what()).find("carry"), std::string::npos);
  }
}

TEST(ToyTrainer, ZeroLearningRateKeepsWeights) {
  ExperimentConfig c = SmallConfig();
  c.trainer.learning_rate = 0;
  const auto task = std::make_shared<const ToyTask>(c);
  const Model w0 = InitialModel(c);
  EXPECT_EQ(MakeTrainer(c, task)(0, 1, w0), w0);
}

TEST(ToyTrainer, TrainingReducesLocalLoss) {
  const ExperimentConfig c = SmallConfig();
  const auto task = std::make_shared<const ToyTask>(c);
  const Model w0 = InitialModel(c);
  const Model w1 = MakeTrainer(c, task)(3, 1, w0);
  EXPECT_LT(Evaluate(w1[0], task->shard(3)).loss, Evaluate(w0[0], task->shard(3)).loss);
}

TEST(ToyTrainer, NonIidShardsAreSkewed) {
  ExperimentConfig c = SmallConfig();
  c.trainer.iid = false;
  c.trainer.samples_per_client = 500;
  const ToyTask task(c);
  auto ones = [&](std::uint64_t id) {
    const auto& y = task.shard(id).y;
    return std::count(y.begin(), y.end(), 1) / 500.0;
  };
  EXPECT_LT(ones(0), 0.2);
  EXPECT_GT(ones(1), 0.8);
}

TEST(Traffic, ReferenceLayerPrediction) {
  const auto ctx = RingContext::CreateDefault();
  for (auto [beta, m, polys] : {std::tuple{12, 2, 8}, {8, 2, 8}, {6, 3, 6}}) {
    const FieldLayout layout = FieldLayout::Create(beta, 3, 5, 4096, ctx->t());
    EXPECT_EQ(layout.slots, m);
    const ModelSchema schema{{{"ref", 61706, layout}}};
    const TrafficPrediction p = PredictTraffic(schema, *ctx);
    EXPECT_EQ(p.ciphertexts, static_cast<std::size_t>(polys));
    // framing + ids + count + per-ciphertext domain flags + quant metadata
    EXPECT_EQ(p.upload, polys * 2u * 2 * 4096 * 8 + 13 + 20 + polys * 2u + 16);
    EXPECT_EQ(p.download, polys * 2u * 2 * 4096 * 8 + 13 + 16 + polys * 2u + 16);
  }
  const ModelSchema empty{{{"none", 0, FieldLayout::Create(8, 3, 5, 4096, ctx->t())}}};
  EXPECT_EQ(PredictTraffic(empty, *ctx).upload, 13u + 20 + 16);
}

TEST(Traffic, CapacityTableRows) {
  const auto ctx = RingContext::CreateDefault();
  const auto rows = CapacityTable(*ctx, 5, {6, 8, 12, 31}, 3, 61706);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].slots, 3);
  EXPECT_EQ(rows[2].slots, 2);
  EXPECT_LT(rows[0].bytes_per_weight, rows[2].bytes_per_weight);
  EXPECT_FALSE(rows[3].feasible);
  EXPECT_NE(FormatCapacityTable(rows, 61706).find("INFEASIBLE"), std::string::npos);

  for (int beta : {1, 5, 12}) {
    const auto one = CapacityTable(*ctx, 1, {beta}, 0, 100);
    EXPECT_EQ(one[0].carry_margin, 1) << beta;
  }
}

TEST(Experiment, EncryptedEqualsPlaintextControl) {
  ExperimentConfig c = SmallConfig();
  c.rounds = 5;
  const auto enc = RunExperiment(c, {false, true});
  c.plaintext_control = true;
  const auto ctl = RunExperiment(c, {false, true});
  ASSERT_EQ(enc.history.size(), 5u);
  EXPECT_EQ(enc.history, ctl.history);
  for (std::size_t i = 0; i < enc.records.size(); ++i) {
    EXPECT_EQ(enc.records[i].accuracy, ctl.records[i].accuracy);
    EXPECT_EQ(enc.records[i].loss, ctl.records[i].loss);
  }
  EXPECT_TRUE(enc.traffic_matches_prediction);
  EXPECT_EQ(enc.total_traffic.upload, enc.predicted.upload * c.sample * c.rounds);
  EXPECT_EQ(enc.total_traffic.download, enc.predicted.download * c.clients * c.rounds);
}

TEST(Experiment, ZeroRoundsKeepsInitialModel) {
  ExperimentConfig c = SmallConfig();
  c.rounds = 0;
  const auto r = RunExperiment(c);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.final_model, r.initial_model);
  const std::string csv = ReadFile(fs::path(c.out) / "metrics.csv");
  EXPECT_EQ(csv, MetricsCsvHeader() + "\n");
}

TEST(Experiment, DeterministicApartFromTimings) {
  ExperimentConfig c = SmallConfig();
  const auto a = RunExperiment(c, {false, true});
  const auto b = RunExperiment(c, {false, true});
  EXPECT_EQ(a.history, b.history);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].upload_bytes, b.records[i].upload_bytes);
    EXPECT_EQ(a.records[i].loss, b.records[i].loss);
  }
}

TEST(Experiment, SocketTransportAgrees) {
  ExperimentConfig c = SmallConfig();
  c.rounds = 2;
  const auto mem = RunExperiment(c, {false, true});
  c.transport = "socket";
  const auto sock = RunExperiment(c, {false, true});
  EXPECT_EQ(mem.history, sock.history);
  EXPECT_EQ(mem.total_traffic, sock.total_traffic);
}

TEST(Experiment, OutputFilesHaveFixedColumns) {
  const ExperimentConfig c = SmallConfig();
  const auto r = RunExperiment(c);
  std::ifstream csv(fs::path(c.out) / "metrics.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line,
            "round,train_us,quantize_us,pack_us,encrypt_us,aggregate_us,decrypt_us,unpack_us,"
            "dequantize_us,upload_bytes,download_bytes,loss,accuracy");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4);
  const Json summary = Json::parse(ReadFile(fs::path(c.out) / "summary.json"));
  EXPECT_EQ(summary["rounds"], 4);
  EXPECT_TRUE(summary["traffic_matches_prediction"].get<bool>());
  double total = 0;
  for (const char* s : kStageNames) total += summary["mean_stage_percent"][s].get<double>();
  EXPECT_NEAR(total, 100.0, 1e-6);
}

TEST(Experiment, PlaintextFedAvgLearnsSeparableTask) {
  ExperimentConfig c;
  c.rounds = 50;
  c.plaintext_control = true;
  const auto r = RunExperiment(c, {false, false});
  EXPECT_GT(r.final_eval.accuracy, 0.95);
  EXPECT_LT(r.final_eval.loss, r.initial_eval.loss);
}

}  // namespace
}  // namespace fedbit::harness
