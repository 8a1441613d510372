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

// Experiment configuration: JSON file plus command-line overrides.
//
// Schema (every key optional, unknown keys rejected):
//
//   {
//     "n": 4096, "limbs": 2, "t": 2281701377, "security": "128" | "none",
//     "beta": 8, "delta": 3,
//     "clients": 10, "sample": 5, "rounds": 100, "seed": 1,
//     "transport": "mem" | "socket", "timeout_ms": 60000,
//     "out": "fedbit-run", "plaintext_control": false,
//     "model":   { "features": 32, "init_scale": 1.0 },
//     "trainer": { "kind": "logistic" | "identity" | "perturb",
//                  "learning_rate": 0.5, "epochs": 5,
//                  "samples_per_client": 200, "test_samples": 2000,
//                  "separation": 5.0, "iid": true }
//   }

#ifndef FEDBIT_HARNESS_CONFIG_HPP_
#define FEDBIT_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fedbit/packing.hpp"
#include "fedbit/protocol.hpp"
#include "fedbit/ring.hpp"

namespace fedbit::harness {

using Json = nlohmann::json;

struct TrainerConfig {
  std::string kind = "logistic";
  double learning_rate = 0.5;
  int epochs = 5;
  std::size_t samples_per_client = 200;
  std::size_t test_samples = 2000;
  double separation = 5.0;
  bool iid = true;
};

struct ExperimentConfig {
  std::size_t n = kDefaultRingDegree;
  std::size_t limbs = kDefaultLimbCount;
  std::uint64_t t = kDefaultPlainModulus;
  SecurityLevel security = SecurityLevel::k128;
  int beta = 8;
  int delta = 3;
  std::uint64_t clients = 10;
  std::uint64_t sample = 5;
  std::uint64_t rounds = 100;
  std::uint64_t seed = 1;
  std::string transport = "mem";
  std::uint64_t timeout_ms = 60000;
  std::string out = "fedbit-run";
  bool plaintext_control = false;
  std::size_t features = 32;
  double init_scale = 1.0;
  TrainerConfig trainer;

  // One layer: `features` weights followed by the bias.
  ModelSchema Schema() const {
    const FieldLayout layout = FieldLayout::Create(beta, delta, sample, n, t);
    return ModelSchema{{{"logistic", features + 1, layout}}};
  }

  RingContextPtr Context() const { return RingContext::CreateDefault(n, limbs, t, security); }

  // Throws ContractViolation or InfeasibleLayout with a readable reason.
  void Validate() const {
    if (clients == 0) throw ContractViolation("clients must be >= 1");
    if (sample == 0 || sample > clients) {
      throw ContractViolation("sample must be in [1, clients]; got sample=" +
                              std::to_string(sample) + " clients=" + std::to_string(clients));
    }
    if (transport != "mem" && transport != "socket") {
      throw ContractViolation("transport must be 'mem' or 'socket', got '" + transport + "'");
    }
    if (trainer.kind != "logistic" && trainer.kind != "identity" && trainer.kind != "perturb") {
      throw ContractViolation("unknown trainer '" + trainer.kind + "'");
    }
    if (features == 0) throw ContractViolation("model.features must be >= 1");
    if (trainer.epochs < 0) throw ContractViolation("trainer.epochs must be >= 0");
    if (trainer.samples_per_client == 0 || trainer.test_samples == 0) {
      throw ContractViolation("trainer sample counts must be >= 1");
    }
    FieldLayout probe;
    probe.beta = beta;
    probe.delta = delta;
    probe.max_clients = sample;
    probe.ring_degree = n;
    probe.plain_modulus = t;
    const LayoutReport report = ValidateLayout(probe);
    if (!report.ok()) throw InfeasibleLayout(report.Describe());
    Schema().Validate();
  }
};

namespace detail {

inline void RejectUnknown(const Json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ContractViolation(std::string("unknown config key '") + key + "' in " + where);
    }
  }
}

template <typename T>
void Read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ContractViolation(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig ConfigFromJson(const Json& j) {
  if (!j.is_object()) throw ContractViolation("config must be a JSON object");
  detail::RejectUnknown(j,
                        {"n", "limbs", "t", "security", "beta", "delta", "clients", "sample",
                         "rounds", "seed", "transport", "timeout_ms", "out", "plaintext_control",
                         "model", "trainer"},
                        "top level");
  ExperimentConfig c;
  detail::Read(j, "n", c.n);
  detail::Read(j, "limbs", c.limbs);
  detail::Read(j, "t", c.t);
  if (j.contains("security")) {
    const std::string s = j.at("security").get<std::string>();
    if (s == "128") {
      c.security = SecurityLevel::k128;
    } else if (s == "none") {
      c.security = SecurityLevel::kNone;
    } else {
      throw ContractViolation("security must be \"128\" or \"none\"");
    }
  }
  detail::Read(j, "beta", c.beta);
  detail::Read(j, "delta", c.delta);
  detail::Read(j, "clients", c.clients);
  detail::Read(j, "sample", c.sample);
  detail::Read(j, "rounds", c.rounds);
  detail::Read(j, "seed", c.seed);
  detail::Read(j, "transport", c.transport);
  detail::Read(j, "timeout_ms", c.timeout_ms);
  detail::Read(j, "out", c.out);
  detail::Read(j, "plaintext_control", c.plaintext_control);
  if (j.contains("model")) {
    const Json& m = j.at("model");
    detail::RejectUnknown(m, {"features", "init_scale"}, "model");
    detail::Read(m, "features", c.features);
    detail::Read(m, "init_scale", c.init_scale);
  }
  if (j.contains("trainer")) {
    const Json& tr = j.at("trainer");
    detail::RejectUnknown(tr,
                          {"kind", "learning_rate", "epochs", "samples_per_client",
                           "test_samples", "separation", "iid"},
                          "trainer");
    detail::Read(tr, "kind", c.trainer.kind);
    detail::Read(tr, "learning_rate", c.trainer.learning_rate);
    detail::Read(tr, "epochs", c.trainer.epochs);
    detail::Read(tr, "samples_per_client", c.trainer.samples_per_client);
    detail::Read(tr, "test_samples", c.trainer.test_samples);
    detail::Read(tr, "separation", c.trainer.separation);
    detail::Read(tr, "iid", c.trainer.iid);
  }
  return c;
}

inline ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ContractViolation("config '" + path + "' is not valid JSON: " + e.what());
  }
  return ConfigFromJson(j);
}

inline Json ConfigToJson(const ExperimentConfig& c) {
  return Json{
      {"n", c.n},
      {"limbs", c.limbs},
      {"t", c.t},
      {"security", c.security == SecurityLevel::k128 ? "128" : "none"},
      {"beta", c.beta},
      {"delta", c.delta},
      {"clients", c.clients},
      {"sample", c.sample},
      {"rounds", c.rounds},
      {"seed", c.seed},
      {"transport", c.transport},
      {"timeout_ms", c.timeout_ms},
      {"out", c.out},
      {"plaintext_control", c.plaintext_control},
      {"model", {{"features", c.features}, {"init_scale", c.init_scale}}},
      {"trainer",
       {{"kind", c.trainer.kind},
        {"learning_rate", c.trainer.learning_rate},
        {"epochs", c.trainer.epochs},
        {"samples_per_client", c.trainer.samples_per_client},
        {"test_samples", c.trainer.test_samples},
        {"separation", c.trainer.separation},
        {"iid", c.trainer.iid}}},
  };
}

}  // namespace fedbit::harness

#endif  // FEDBIT_HARNESS_CONFIG_HPP_
