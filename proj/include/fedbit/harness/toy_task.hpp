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

// Synthetic two-class task and the local trainers plugged into rounds.

#ifndef FEDBIT_HARNESS_TOY_TASK_HPP_
#define FEDBIT_HARNESS_TOY_TASK_HPP_

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "fedbit/harness/config.hpp"
#include "fedbit/protocol.hpp"
#include "fedbit/random.hpp"

namespace fedbit::harness {

struct Dataset {
  std::size_t features = 0;
  std::vector<double> x;  // row-major, size() * features
  std::vector<int> y;     // 0 or 1

  std::size_t size() const { return y.size(); }
  const double* row(std::size_t i) const { return x.data() + i * features; }
};

struct Evaluation {
  double loss = 0;
  double accuracy = 0;
};

// Gaussian blobs at +-separation/2 along a random unit direction, unit
// variance per feature. Client shards and the test set come from independent
// streams of the run seed.
class ToyTask {
 public:
  explicit ToyTask(const ExperimentConfig& config) : features_(config.features) {
    const Seed root = DeriveSeed(SeedFromInteger(config.seed), "fedbit/toy-task");
    SeededStream dir(DeriveSeed(root, "direction"));
    direction_.resize(features_);
    double norm = 0;
    for (auto& d : direction_) {
      d = dir.Normal();
      norm += d * d;
    }
    norm = std::sqrt(norm);
    for (auto& d : direction_) d /= norm;
    half_gap_ = config.trainer.separation / 2;

    for (std::uint64_t c = 0; c < config.clients; ++c) {
      // Non-IID shards lean 90/10 toward one class, alternating by client.
      const double p1 = config.trainer.iid ? 0.5 : (c % 2 == 0 ? 0.1 : 0.9);
      shards_.push_back(
          Generate(DeriveSeed(root, "shard", {c}), config.trainer.samples_per_client, p1));
    }
    test_ = Generate(DeriveSeed(root, "test"), config.trainer.test_samples, 0.5);
  }

  const Dataset& shard(std::uint64_t client) const { return shards_.at(client); }
  const Dataset& test_set() const { return test_; }
  std::size_t features() const { return features_; }

 private:
  Dataset Generate(const Seed& seed, std::size_t count, double p1) const {
    SeededStream s(seed);
    Dataset d;
    d.features = features_;
    d.x.resize(count * features_);
    d.y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      d.y[i] = s.UniformDouble() < p1 ? 1 : 0;
      const double sign = d.y[i] == 1 ? 1.0 : -1.0;
      for (std::size_t f = 0; f < features_; ++f) {
        d.x[i * features_ + f] = sign * half_gap_ * direction_[f] + s.Normal();
      }
    }
    return d;
  }

  std::size_t features_;
  std::vector<double> direction_;
  double half_gap_ = 0;
  std::vector<Dataset> shards_;
  Dataset test_;
};

namespace detail {

inline double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Weights layout: features coefficients then the bias.
inline double Logit(const std::vector<double>& w, const double* row, std::size_t features) {
  double z = w[features];
  for (std::size_t f = 0; f < features; ++f) z += w[f] * row[f];
  return z;
}

}  // namespace detail

inline Evaluation Evaluate(const std::vector<double>& w, const Dataset& data) {
  Evaluation e;
  if (data.size() == 0) return e;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = detail::Logit(w, data.row(i), data.features);
    // log(1 + exp(-z)) for y = 1, log(1 + exp(z)) for y = 0, overflow-safe.
    const double s = data.y[i] == 1 ? -z : z;
    e.loss += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    if ((z >= 0) == (data.y[i] == 1)) ++correct;
  }
  e.loss /= static_cast<double>(data.size());
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return e;
}

// Full-batch gradient descent on the logistic loss.
inline std::vector<double> TrainLogistic(std::vector<double> w, const Dataset& data,
                                         double learning_rate, int epochs) {
  const std::size_t f = data.features;
  std::vector<double> grad(f + 1);
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (int e = 0; e < epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double err = detail::Sigmoid(detail::Logit(w, data.row(i), f)) - data.y[i];
      const double* row = data.row(i);
      for (std::size_t k = 0; k < f; ++k) grad[k] += err * row[k];
      grad[f] += err;
    }
    for (std::size_t k = 0; k <= f; ++k) w[k] -= learning_rate * grad[k] * inv_n;
  }
  return w;
}

// W^(0): uniform in [-init_scale, init_scale].
inline Model InitialModel(const ExperimentConfig& config) {
  SeededStream s(DeriveSeed(SeedFromInteger(config.seed), "fedbit/initial-model"));
  std::vector<double> w(config.features + 1);
  for (auto& x : w) x = (2 * s.UniformDouble() - 1) * config.init_scale;
  return {w};
}

// Returns a trainer for config.trainer.kind. The task must outlive it.
inline TrainerHook MakeTrainer(const ExperimentConfig& config,
                               std::shared_ptr<const ToyTask> task) {
  const TrainerConfig tc = config.trainer;
  if (tc.kind == "identity") {
    return [](std::uint64_t, std::uint64_t, const Model& global) { return global; };
  }
  if (tc.kind == "perturb") {
    return [](std::uint64_t client, std::uint64_t round, const Model& global) {
      Model out = global;
      for (std::size_t l = 0; l < out.size(); ++l) {
        for (std::size_t i = 0; i < out[l].size(); ++i) {
          out[l][i] += 0.05 * std::sin(static_cast<double>(client * 131 + round * 17 + i));
        }
      }
      return out;
    };
  }
  return [tc, task](std::uint64_t client, std::uint64_t, const Model& global) {
    return Model{TrainLogistic(global.at(0), task->shard(client), tc.learning_rate, tc.epochs)};
  };
}

}  // namespace fedbit::harness

#endif  // FEDBIT_HARNESS_TOY_TASK_HPP_
