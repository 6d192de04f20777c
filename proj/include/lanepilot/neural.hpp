// Copyright 2026 The lanepilot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LANEPILOT__NEURAL_HPP_
#define LANEPILOT__NEURAL_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace lanepilot::neural
{

/// Fully connected layer: y = W x + b, W is (outputs x inputs).
struct DenseLayer
{
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  bool operator==(const DenseLayer & other) const
  {
    return weights == other.weights && bias == other.bias;
  }
};

/// Parameter-shaped bundle; also used for gradients and Adam moments.
using LayerStack = std::vector<DenseLayer>;

class NeuralError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Activations kept by forward_batch for the backward pass. Columns are samples.
struct ForwardCache
{
  std::vector<Eigen::MatrixXd> inputs;          // input to each layer
  std::vector<Eigen::MatrixXd> pre_activations; // W x + b of each layer
  Eigen::MatrixXd output;
};

/// Multilayer perceptron with rectifier hidden layers and an identity output layer.
class Mlp
{
public:
  Mlp() = default;

  /// Uniform fan-in initialisation in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

  /// All parameters zero.
  static Mlp zeros(std::vector<int> layer_sizes);

  const std::vector<int> & layer_sizes() const { return sizes_; }
  int input_width() const { return sizes_.front(); }
  int output_width() const { return sizes_.back(); }

  Eigen::VectorXd forward(const Eigen::VectorXd & x) const;
  ForwardCache forward_batch(const Eigen::MatrixXd & inputs) const;

  /// Reverse-mode gradients of sum over samples of (output column . grad_output column).
  LayerStack backward(const ForwardCache & cache, const Eigen::MatrixXd & grad_output) const;

  LayerStack & layers() { return layers_; }
  const LayerStack & layers() const { return layers_; }
  std::size_t parameter_count() const;

  bool operator==(const Mlp & other) const
  {
    return sizes_ == other.sizes_ && layers_ == other.layers_;
  }

  /// Text checkpoint. Layout:
  ///   lanepilot-mlp 1
  ///   layers <n> <size_0> ... <size_n-1>
  ///   then per layer: "weights <rows> <cols>", one row per line, "bias <n>", one line
  /// Values use shortest round-trip formatting, so save/load is bit exact.
  void save(std::ostream & out) const;
  void save(const std::filesystem::path & path) const;
  static Mlp load(std::istream & in);
  static Mlp load(const std::filesystem::path & path);

private:
  void check_input_rows(Eigen::Index rows) const;

  std::vector<int> sizes_;
  LayerStack layers_;
};

/// Zero stack with the same shapes as the network's parameters.
LayerStack zeros_like(const LayerStack & params);

struct AdamConfig
{
  double learning_rate{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
};

/// Bias-corrected Adam. Moments are created lazily to match the first parameter stack seen.
class Adam
{
public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void update(LayerStack & params, const LayerStack & grads);

  std::int64_t step_count() const { return steps_; }
  const AdamConfig & config() const { return config_; }
  const LayerStack & first_moment() const { return m_; }
  const LayerStack & second_moment() const { return v_; }

private:
  AdamConfig config_;
  LayerStack m_;
  LayerStack v_;
  std::int64_t steps_{0};
};

}  // namespace lanepilot::neural

#endif  // LANEPILOT__NEURAL_HPP_
