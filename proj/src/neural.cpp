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

#include "lanepilot/neural.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>

namespace lanepilot::neural
{
namespace
{

constexpr const char * kMagic = "lanepilot-mlp";
constexpr int kFormatVersion = 1;

void check_sizes(const std::vector<int> & sizes)
{
  if (sizes.size() < 2) {
    throw NeuralError("an MLP needs at least an input and an output width");
  }
  for (int s : sizes) {
    if (s < 1) {
      throw NeuralError("layer widths must be positive");
    }
  }
}

std::string shortest(double v)
{
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

double read_value(std::istream & in)
{
  std::string token;
  if (!(in >> token)) {
    throw NeuralError("checkpoint truncated");
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw NeuralError("checkpoint holds a non-numeric value '" + token + "'");
  }
  return v;
}

void expect_word(std::istream & in, const std::string & word)
{
  std::string token;
  if (!(in >> token) || token != word) {
    throw NeuralError("checkpoint: expected '" + word + "', found '" + token + "'");
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes))
{
  check_sizes(sizes_);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer;
    layer.weights.resize(fan_out, fan_in);
    layer.bias.resize(fan_out);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weights(r, c) = dist(rng);
      }
    }
    for (int r = 0; r < fan_out; ++r) {
      layer.bias(r) = dist(rng);
    }
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::zeros(std::vector<int> layer_sizes)
{
  check_sizes(layer_sizes);
  Mlp net;
  net.sizes_ = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    net.layers_.push_back({Eigen::MatrixXd::Zero(net.sizes_[l + 1], net.sizes_[l]),
                           Eigen::VectorXd::Zero(net.sizes_[l + 1])});
  }
  return net;
}

std::size_t Mlp::parameter_count() const
{
  std::size_t n = 0;
  for (const DenseLayer & layer : layers_) {
    n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return n;
}

void Mlp::check_input_rows(Eigen::Index rows) const
{
  if (sizes_.empty()) {
    throw NeuralError("network has no layers");
  }
  if (rows != sizes_.front()) {
    throw NeuralError(
      "input width " + std::to_string(rows) + " does not match network input " +
      std::to_string(sizes_.front()));
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd & x) const
{
  check_input_rows(x.size());
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * h + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      z = z.cwiseMax(0.0);
    }
    h = std::move(z);
  }
  return h;
}

ForwardCache Mlp::forward_batch(const Eigen::MatrixXd & inputs) const
{
  check_input_rows(inputs.rows());
  ForwardCache cache;
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache.inputs.push_back(h);
    Eigen::MatrixXd z = layers_[l].weights * h;
    z.colwise() += layers_[l].bias;
    cache.pre_activations.push_back(z);
    h = (l + 1 < layers_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  cache.output = std::move(h);
  return cache;
}

LayerStack Mlp::backward(const ForwardCache & cache, const Eigen::MatrixXd & grad_output) const
{
  if (cache.inputs.size() != layers_.size() || grad_output.rows() != cache.output.rows() ||
      grad_output.cols() != cache.output.cols())
  {
    throw NeuralError("backward: cache or gradient shape mismatch");
  }
  LayerStack grads(layers_.size());
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) {
      // rectifier derivative, taken as 0 at the kink
      delta = delta.cwiseProduct(
        (cache.pre_activations[i].array() > 0.0).cast<double>().matrix());
    }
    grads[i].weights = delta * cache.inputs[i].transpose();
    grads[i].bias = delta.rowwise().sum();
    if (i > 0) {
      delta = layers_[i].weights.transpose() * delta;
    }
  }
  return grads;
}

void Mlp::save(std::ostream & out) const
{
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "layers " << sizes_.size();
  for (int s : sizes_) {
    out << ' ' << s;
  }
  out << '\n';
  for (const DenseLayer & layer : layers_) {
    out << "weights " << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        out << (c ? " " : "") << shortest(layer.weights(r, c));
      }
      out << '\n';
    }
    out << "bias " << layer.bias.size() << '\n';
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      out << (r ? " " : "") << shortest(layer.bias(r));
    }
    out << '\n';
  }
}

void Mlp::save(const std::filesystem::path & path) const
{
  std::ofstream out(path);
  if (!out) {
    throw NeuralError("cannot write checkpoint " + path.string());
  }
  save(out);
}

Mlp Mlp::load(std::istream & in)
{
  expect_word(in, kMagic);
  int version = 0;
  if (!(in >> version) || version != kFormatVersion) {
    throw NeuralError("unsupported checkpoint version");
  }
  expect_word(in, "layers");
  std::size_t n = 0;
  if (!(in >> n) || n < 2 || n > 64) {
    throw NeuralError("checkpoint has an invalid layer count");
  }
  std::vector<int> sizes(n);
  for (int & s : sizes) {
    if (!(in >> s)) {
      throw NeuralError("checkpoint truncated in layer sizes");
    }
  }
  Mlp net = zeros(sizes);
  for (std::size_t l = 0; l + 1 < n; ++l) {
    DenseLayer & layer = net.layers_[l];
    expect_word(in, "weights");
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> rows >> cols) || rows != layer.weights.rows() || cols != layer.weights.cols()) {
      throw NeuralError("checkpoint weight shape does not match layer sizes");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.weights(r, c) = read_value(in);
      }
    }
    expect_word(in, "bias");
    Eigen::Index len = 0;
    if (!(in >> len) || len != layer.bias.size()) {
      throw NeuralError("checkpoint bias shape does not match layer sizes");
    }
    for (Eigen::Index r = 0; r < len; ++r) {
      layer.bias(r) = read_value(in);
    }
  }
  return net;
}

Mlp Mlp::load(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw NeuralError("cannot open checkpoint " + path.string());
  }
  return load(in);
}

LayerStack zeros_like(const LayerStack & params)
{
  LayerStack out;
  out.reserve(params.size());
  for (const DenseLayer & layer : params) {
    out.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                   Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return out;
}

void Adam::update(LayerStack & params, const LayerStack & grads)
{
  if (params.size() != grads.size()) {
    throw NeuralError("Adam: parameter and gradient stacks differ in length");
  }
  if (m_.empty()) {
    m_ = zeros_like(params);
    v_ = zeros_like(params);
  }
  if (m_.size() != params.size()) {
    throw NeuralError("Adam: moment shapes do not match parameters");
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;

  auto apply = [&](auto & param, const auto & grad, auto & m, auto & v) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols() || m.rows() != param.rows() ||
        m.cols() != param.cols())
    {
      throw NeuralError("Adam: shape mismatch");
    }
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    apply(params[l].weights, grads[l].weights, m_[l].weights, v_[l].weights);
    apply(params[l].bias, grads[l].bias, m_[l].bias, v_[l].bias);
  }
}

}  // namespace lanepilot::neural
