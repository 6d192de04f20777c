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

#ifndef ORACLES_HPP_
#define ORACLES_HPP_

#include "lanepilot/neural.hpp"
#include "lanepilot/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace lanepilot::testing
{

/// Central differences of f(theta) = sum_j q(x_j) . g_j against Mlp::backward.
/// Returns the largest |a - n| / max(|a|, |n|), with exact agreement counted as zero.
inline double gradient_check_max_relative_error(neural::Mlp net, const Eigen::MatrixXd & inputs,
                                                const Eigen::MatrixXd & grad_output,
                                                double h = 1e-5)
{
  auto objective = [&](const neural::Mlp & m) {
    double f = 0.0;
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
      f += m.forward(inputs.col(c)).dot(grad_output.col(c));
    }
    return f;
  };
  const neural::LayerStack analytic = net.backward(net.forward_batch(inputs), grad_output);
  double worst = 0.0;
  auto compare = [&](double a, double n) {
    const double denom = std::max(std::abs(a), std::abs(n));
    if (denom > 0.0) {
      worst = std::max(worst, std::abs(a - n) / std::max(denom, 1e-10));
    }
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    Eigen::MatrixXd & w = net.layers()[l].weights;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double keep = w(i, j);
        w(i, j) = keep + h;
        const double fp = objective(net);
        w(i, j) = keep - h;
        const double fm = objective(net);
        w(i, j) = keep;
        compare(analytic[l].weights(i, j), (fp - fm) / (2.0 * h));
      }
    }
    Eigen::VectorXd & b = net.layers()[l].bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double keep = b(i);
      b(i) = keep + h;
      const double fp = objective(net);
      b(i) = keep - h;
      const double fm = objective(net);
      b(i) = keep;
      compare(analytic[l].bias(i), (fp - fm) / (2.0 * h));
    }
  }
  return worst;
}

struct OracleHit
{
  std::size_t index{0};
  double distance_sq{0.0};
};

/// Full scan, stable sort by squared distance then insertion index.
inline std::vector<OracleHit> brute_force_knn(const std::vector<std::vector<double>> & keys,
                                              std::span<const double> q, std::size_t k)
{
  std::vector<OracleHit> all;
  all.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    double d = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) {
      const double diff = keys[i][c] - q[c];
      d += diff * diff;
    }
    all.push_back({i, d});
  }
  std::stable_sort(all.begin(), all.end(), [](const OracleHit & a, const OracleHit & b) {
    return a.distance_sq < b.distance_sq;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace lanepilot::testing

#endif  // ORACLES_HPP_
