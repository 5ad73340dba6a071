/*
 Copyright 2026 The OCS Authors.
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ocs/detector.hpp"

namespace ocs {

BoxRegressor fit_box_regressor(std::span<const RegressionPair> pairs, double lambda) {
  if (pairs.empty()) throw std::invalid_argument("no regression pairs");
  if (lambda < 0.0) throw std::invalid_argument("ridge lambda must be >= 0");
  const int dim = int(pairs.front().features.size());
  if (pairs.size() < std::size_t(dim) + 1) {
    throw std::invalid_argument("need at least " + std::to_string(dim + 1) + " regression pairs");
  }

  const Eigen::Index n = Eigen::Index(pairs.size());
  Eigen::MatrixXd x(n, dim + 1);
  Eigen::MatrixXd y(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pairs[std::size_t(i)];
    if (int(p.features.size()) != dim) throw std::invalid_argument("ragged regression features");
    for (int j = 0; j < dim; ++j) x(i, j) = p.features[std::size_t(j)];
    x(i, dim) = 1.0;
    const auto t = box_offsets(p.detected, p.truth);
    for (int k = 0; k < 4; ++k) y(i, k) = t[std::size_t(k)];
  }

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().head(dim).array() += lambda;  // bias column unpenalized
  const Eigen::MatrixXd rhs = x.transpose() * y;

  Eigen::MatrixXd w;
  if (lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible()) throw std::runtime_error("singular regression system at lambda = 0");
    w = lu.solve(rhs);
  } else {
    w = gram.ldlt().solve(rhs);
  }

  BoxRegressor reg;
  reg.dim = dim;
  reg.lambda = quantize9(lambda);
  reg.weights.resize(std::size_t(dim + 1) * 4);
  for (int j = 0; j <= dim; ++j) {
    for (int k = 0; k < 4; ++k) reg.weights[std::size_t(j) * 4 + k] = quantize9(w(j, k));
  }
  return reg;
}

}  // namespace ocs
