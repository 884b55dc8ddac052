// Copyright 2026 the asrlink authors
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

#include "asrlink/optimizer.hpp"

#include <cmath>

#include "asrlink/common.hpp"

namespace asrlink::training {

OptimizerState OptimizerState::for_params(const std::vector<TensorView>& params) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.size;
  OptimizerState s;
  s.m.assign(total, 0.0);
  s.v.assign(total, 0.0);
  return s;
}

void adamw_step(const std::vector<TensorView>& params, const std::vector<TensorView>& grads,
                OptimizerState& state, const AdamWConfig& config) {
  if (params.size() != grads.size())
    throw TrainingError("adamw_step: parameter/gradient block count mismatch");
  std::size_t total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size)
      throw TrainingError("adamw_step: size mismatch for tensor '" + params[i].name + "'");
    total += params[i].size;
  }
  if (state.m.size() != total || state.v.size() != total)
    throw TrainingError("adamw_step: optimizer state does not match parameters");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

  std::size_t off = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* theta = params[i].data;
    const double* g = grads[i].data;
    for (std::size_t j = 0; j < params[i].size; ++j) {
      if (!std::isfinite(g[j]))
        throw TrainingError("non-finite gradient in tensor '" + grads[i].name + "'");
      double& m = state.m[off + j];
      double& v = state.v[off + j];
      m = config.beta1 * m + (1.0 - config.beta1) * g[j];
      v = config.beta2 * v + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      theta[j] -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.epsilon)) +
                  config.learning_rate * config.weight_decay * theta[j];
    }
    off += params[i].size;
  }
}

}  // namespace asrlink::training
