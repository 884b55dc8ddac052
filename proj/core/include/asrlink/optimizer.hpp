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

#pragma once

#include <cstdint>
#include <vector>

#include "asrlink/tensor.hpp"

namespace asrlink::training {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators, flat across all parameter blocks.
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static OptimizerState for_params(const std::vector<TensorView>& params);
};

// One AdamW update with bias correction and decoupled weight decay:
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta
// Throws TrainingError naming the tensor if a gradient entry is non-finite.
void adamw_step(const std::vector<TensorView>& params, const std::vector<TensorView>& grads,
                OptimizerState& state, const AdamWConfig& config);

}  // namespace asrlink::training
