// Copyright 2026 The vertiformer Authors
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

#include "training/optimizer.h"

#include <cmath>
#include <stdexcept>

namespace vtf::training {

void TrainConfig::validate() const {
  if (mask_split < 0.0 || mask_split > 1.0) {
    throw std::invalid_argument("train config: mask_split must be in [0, 1]");
  }
  if (lr <= 0.0 || epochs < 0 || batch < 1 || warmup_epochs < 0) {
    throw std::invalid_argument("train config: bad lr/epochs/batch/warmup");
  }
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw std::invalid_argument("train config: val_fraction in [0, 1)");
  }
}

AdamW::AdamW(std::vector<std::pair<std::string, ad::Tensor>> params,
             const TrainConfig& config)
    : config_(config) {
  slots_.reserve(params.size());
  for (auto& [name, tensor] : params) {
    Slot s;
    s.name = name;
    s.param = tensor;
    const std::size_t n = static_cast<std::size_t>(tensor.numel());
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    slots_.push_back(std::move(s));
  }
}

void AdamW::step() {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (Slot& s : slots_) {
    const ad::Tensor g = s.param.grad_tensor();
    if (!g.defined()) continue;  // parameter not reached by this loss
    const auto gv = g.data();
    auto pv = s.param.mutable_data();
    const bool f32 = s.param.dtype() == ad::DType::f32;
    for (std::size_t i = 0; i < gv.size(); ++i) {
      const double gi = gv[i];
      if (!std::isfinite(gi)) {
        throw std::runtime_error("adamw: non-finite gradient in " + s.name);
      }
      s.m[i] = b1 * s.m[i] + (1.0 - b1) * gi;
      s.v[i] = b2 * s.v[i] + (1.0 - b2) * gi * gi;
      const double m_hat = s.m[i] / bc1;
      const double v_hat = s.v[i] / bc2;
      double p = pv[i] - config_.lr * (m_hat / (std::sqrt(v_hat) +
                                                config_.eps_adam) +
                                       config_.weight_decay * pv[i]);
      if (f32) p = static_cast<double>(static_cast<float>(p));
      pv[i] = p;
    }
  }
}

model::Mode curriculum_mode(int epoch, Rng& rng, const TrainConfig& config) {
  if (epoch < config.warmup_epochs) return model::Mode::warmup;
  if (rng.uniform() < config.mask_split) return model::Mode::fkd;
  if (!config.train_bc) return model::Mode::ikd;
  return rng.uniform() < 0.5 ? model::Mode::ikd : model::Mode::bc;
}

}  // namespace vtf::training
