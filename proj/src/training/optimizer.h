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

#ifndef VTF_TRAINING_OPTIMIZER_H_
#define VTF_TRAINING_OPTIMIZER_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adcore/tensor.h"
#include "core/rng.h"
#include "model/params.h"

namespace vtf::training {

struct TrainConfig {
  double lr = 5e-4;
  double weight_decay = 0.08;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  int epochs = 50;        // full-size reference setting: 200
  int batch = 64;         // full-size reference setting: 512
  int warmup_epochs = 5;  // no masking for the first few epochs
  double mask_split = 0.5;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  int stride = 1;
  bool train_bc = false;  // behavior cloning is zero-shot unless enabled

  void validate() const;
};

// Decoupled-weight-decay Adam over a fixed list of named leaf parameters:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
// Moments are kept in 64-bit regardless of parameter dtype. Parameters whose
// gradient is unset this step are skipped entirely.
class AdamW {
 public:
  AdamW(std::vector<std::pair<std::string, ad::Tensor>> params,
        const TrainConfig& config);

  // Applies one update from the gradients currently stored on the
  // parameters. Throws if any gradient entry is non-finite, naming the
  // parameter.
  void step();

  std::int64_t steps_taken() const { return t_; }

 private:
  struct Slot {
    std::string name;
    ad::Tensor param;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots_;
  TrainConfig config_;
  std::int64_t t_ = 0;
};

// Task mix schedule: warmup epochs feed both future modalities unmasked;
// afterwards each batch is forward kinodynamics with probability mask_split
// and inverse kinodynamics otherwise.
model::Mode curriculum_mode(int epoch, Rng& rng, const TrainConfig& config);

}  // namespace vtf::training

#endif  // VTF_TRAINING_OPTIMIZER_H_
