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

#ifndef VTF_TRAINING_PROBE_H_
#define VTF_TRAINING_PROBE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "training/dataset.h"
#include "model/params.h"

namespace vtf::training {

// How history steps become encoder tokens for the probe:
//   unified  - per-modality embeddings concatenated and fused into one token
//              per timestep (the full model's tokenization), T tokens;
//   separate - each modality embedded straight to model width with no fusion
//              map, 3T tokens.
enum class ProbeVariant { unified, separate };

const char* probe_variant_name(ProbeVariant v);

struct ProbeConfig {
  model::ModelConfig mc;  // encoder width/depth; history = window length
  int epochs = 10;
  int batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  // Deterministic subsampling caps (0 = use everything).
  int max_train_windows = 2000;
  int max_val_windows = 512;
};

struct ProbeCurves {
  std::vector<double> val_acc;   // index 0 = untrained
  std::vector<double> val_loss;
  double final_acc = 0.0;
  double final_loss = 0.0;
  std::string csv;  // epoch,val_acc,val_loss
};

// Trains a small encoder plus linear classifier to distinguish in-order
// history windows from ones whose timesteps were shuffled (labels balanced
// 50/50 every epoch), and reports the held-out accuracy curve. Both variants
// run the same budget; only the tokenization differs.
ProbeCurves sequence_order_probe(ProbeVariant variant, const WindowDataset& ds,
                                 const ProbeConfig& config);

}  // namespace vtf::training

#endif  // VTF_TRAINING_PROBE_H_
