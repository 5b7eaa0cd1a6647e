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

#ifndef VTF_TRAINING_ABLATION_H_
#define VTF_TRAINING_ABLATION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "training/metrics.h"
#include "training/trainer.h"

namespace vtf::training {

// One configuration to train and evaluate. The grid dimensions are the
// positional-encoding kind, the final pre-head normalization, the patch
// prediction head, the horizon (3 vs 6), and the model kind.
struct AblationCell {
  std::string study;  // e.g. "pe", "final_norm", "patch_head", "horizon",
                      // "mm_ntp_e2e"
  ModelKind kind = ModelKind::vertiformer;
  model::ModelConfig mc;
  TrainConfig tc;
  int eval_tau = 0;  // 0 = the model's horizon
};

struct AblationRow {
  AblationCell cell;
  std::uint64_t seed = 0;
  double val_loss = 0.0;
  OfflineReport report;
  double wall_ms = 0.0;  // the only nondeterministic column
  bool failed = false;
  std::string error;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::string csv;
};

// Trains every cell with every seed and evaluates the best checkpoint on the
// validation split (forward kinodynamics). A failing cell is recorded in its
// row and the run continues. All CSV columns except wall_ms are
// deterministic for fixed seeds.
AblationResult ablation_runner(const std::vector<AblationCell>& cells,
                               const std::vector<std::uint64_t>& seeds,
                               const WindowDataset& ds);

}  // namespace vtf::training

#endif  // VTF_TRAINING_ABLATION_H_
