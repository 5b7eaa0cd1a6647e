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

#ifndef VTF_TRAINING_METRICS_H_
#define VTF_TRAINING_METRICS_H_

#include "training/trainer.h"

namespace vtf::training {

// Mean squared error on pose deltas plus mean squared error on actions (both
// heads are supervised in every mode; the masked modality is the primary
// task and the other is auxiliary), plus patch MSE iff the patch head is on.
// Equal weights throughout.
ad::Tensor multitask_loss(const model::ForwardOutputs& pred,
                          const Batch& target, model::Mode mode,
                          const model::ModelConfig& config);

struct OfflineReport {
  // Scale-normalized mean absolute pose error per world component: predicted
  // deltas are composed into absolute poses and compared against the
  // recorded trajectory; the scale is the per-component population std of
  // ground-truth displacement from the last history pose over the
  // validation set.
  double err_x = 0.0;
  double err_y = 0.0;
  double err_z = 0.0;
  double err_avg = 0.0;
  // Mean Euclidean XY error at the final predicted step, meters.
  double final_xy_err = 0.0;
  // Mean absolute action error (ikd/bc evaluations).
  double action_mae = 0.0;
  int eval_tau = 0;
  int n_windows = 0;
};

// Evaluates a restored model on the validation windows. mode fkd fills the
// pose-error fields; ikd/bc fill action_mae (and the pose fields are zero).
OfflineReport evaluate_offline(const AnyModel& m, const WindowDataset& ds,
                               const NormalizationStats& stats,
                               model::Mode mode, int eval_tau);

}  // namespace vtf::training

#endif  // VTF_TRAINING_METRICS_H_
