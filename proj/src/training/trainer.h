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

#ifndef VTF_TRAINING_TRAINER_H_
#define VTF_TRAINING_TRAINER_H_

#include <optional>
#include <string>
#include <vector>

#include "io/checkpoint.h"
#include "model/baselines.h"
#include "model/params.h"
#include "model/vertiformer.h"
#include "training/dataset.h"
#include "training/optimizer.h"

namespace vtf::training {

enum class ModelKind { vertiformer, encoder, decoder, end2end };

const char* model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

// One trainable model of any supported kind, with uniform access to its
// parameter store and task predictions.
struct AnyModel {
  ModelKind kind = ModelKind::vertiformer;
  model::ModelConfig config;
  std::optional<model::VertiFormerParams> vf;
  std::optional<model::EncoderOnlyParams> enc;
  std::optional<model::DecoderOnlyParams> dec;
  std::optional<model::End2EndParams> e2e;

  model::ParamStore& store();
  const model::ParamStore& store() const;
};

AnyModel make_model(ModelKind kind, const model::ModelConfig& config,
                    std::uint64_t seed);

// Forward kinodynamics in eval mode: normalized pose deltas [B, eval_tau, 6]
// for the batch's future actions. The decoder baseline rolls out
// autoregressively; the others predict in a single pass. eval_tau must not
// exceed the trained horizon (decoder excepted: any eval_tau works).
ad::Tensor predict_fkd(const AnyModel& m, const Batch& batch, int eval_tau);

// Action prediction in eval mode: [B, tau, 2] raw actions for mode ikd
// (conditioned on the batch's future deltas) or bc (history only). Throws for
// model kinds that cannot perform the task.
ad::Tensor predict_actions(const AnyModel& m, const Batch& batch,
                           model::Mode mode);

struct EpochLog {
  int epoch = 0;             // 0 = evaluation at initialization
  std::string mode_mix;      // e.g. "warmup" or "fkd:3,ikd:2"
  double train_loss = 0.0;   // NaN for the initialization row
  double val_loss = 0.0;
};

struct TrainResult {
  io::Checkpoint best;        // lowest validation loss
  io::Checkpoint final_ckpt;  // after the last epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val = 0.0;
  std::string log_csv;  // epoch,mode_mix,train_loss,val_loss
};

// Seeded, deterministic training of any model kind on the dataset's training
// split. Validation loss is computed after every epoch (and once at
// initialization); the best-validation checkpoint is retained. A non-finite
// training loss aborts with the epoch and batch in the message.
TrainResult train(ModelKind kind, const WindowDataset& ds,
                  const model::ModelConfig& mc, const TrainConfig& tc);

// Checkpoint plumbing shared by the trainer and the CLI.
io::Checkpoint make_checkpoint(const AnyModel& m, const TrainConfig& tc,
                               const NormalizationStats& stats);
AnyModel restore_model(const io::Checkpoint& ckpt);
NormalizationStats checkpoint_stats(const io::Checkpoint& ckpt);
TrainConfig checkpoint_train_config(const io::Checkpoint& ckpt);

}  // namespace vtf::training

#endif  // VTF_TRAINING_TRAINER_H_
