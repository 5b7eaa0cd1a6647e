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

#ifndef VTF_TRAINING_DATASET_H_
#define VTF_TRAINING_DATASET_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adcore/tensor.h"
#include "terrainsim/sim.h"

namespace vtf::training {

// Per-channel normalization fitted on the training split and stored with
// every checkpoint. Pose deltas and patch heights are z-scored on all model
// inputs and outputs. Action channels are recorded for reporting but applied
// as identity: actions are already bounded to [-1, 1] by construction and the
// tanh action head emits exactly that range, so z-scoring action targets
// would put valid demonstrations outside the head's reachable set.
struct NormalizationStats {
  std::array<double, 2> action_mean{0.0, 0.0};
  std::array<double, 2> action_std{1.0, 1.0};
  std::array<double, 6> delta_mean{};
  std::array<double, 6> delta_std{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double patch_mean = 0.0;
  double patch_std = 1.0;

  std::array<double, 6> normalize_delta(const std::array<double, 6>& d) const;
  std::array<double, 6> denormalize_delta(
      const std::array<double, 6>& d) const;
  double normalize_patch(double v) const {
    return (v - patch_mean) / patch_std;
  }

  std::string to_json() const;
  static NormalizationStats from_json(const std::string& text);
};

// One contiguous window: records [start, start + T + tau) of one episode.
struct Window {
  int episode = 0;
  int start = 0;
};

// Episode-level split into training and validation windows plus the
// per-record body-frame pose deltas the model consumes (delta 0 at the first
// record of an episode).
struct WindowDataset {
  const std::vector<sim::Episode>* episodes = nullptr;
  std::vector<std::vector<std::array<double, 6>>> deltas;  // [episode][record]
  std::vector<int> train_episodes;
  std::vector<int> val_episodes;
  std::vector<Window> train_windows;
  std::vector<Window> val_windows;
  int history = 0;
  int horizon = 0;
  int stride = 1;
  int skipped_short = 0;  // episodes shorter than T + tau
};

// Enumerates all contiguous length-(T + tau) windows per episode at the
// stride, in deterministic order, then splits by episode so no validation
// window shares an episode with training. Episodes shorter than T + tau are
// skipped and counted in skipped_short.
WindowDataset window_dataset(const std::vector<sim::Episode>& episodes,
                             int history, int horizon, int stride,
                             double val_fraction, std::uint64_t split_seed);

// Population means/stds over every step of every training window (floored to
// 1e-6).
NormalizationStats fit_normalization(const WindowDataset& ds);

// Normalized tensors for a batch of windows.
struct Batch {
  ad::Tensor hist_actions;  // [B, T, 2]
  ad::Tensor hist_deltas;   // [B, T, 6]
  ad::Tensor hist_patches;  // [B, T, P*P]
  ad::Tensor fut_actions;   // [B, tau, 2]
  ad::Tensor fut_deltas;    // [B, tau, 6]
  ad::Tensor fut_patches;   // [B, tau, P*P]
};

Batch make_batch(const WindowDataset& ds, std::span<const Window> windows,
                 const NormalizationStats& stats, ad::DType dtype);

}  // namespace vtf::training

#endif  // VTF_TRAINING_DATASET_H_
