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

#ifndef VTF_IO_RUN_CONFIG_H_
#define VTF_IO_RUN_CONFIG_H_

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "io/data_gen.h"
#include "model/params.h"
#include "planning/closed_loop.h"
#include "training/optimizer.h"

namespace vtf::io {

// JSON round-trips for the config structs stored in checkpoints and run
// snapshots. Serialization emits every field; parsing rejects unknown keys
// and fills absent ones with defaults.
nlohmann::json model_config_to_json(const model::ModelConfig& c);
model::ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const training::TrainConfig& c);
training::TrainConfig train_config_from_json(const nlohmann::json& j);

// Stable 64-bit hash of a canonicalized JSON document (key-sorted dump,
// FNV-1a). Used to refuse resuming a run under a different configuration.
std::uint64_t config_hash(const nlohmann::json& j);

// Everything a full pipeline run reads, as one strict-schema document with
// sections {data, terrain, sim, model, train, cost, run}. Every field has a
// default; unknown keys are rejected with the offending section and key
// named. A serialized snapshot is stored in every output directory.
struct RunConfig {
  DataGenConfig data;  // its sim/terrain members mirror the shared sections
  sim::TerrainParams terrain;
  sim::SimParams sim;
  model::ModelConfig model;
  training::TrainConfig train;
  plan::CostParams cost;
  plan::ClosedLoopConfig run;  // its sim/terrain/cost mirror the shared ones

  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

// Load (or save) a RunConfig as pretty-printed JSON; an empty path loads the
// all-defaults config.
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& c);

}  // namespace vtf::io

#endif  // VTF_IO_RUN_CONFIG_H_
