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

#include "io/run_config.h"

#include <fstream>
#include <stdexcept>

#include "io/checkpoint.h"

namespace vtf::io {

namespace {

void reject_unknown(const nlohmann::json& j,
                    std::initializer_list<const char*> known,
                    const char* where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::invalid_argument(std::string(where) + ": unknown key \"" +
                                  key + "\"");
    }
  }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

nlohmann::json model_config_to_json(const model::ModelConfig& c) {
  nlohmann::json j;
  j["d_model"] = c.d_model;
  j["enc_layers"] = c.enc_layers;
  j["dec_layers"] = c.dec_layers;
  j["heads"] = c.heads;
  j["mlp_dim"] = c.mlp_dim;
  j["dropout"] = c.dropout;
  j["history"] = c.history;
  j["horizon"] = c.horizon;
  j["n_context"] = c.n_context;
  j["pe"] = c.pe_kind == model::PeKind::learnable ? "learnable" : "sinusoidal";
  j["final_norm"] = c.final_norm;
  j["patch_head"] = c.patch_head;
  j["patch_cells"] = c.patch_cells;
  j["dtype"] = c.dtype == ad::DType::f32 ? "f32" : "f64";
  return j;
}

model::ModelConfig model_config_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"d_model", "enc_layers", "dec_layers", "heads", "mlp_dim",
                  "dropout", "history", "horizon", "n_context", "pe",
                  "final_norm", "patch_head", "patch_cells", "dtype"},
                 "model config");
  model::ModelConfig c;
  maybe(j, "d_model", c.d_model);
  maybe(j, "enc_layers", c.enc_layers);
  maybe(j, "dec_layers", c.dec_layers);
  maybe(j, "heads", c.heads);
  maybe(j, "mlp_dim", c.mlp_dim);
  maybe(j, "dropout", c.dropout);
  maybe(j, "history", c.history);
  maybe(j, "horizon", c.horizon);
  maybe(j, "n_context", c.n_context);
  if (j.contains("pe")) {
    const std::string pe = j.at("pe").get<std::string>();
    if (pe == "learnable") {
      c.pe_kind = model::PeKind::learnable;
    } else if (pe == "sinusoidal") {
      c.pe_kind = model::PeKind::sinusoidal;
    } else {
      throw std::invalid_argument("model config: unknown pe \"" + pe + "\"");
    }
  }
  maybe(j, "final_norm", c.final_norm);
  maybe(j, "patch_head", c.patch_head);
  maybe(j, "patch_cells", c.patch_cells);
  if (j.contains("dtype")) {
    const std::string dt = j.at("dtype").get<std::string>();
    if (dt == "f32") {
      c.dtype = ad::DType::f32;
    } else if (dt == "f64") {
      c.dtype = ad::DType::f64;
    } else {
      throw std::invalid_argument("model config: unknown dtype \"" + dt +
                                  "\"");
    }
  }
  c.validate();
  return c;
}

nlohmann::json train_config_to_json(const training::TrainConfig& c) {
  nlohmann::json j;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps_adam"] = c.eps_adam;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch;
  j["warmup_epochs"] = c.warmup_epochs;
  j["mask_split"] = c.mask_split;
  j["seed"] = c.seed;
  j["val_fraction"] = c.val_fraction;
  j["stride"] = c.stride;
  j["train_bc"] = c.train_bc;
  return j;
}

training::TrainConfig train_config_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"lr", "weight_decay", "beta1", "beta2", "eps_adam", "epochs",
                  "batch", "warmup_epochs", "mask_split", "seed",
                  "val_fraction", "stride", "train_bc"},
                 "train config");
  training::TrainConfig c;
  maybe(j, "lr", c.lr);
  maybe(j, "weight_decay", c.weight_decay);
  maybe(j, "beta1", c.beta1);
  maybe(j, "beta2", c.beta2);
  maybe(j, "eps_adam", c.eps_adam);
  maybe(j, "epochs", c.epochs);
  maybe(j, "batch", c.batch);
  maybe(j, "warmup_epochs", c.warmup_epochs);
  maybe(j, "mask_split", c.mask_split);
  maybe(j, "seed", c.seed);
  maybe(j, "val_fraction", c.val_fraction);
  maybe(j, "stride", c.stride);
  maybe(j, "train_bc", c.train_bc);
  c.validate();
  return c;
}

std::uint64_t config_hash(const nlohmann::json& j) {
  // nlohmann::json objects iterate key-sorted, so dump() is canonical.
  const std::string text = j.dump();
  return fnv1a(text.data(), text.size());
}

namespace {

nlohmann::json terrain_to_json(const sim::TerrainParams& c) {
  nlohmann::json j;
  j["n_bumps"] = c.n_bumps;
  j["bump_height_min"] = c.bump_height_min;
  j["bump_height_max"] = c.bump_height_max;
  j["bump_radius_min"] = c.bump_radius_min;
  j["bump_radius_max"] = c.bump_radius_max;
  j["noise_amp"] = c.noise_amp;
  j["h_max"] = c.h_max;
  j["world_x"] = c.world_x;
  j["world_y"] = c.world_y;
  j["resolution"] = c.resolution;
  return j;
}

sim::TerrainParams terrain_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"n_bumps", "bump_height_min", "bump_height_max",
                  "bump_radius_min", "bump_radius_max", "noise_amp", "h_max",
                  "world_x", "world_y", "resolution"},
                 "terrain config");
  sim::TerrainParams c;
  maybe(j, "n_bumps", c.n_bumps);
  maybe(j, "bump_height_min", c.bump_height_min);
  maybe(j, "bump_height_max", c.bump_height_max);
  maybe(j, "bump_radius_min", c.bump_radius_min);
  maybe(j, "bump_radius_max", c.bump_radius_max);
  maybe(j, "noise_amp", c.noise_amp);
  maybe(j, "h_max", c.h_max);
  maybe(j, "world_x", c.world_x);
  maybe(j, "world_y", c.world_y);
  maybe(j, "resolution", c.resolution);
  return c;
}

nlohmann::json sim_to_json(const sim::SimParams& c) {
  nlohmann::json j;
  j["wheelbase"] = c.wheelbase;
  j["track"] = c.track;
  j["v_max"] = c.v_max;
  j["steer_max"] = c.steer_max;
  j["dt"] = c.dt;
  j["clearance"] = c.clearance;
  j["slope_stall_threshold"] = c.slope_stall_threshold;
  j["rollover_limit"] = c.rollover_limit;
  j["k_slip"] = c.k_slip;
  j["goal_radius"] = c.goal_radius;
  j["patch_cells"] = c.patch_cells;
  j["patch_extent"] = c.patch_extent;
  return j;
}

sim::SimParams sim_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"wheelbase", "track", "v_max", "steer_max", "dt",
                  "clearance", "slope_stall_threshold", "rollover_limit",
                  "k_slip", "goal_radius", "patch_cells", "patch_extent"},
                 "sim config");
  sim::SimParams c;
  maybe(j, "wheelbase", c.wheelbase);
  maybe(j, "track", c.track);
  maybe(j, "v_max", c.v_max);
  maybe(j, "steer_max", c.steer_max);
  maybe(j, "dt", c.dt);
  maybe(j, "clearance", c.clearance);
  maybe(j, "slope_stall_threshold", c.slope_stall_threshold);
  maybe(j, "rollover_limit", c.rollover_limit);
  maybe(j, "k_slip", c.k_slip);
  maybe(j, "goal_radius", c.goal_radius);
  maybe(j, "patch_cells", c.patch_cells);
  maybe(j, "patch_extent", c.patch_extent);
  return c;
}

nlohmann::json cost_to_json(const plan::CostParams& c) {
  nlohmann::json j;
  j["w_dist"] = c.w_dist;
  j["w_roll"] = c.w_roll;
  j["w_pitch"] = c.w_pitch;
  j["goal_radius"] = c.goal_radius;
  j["lambda"] = c.lambda;
  j["sigma_throttle"] = c.sigma_throttle;
  j["sigma_steer"] = c.sigma_steer;
  return j;
}

plan::CostParams cost_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"w_dist", "w_roll", "w_pitch", "goal_radius", "lambda",
                  "sigma_throttle", "sigma_steer"},
                 "cost config");
  plan::CostParams c;
  maybe(j, "w_dist", c.w_dist);
  maybe(j, "w_roll", c.w_roll);
  maybe(j, "w_pitch", c.w_pitch);
  maybe(j, "goal_radius", c.goal_radius);
  maybe(j, "lambda", c.lambda);
  maybe(j, "sigma_throttle", c.sigma_throttle);
  maybe(j, "sigma_steer", c.sigma_steer);
  return c;
}

nlohmann::json data_to_json(const DataGenConfig& c) {
  nlohmann::json j;
  j["duration_s"] = c.duration_s;
  j["seed"] = c.seed;
  j["goals_per_episode"] = c.goals_per_episode;
  j["max_steps_per_episode"] = c.max_steps_per_episode;
  j["noise_scale"] = c.noise_scale;
  j["margin"] = c.margin;
  j["lateral_span"] = c.lateral_span;
  return j;
}

DataGenConfig data_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"duration_s", "seed", "goals_per_episode",
                  "max_steps_per_episode", "noise_scale", "margin",
                  "lateral_span"},
                 "data config");
  DataGenConfig c;
  maybe(j, "duration_s", c.duration_s);
  maybe(j, "seed", c.seed);
  maybe(j, "goals_per_episode", c.goals_per_episode);
  maybe(j, "max_steps_per_episode", c.max_steps_per_episode);
  maybe(j, "noise_scale", c.noise_scale);
  maybe(j, "margin", c.margin);
  maybe(j, "lateral_span", c.lateral_span);
  return c;
}

nlohmann::json run_to_json(const plan::ClosedLoopConfig& c) {
  nlohmann::json j;
  j["controller"] = plan::controller_kind_name(c.controller);
  j["n_trials"] = c.n_trials;
  j["world_seed_base"] = c.world_seed_base;
  j["planner_seed"] = c.planner_seed;
  j["n_samples"] = c.n_samples;
  j["plan_steps"] = c.plan_steps;
  j["max_steps"] = c.max_steps;
  j["oracle_model"] = c.oracle_model;
  j["history"] = c.history;
  j["horizon"] = c.horizon;
  j["goal_margin"] = c.goal_margin;
  return j;
}

plan::ClosedLoopConfig run_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"controller", "n_trials", "world_seed_base", "planner_seed",
                  "n_samples", "plan_steps", "max_steps", "oracle_model",
                  "history", "horizon", "goal_margin"},
                 "run config");
  plan::ClosedLoopConfig c;
  if (j.contains("controller")) {
    c.controller =
        plan::parse_controller_kind(j.at("controller").get<std::string>());
  }
  maybe(j, "n_trials", c.n_trials);
  maybe(j, "world_seed_base", c.world_seed_base);
  maybe(j, "planner_seed", c.planner_seed);
  maybe(j, "n_samples", c.n_samples);
  maybe(j, "plan_steps", c.plan_steps);
  maybe(j, "max_steps", c.max_steps);
  maybe(j, "oracle_model", c.oracle_model);
  maybe(j, "history", c.history);
  maybe(j, "horizon", c.horizon);
  maybe(j, "goal_margin", c.goal_margin);
  return c;
}

}  // namespace

void RunConfig::validate() const {
  data.validate();
  model.validate();
  train.validate();
  run.validate();  // also covers cost, mirrored into run
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["data"] = data_to_json(c.data);
  j["terrain"] = terrain_to_json(c.terrain);
  j["sim"] = sim_to_json(c.sim);
  j["model"] = model_config_to_json(c.model);
  j["train"] = train_config_to_json(c.train);
  j["cost"] = cost_to_json(c.cost);
  j["run"] = run_to_json(c.run);
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"data", "terrain", "sim", "model", "train", "cost", "run"},
                 "run config");
  RunConfig c;
  if (j.contains("data")) c.data = data_from_json(j.at("data"));
  if (j.contains("terrain")) c.terrain = terrain_from_json(j.at("terrain"));
  if (j.contains("sim")) c.sim = sim_from_json(j.at("sim"));
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("cost")) c.cost = cost_from_json(j.at("cost"));
  if (j.contains("run")) c.run = run_from_json(j.at("run"));
  // The shared sections are authoritative; mirror them into the nested
  // configs that carry their own copies.
  c.data.sim = c.sim;
  c.data.terrain = c.terrain;
  c.run.sim = c.sim;
  c.run.terrain = c.terrain;
  c.run.cost = c.cost;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return run_config_from_json(nlohmann::json::object());
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const std::string& path, const RunConfig& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << run_config_to_json(c).dump(2) << "\n";
}

}  // namespace vtf::io
