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
//
// Python bindings for the pipeline's main operations. Configuration is
// passed as a JSON string in the RunConfig schema ("" = all defaults), so
// Python callers can build overrides with plain dicts and json.dumps. The
// heavy verbs mirror the vtf command line and write the same artifacts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "io/checkpoint.h"
#include "io/data_gen.h"
#include "io/episode_io.h"
#include "io/run_config.h"
#include "planning/closed_loop.h"
#include "planning/mppi.h"
#include "terrainsim/terrain.h"
#include "training/dataset.h"
#include "training/metrics.h"
#include "training/trainer.h"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace vtf;

namespace {

io::RunConfig config_from_text(const std::string& config_json) {
  if (config_json.empty()) {
    return io::RunConfig{};
  }
  return io::run_config_from_json(nlohmann::json::parse(config_json));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << text;
}

std::string manifest_path(const std::string& data) {
  if (fs::is_directory(data)) {
    return (fs::path(data) / "manifest.json").string();
  }
  return data;
}

py::dict terrain_py(std::uint64_t seed, const std::string& config_json) {
  const io::RunConfig cfg = config_from_text(config_json);
  const sim::ElevationMap map = sim::generate_terrain(seed, cfg.terrain);
  py::dict d;
  d["width_cells"] = map.width_cells;
  d["height_cells"] = map.height_cells;
  d["resolution"] = map.resolution;
  d["origin_x"] = map.origin_x;
  d["origin_y"] = map.origin_y;
  d["heights"] = map.heights;
  return d;
}

py::dict corpus_py(const std::string& out_dir, const std::string& config_json) {
  const io::RunConfig cfg = config_from_text(config_json);
  cfg.validate();
  fs::create_directories(out_dir);
  io::save_run_config((fs::path(out_dir) / "config.json").string(), cfg);
  const io::Manifest manifest = io::generate_corpus(cfg.data, out_dir);
  py::dict d;
  d["episodes"] = manifest.episodes.size();
  d["total_steps"] = manifest.total_steps;
  d["manifest"] = (fs::path(out_dir) / "manifest.json").string();
  return d;
}

py::dict train_py(const std::string& data, const std::string& out_dir,
                  const std::string& model, const std::string& config_json) {
  const io::RunConfig cfg = config_from_text(config_json);
  cfg.validate();
  const training::ModelKind kind = training::parse_model_kind(model);
  const auto episodes = io::load_corpus(manifest_path(data));
  const auto ds = training::window_dataset(
      episodes, cfg.model.history, cfg.model.horizon, cfg.train.stride,
      cfg.train.val_fraction, cfg.train.seed);
  const training::TrainResult tr =
      training::train(kind, ds, cfg.model, cfg.train);

  fs::create_directories(out_dir);
  io::save_run_config((fs::path(out_dir) / "config.json").string(), cfg);
  const std::string best = (fs::path(out_dir) / "checkpoint_best.ckpt").string();
  io::save_checkpoint(best, tr.best);
  io::save_checkpoint((fs::path(out_dir) / "checkpoint_final.ckpt").string(),
                      tr.final_ckpt);
  write_text((fs::path(out_dir) / "train_log.csv").string(), tr.log_csv);

  py::dict d;
  d["best_val"] = tr.best_val;
  d["best_epoch"] = tr.best_epoch;
  d["checkpoint"] = best;
  d["log_csv"] = tr.log_csv;
  return d;
}

py::dict evaluate_py(const std::string& checkpoint, const std::string& data,
                     const std::string& mode, int tau,
                     const std::string& split) {
  const io::Checkpoint ckpt = io::load_checkpoint(checkpoint);
  const training::AnyModel m = training::restore_model(ckpt);
  const training::NormalizationStats stats = training::checkpoint_stats(ckpt);
  const training::TrainConfig tc = training::checkpoint_train_config(ckpt);

  model::Mode md;
  if (mode == "fkd") {
    md = model::Mode::fkd;
  } else if (mode == "ikd") {
    md = model::Mode::ikd;
  } else if (mode == "bc") {
    md = model::Mode::bc;
  } else {
    throw std::invalid_argument("unknown eval mode '" + mode + "'");
  }

  const int eval_tau = tau > 0 ? tau : m.config.horizon;
  if (eval_tau > m.config.horizon &&
      m.kind != training::ModelKind::decoder) {
    throw std::invalid_argument(
        "eval horizon " + std::to_string(eval_tau) +
        " exceeds the trained horizon " + std::to_string(m.config.horizon) +
        "; changing the horizon requires re-training");
  }

  const auto episodes = io::load_corpus(manifest_path(data));
  training::WindowDataset ds = training::window_dataset(
      episodes, m.config.history, std::max(eval_tau, m.config.horizon),
      tc.stride, tc.val_fraction, tc.seed);
  if (split == "train") {
    std::swap(ds.train_windows, ds.val_windows);
    std::swap(ds.train_episodes, ds.val_episodes);
  } else if (split != "val") {
    throw std::invalid_argument("unknown split '" + split + "'");
  }

  const training::OfflineReport rep =
      training::evaluate_offline(m, ds, stats, md, eval_tau);
  py::dict d;
  d["mode"] = mode;
  d["split"] = split;
  d["eval_tau"] = rep.eval_tau;
  d["n_windows"] = rep.n_windows;
  d["err_x"] = rep.err_x;
  d["err_y"] = rep.err_y;
  d["err_z"] = rep.err_z;
  d["err_avg"] = rep.err_avg;
  d["final_xy_err"] = rep.final_xy_err;
  d["action_mae"] = rep.action_mae;
  return d;
}

py::dict closed_loop_py(const std::string& checkpoint,
                        const std::string& config_json,
                        const std::string& controller, bool oracle_model,
                        int trials, int max_steps, int samples) {
  io::RunConfig cfg = config_from_text(config_json);
  if (!controller.empty()) {
    cfg.run.controller = plan::parse_controller_kind(controller);
  }
  if (oracle_model) cfg.run.oracle_model = true;
  if (trials > 0) cfg.run.n_trials = trials;
  if (max_steps > 0) cfg.run.max_steps = max_steps;
  if (samples > 0) cfg.run.n_samples = samples;
  cfg.validate();

  const bool needs_model =
      !cfg.run.oracle_model &&
      cfg.run.controller != plan::ControllerKind::random_walk;
  std::optional<training::AnyModel> m;
  training::NormalizationStats stats;
  if (needs_model) {
    if (checkpoint.empty()) {
      throw std::invalid_argument(
          "controller " +
          std::string(plan::controller_kind_name(cfg.run.controller)) +
          " needs a checkpoint (or oracle_model=True for fkd_mppi)");
    }
    const io::Checkpoint ckpt = io::load_checkpoint(checkpoint);
    m.emplace(training::restore_model(ckpt));
    stats = training::checkpoint_stats(ckpt);
  }

  const plan::ClosedLoopResult res = plan::closed_loop_eval(
      m ? &*m : nullptr, m ? &stats : nullptr, cfg.run);
  py::dict d;
  d["controller"] = plan::controller_kind_name(cfg.run.controller);
  d["n_runs"] = res.summary.n_runs;
  d["n_success"] = res.summary.n_success;
  d["time_mean"] = res.summary.time_mean;
  d["time_std"] = res.summary.time_std;
  d["mean_abs_roll"] = res.summary.mean_abs_roll;
  d["mean_abs_pitch"] = res.summary.mean_abs_pitch;
  d["csv"] = res.csv;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Desk-scale multi-task kinodynamics transformer pipeline";
  m.attr("__version__") = "0.1.0";

  m.def("generate_terrain", &terrain_py, py::arg("seed"),
        py::arg("config_json") = "",
        "Procedural rugged elevation map for a world seed; returns the grid "
        "and its geometry as a dict.");

  m.def("generate_corpus", &corpus_py, py::arg("out_dir"),
        py::arg("config_json") = "",
        "Synthesize a demonstration corpus (episode files, manifest, config "
        "snapshot) into out_dir.");

  m.def("train", &train_py, py::arg("data"), py::arg("out_dir"),
        py::arg("model") = "vertiformer", py::arg("config_json") = "",
        "Fit a model kind on a corpus; writes checkpoints, the training log "
        "and a config snapshot, and returns the headline numbers.");

  m.def("evaluate", &evaluate_py, py::arg("checkpoint"), py::arg("data"),
        py::arg("mode") = "fkd", py::arg("tau") = 0, py::arg("split") = "val",
        "Offline error report for a checkpoint on a corpus split.");

  m.def("closed_loop", &closed_loop_py, py::arg("checkpoint") = "",
        py::arg("config_json") = "", py::arg("controller") = "",
        py::arg("oracle_model") = false, py::arg("trials") = 0,
        py::arg("max_steps") = 0, py::arg("samples") = 0,
        "Closed-loop trials over held-out worlds; returns the summary and "
        "per-trial CSV.");

  m.def(
      "mppi_weights",
      [](const std::vector<double>& costs, double lambda) {
        return plan::mppi_weights(costs, lambda);
      },
      py::arg("costs"), py::arg("lambda_") = 0.2,
      "Softmin weights over candidate costs as used by the planner.");
}
