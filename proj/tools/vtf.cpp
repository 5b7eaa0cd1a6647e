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
// vtf: the pipeline command line. Subcommands cover the whole workflow:
//
//   gen-data   synthesize a demonstration corpus onto disk
//   train      fit a model on a corpus and write checkpoints + log
//   eval       offline error report for a checkpoint
//   run        closed-loop trials over held-out worlds
//   ablate     study grids (architecture knobs) and the sequence-order probe
//
// Every command takes --config (a RunConfig JSON; defaults when omitted) and
// writes a config snapshot into its output directory so artifacts are
// reproducible from the directory alone. Exit codes: 0 success, 1 usage
// error, 2 runtime failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "io/checkpoint.h"
#include "io/data_gen.h"
#include "io/episode_io.h"
#include "io/run_config.h"
#include "planning/closed_loop.h"
#include "training/ablation.h"
#include "training/dataset.h"
#include "training/metrics.h"
#include "training/probe.h"
#include "training/trainer.h"

namespace fs = std::filesystem;
using namespace vtf;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << text;
}

std::string fmt(double v) {
  return std::isfinite(v) ? io::format_double(v) : "nan";
}

// Accepts either a manifest file or the directory that holds manifest.json.
std::string manifest_path(const std::string& data) {
  if (fs::is_directory(data)) {
    return (fs::path(data) / "manifest.json").string();
  }
  return data;
}

model::Mode parse_eval_mode(const std::string& name) {
  if (name == "fkd") return model::Mode::fkd;
  if (name == "ikd") return model::Mode::ikd;
  if (name == "bc") return model::Mode::bc;
  throw std::runtime_error("unknown eval mode '" + name +
                           "' (expected fkd, ikd or bc)");
}

// The split-by-episode dataset exactly as training built it: the window
// geometry comes from the model config, the stride / fraction / split seed
// from the train config.
training::WindowDataset dataset_for(const std::vector<sim::Episode>& episodes,
                                    const model::ModelConfig& mc,
                                    const training::TrainConfig& tc,
                                    int horizon_override = 0) {
  const int horizon = horizon_override > 0 ? horizon_override : mc.horizon;
  return training::window_dataset(episodes, mc.history, horizon, tc.stride,
                                  tc.val_fraction, tc.seed);
}

// ---------------------------------------------------------------------------
// gen-data

int cmd_gen_data(const io::RunConfig& cfg, const std::string& out) {
  fs::create_directories(out);
  io::save_run_config((fs::path(out) / "config.json").string(), cfg);
  const io::Manifest manifest = io::generate_corpus(cfg.data, out);
  std::printf("gen-data: %zu episodes, %lld steps (%.1f s at dt %.4f) -> %s\n",
              manifest.episodes.size(),
              static_cast<long long>(manifest.total_steps),
              static_cast<double>(manifest.total_steps) * cfg.sim.dt,
              cfg.sim.dt, out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const io::RunConfig& cfg, const std::string& data,
              const std::string& out, const std::string& kind_name,
              bool resume) {
  const training::ModelKind kind = training::parse_model_kind(kind_name);
  fs::create_directories(out);

  const fs::path snap = fs::path(out) / "config.json";
  const nlohmann::json now_json = io::run_config_to_json(cfg);
  if (resume) {
    if (!fs::exists(snap)) {
      throw std::runtime_error("--resume: no config snapshot at " +
                               snap.string());
    }
    const nlohmann::json old_json =
        nlohmann::json::parse(read_text(snap.string()));
    if (io::config_hash(old_json) != io::config_hash(now_json)) {
      throw std::runtime_error(
          "--resume: config hash " + std::to_string(io::config_hash(now_json)) +
          " differs from the snapshot's " +
          std::to_string(io::config_hash(old_json)) +
          "; refusing to resume under a different configuration");
    }
  }
  io::save_run_config(snap.string(), cfg);

  const auto episodes = io::load_corpus(manifest_path(data));
  const auto ds = dataset_for(episodes, cfg.model, cfg.train);
  std::printf("train: %s on %zu episodes (%zu train / %zu val windows)\n",
              training::model_kind_name(kind), episodes.size(),
              ds.train_windows.size(), ds.val_windows.size());

  const training::TrainResult tr =
      training::train(kind, ds, cfg.model, cfg.train);

  io::save_checkpoint((fs::path(out) / "checkpoint_best.ckpt").string(),
                      tr.best);
  io::save_checkpoint((fs::path(out) / "checkpoint_final.ckpt").string(),
                      tr.final_ckpt);
  write_text((fs::path(out) / "train_log.csv").string(), tr.log_csv);
  std::printf("train: best val %s at epoch %d -> %s\n", fmt(tr.best_val).c_str(),
              tr.best_epoch, out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& checkpoint, const std::string& data,
             const std::string& mode_name, int tau, const std::string& split,
             const std::string& out) {
  const io::Checkpoint ckpt = io::load_checkpoint(checkpoint);
  const training::AnyModel m = training::restore_model(ckpt);
  const training::NormalizationStats stats = training::checkpoint_stats(ckpt);
  const training::TrainConfig tc = training::checkpoint_train_config(ckpt);
  const model::Mode mode = parse_eval_mode(mode_name);

  const int eval_tau = tau > 0 ? tau : m.config.horizon;
  // Only the autoregressive decoder can be evaluated past its training
  // horizon; every other model bakes the horizon into its heads.
  if (eval_tau > m.config.horizon &&
      m.kind != training::ModelKind::decoder) {
    throw std::runtime_error(
        "eval horizon " + std::to_string(eval_tau) +
        " exceeds the trained horizon " + std::to_string(m.config.horizon) +
        "; changing the horizon requires re-training");
  }

  const auto episodes = io::load_corpus(manifest_path(data));
  training::WindowDataset ds = dataset_for(
      episodes, m.config, tc, std::max(eval_tau, m.config.horizon));
  if (split == "train") {
    std::swap(ds.train_windows, ds.val_windows);
    std::swap(ds.train_episodes, ds.val_episodes);
  } else if (split != "val") {
    throw std::runtime_error("unknown split '" + split +
                             "' (expected train or val)");
  }
  const training::OfflineReport rep =
      training::evaluate_offline(m, ds, stats, mode, eval_tau);

  std::string csv =
      "mode,split,eval_tau,n_windows,err_x,err_y,err_z,err_avg,"
      "final_xy_err,action_mae\n";
  csv += std::string(mode_name) + "," + split + "," +
         std::to_string(rep.eval_tau) + "," + std::to_string(rep.n_windows) +
         "," + fmt(rep.err_x) + "," + fmt(rep.err_y) + "," + fmt(rep.err_z) +
         "," + fmt(rep.err_avg) + "," + fmt(rep.final_xy_err) + "," +
         fmt(rep.action_mae) + "\n";
  std::fputs(csv.c_str(), stdout);

  if (!out.empty()) {
    fs::create_directories(out);
    write_text((fs::path(out) / "report.csv").string(), csv);
    nlohmann::json snap;
    snap["checkpoint"] = checkpoint;
    snap["data"] = data;
    snap["mode"] = mode_name;
    snap["split"] = split;
    snap["eval_tau"] = rep.eval_tau;
    snap["checkpoint_config"] = nlohmann::json::parse(ckpt.config_json);
    write_text((fs::path(out) / "config.json").string(), snap.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(io::RunConfig cfg, const std::string& checkpoint,
            const std::string& out) {
  cfg.run.validate();
  const bool needs_model = !cfg.run.oracle_model &&
                           cfg.run.controller != plan::ControllerKind::random_walk;
  std::optional<training::AnyModel> m;
  training::NormalizationStats stats;
  if (needs_model) {
    if (checkpoint.empty()) {
      throw std::runtime_error(
          "controller " +
          std::string(plan::controller_kind_name(cfg.run.controller)) +
          " needs --checkpoint (or --oracle-model for fkd_mppi)");
    }
    const io::Checkpoint ckpt = io::load_checkpoint(checkpoint);
    m.emplace(training::restore_model(ckpt));
    stats = training::checkpoint_stats(ckpt);
  }

  const plan::ClosedLoopResult res = plan::closed_loop_eval(
      m ? &*m : nullptr, m ? &stats : nullptr, cfg.run);

  fs::create_directories(out);
  io::save_run_config((fs::path(out) / "config.json").string(), cfg);

  // Per-trial rows, then one summary row in the same schema: success carries
  // the success count, steps the number of runs, traversal_time the mean
  // time over successful runs.
  std::string csv = res.csv;
  csv += "summary,," +
         std::string(plan::controller_kind_name(cfg.run.controller)) + "," +
         std::to_string(res.summary.n_success) + ",," +
         std::to_string(res.summary.n_runs) + "," + fmt(res.summary.time_mean) +
         "," + fmt(res.summary.mean_abs_roll) + "," +
         fmt(res.summary.mean_abs_pitch) + "\n";
  write_text((fs::path(out) / "metrics.csv").string(), csv);

  char name[32];
  for (std::size_t i = 0; i < res.trials.size(); ++i) {
    std::snprintf(name, sizeof(name), "trace_%03d.jsonl", static_cast<int>(i));
    io::write_episode((fs::path(out) / name).string(), res.trials[i].trace);
  }

  std::printf("%s", csv.c_str());
  std::printf("run: %d/%d success -> %s\n", res.summary.n_success,
              res.summary.n_runs, out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// ablate

struct StudyGrid {
  std::vector<training::AblationCell> cells;
  int window_horizon = 0;  // widest horizon any cell needs
  // Projects one result row onto the study's documented knob column.
  std::string knob_name;
  std::string (*knob_value)(const training::AblationCell&) = nullptr;
};

StudyGrid build_grid(const std::string& study, const io::RunConfig& cfg) {
  StudyGrid g;
  g.window_horizon = cfg.model.horizon;
  training::AblationCell base;
  base.study = study;
  base.mc = cfg.model;
  base.tc = cfg.train;
  if (study == "pe") {
    g.knob_name = "pe_kind";
    g.knob_value = [](const training::AblationCell& c) {
      return std::string(c.mc.pe_kind == model::PeKind::learnable
                             ? "learnable"
                             : "sinusoidal");
    };
    for (model::PeKind pe : {model::PeKind::sinusoidal, model::PeKind::learnable}) {
      training::AblationCell c = base;
      c.mc.pe_kind = pe;
      g.cells.push_back(c);
    }
  } else if (study == "final_norm") {
    g.knob_name = "final_norm";
    g.knob_value = [](const training::AblationCell& c) {
      return std::string(c.mc.final_norm ? "true" : "false");
    };
    for (bool fn : {true, false}) {
      training::AblationCell c = base;
      c.mc.final_norm = fn;
      g.cells.push_back(c);
    }
  } else if (study == "patch_head") {
    g.knob_name = "patch_head";
    g.knob_value = [](const training::AblationCell& c) {
      return std::string(c.mc.patch_head ? "true" : "false");
    };
    for (bool ph : {true, false}) {
      training::AblationCell c = base;
      c.mc.patch_head = ph;
      g.cells.push_back(c);
    }
  } else if (study == "horizon") {
    g.knob_name = "horizon";
    g.knob_value = [](const training::AblationCell& c) {
      return std::to_string(c.mc.horizon);
    };
    for (int h : {3, 6}) {
      training::AblationCell c = base;
      c.mc.horizon = h;
      c.mc.n_context = std::max(c.mc.n_context, h);
      g.cells.push_back(c);
      g.window_horizon = std::max(g.window_horizon, h);
    }
  } else if (study == "mm") {
    g.knob_name = "model";
    g.knob_value = [](const training::AblationCell& c) {
      return std::string(training::model_kind_name(c.kind));
    };
    for (training::ModelKind k :
         {training::ModelKind::vertiformer, training::ModelKind::encoder,
          training::ModelKind::decoder, training::ModelKind::end2end}) {
      training::AblationCell c = base;
      c.kind = k;
      g.cells.push_back(c);
    }
  } else {
    throw std::runtime_error(
        "unknown study '" + study +
        "' (expected pe, final_norm, patch_head, horizon, mm or probe)");
  }
  return g;
}

int cmd_ablate(const io::RunConfig& cfg, const std::string& data,
               const std::string& study,
               const std::vector<std::uint64_t>& seeds, bool dry_run,
               const std::string& out) {
  if (study == "probe") {
    training::ProbeConfig pc;
    pc.mc = cfg.model;
    pc.seed = cfg.train.seed;
    if (dry_run) {
      std::printf("probe grid: variants unified,separate; epochs %d; seed %llu\n",
                  pc.epochs, static_cast<unsigned long long>(pc.seed));
      return 0;
    }
    const auto episodes = io::load_corpus(manifest_path(data));
    const auto ds = dataset_for(episodes, cfg.model, cfg.train);
    std::string csv = "variant,epoch,val_acc,val_loss\n";
    for (training::ProbeVariant v :
         {training::ProbeVariant::unified, training::ProbeVariant::separate}) {
      const training::ProbeCurves curves =
          training::sequence_order_probe(v, ds, pc);
      for (std::size_t e = 0; e < curves.val_acc.size(); ++e) {
        csv += std::string(training::probe_variant_name(v)) + "," +
               std::to_string(e) + "," + fmt(curves.val_acc[e]) + "," +
               fmt(curves.val_loss[e]) + "\n";
      }
    }
    fs::create_directories(out);
    io::save_run_config((fs::path(out) / "config.json").string(), cfg);
    write_text((fs::path(out) / "probe.csv").string(), csv);
    std::fputs(csv.c_str(), stdout);
    return 0;
  }

  const StudyGrid grid = build_grid(study, cfg);
  if (dry_run) {
    std::printf("study %s: %zu cells x %zu seeds\n", study.c_str(),
                grid.cells.size(), seeds.size());
    for (const auto& c : grid.cells) {
      for (std::uint64_t s : seeds) {
        std::printf("  %s=%s model=%s tau=%d epochs=%d seed=%llu\n",
                    grid.knob_name.c_str(), grid.knob_value(c).c_str(),
                    training::model_kind_name(c.kind), c.mc.horizon,
                    c.tc.epochs, static_cast<unsigned long long>(s));
      }
    }
    return 0;
  }

  const auto episodes = io::load_corpus(manifest_path(data));
  const auto ds =
      dataset_for(episodes, cfg.model, cfg.train, grid.window_horizon);
  const training::AblationResult res =
      training::ablation_runner(grid.cells, seeds, ds);

  // The study CSV projects the full grid log onto the documented schema.
  std::string csv = grid.knob_name + ",seed,val_loss,err_x,err_y,err_z\n";
  for (const auto& row : res.rows) {
    csv += grid.knob_value(row.cell) + "," + std::to_string(row.seed) + "," +
           fmt(row.val_loss) + "," + fmt(row.report.err_x) + "," +
           fmt(row.report.err_y) + "," + fmt(row.report.err_z) + "\n";
  }
  fs::create_directories(out);
  io::save_run_config((fs::path(out) / "config.json").string(), cfg);
  write_text((fs::path(out) / (study + ".csv")).string(), csv);
  write_text((fs::path(out) / (study + "_full.csv")).string(), res.csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale multi-task kinodynamics transformer pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data = "data";
  std::string out;
  std::string checkpoint;
  std::string kind = "vertiformer";
  std::string mode = "fkd";
  std::string split = "val";
  std::string controller;
  std::string study = "pe";
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int tau = 0;
  int trials = 0;
  int samples = 0;
  int max_steps = 0;
  double duration = -1.0;
  std::int64_t seed = -1;
  bool resume = false;
  bool oracle = false;
  bool dry_run = false;

  CLI::App* gen = app.add_subcommand("gen-data", "synthesize a corpus");
  gen->add_option("--config", config_path, "RunConfig JSON");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--duration", duration, "corpus length in simulated seconds");
  gen->add_option("--seed", seed, "base seed for worlds and noise");

  CLI::App* train = app.add_subcommand("train", "fit a model on a corpus");
  train->add_option("--config", config_path, "RunConfig JSON");
  train->add_option("--data", data, "corpus directory or manifest")->required();
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--model", kind,
                    "vertiformer, encoder, decoder or end2end");
  train->add_option("--epochs", trials, "override train.epochs");
  train->add_option("--seed", seed, "override train.seed");
  train->add_flag("--resume", resume,
                  "allow rerunning into an existing output directory "
                  "(config hash must match the snapshot)");

  CLI::App* eval = app.add_subcommand("eval", "offline error report");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--data", data, "corpus directory or manifest")->required();
  eval->add_option("--mode", mode, "fkd, ikd or bc");
  eval->add_option("--tau", tau, "evaluation horizon (0 = trained horizon)");
  eval->add_option("--split", split, "val (default) or train");
  eval->add_option("--out", out, "report directory (optional)");

  CLI::App* run = app.add_subcommand("run", "closed-loop trials");
  run->add_option("--config", config_path, "RunConfig JSON");
  run->add_option("--checkpoint", checkpoint,
                  "checkpoint file (model-driven controllers)");
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--controller", controller,
                  "fkd_mppi, ikd_dijkstra, bc or random_walk");
  run->add_option("--trials", trials, "number of held-out worlds");
  run->add_option("--samples", samples, "sampled sequences per plan step");
  run->add_option("--max-steps", max_steps, "timeout in control ticks");
  run->add_option("--seed", seed, "override run.world_seed_base");
  run->add_flag("--oracle-model", oracle,
                "plan with true dynamics instead of a checkpoint");

  CLI::App* ablate = app.add_subcommand("ablate", "study grids and the probe");
  ablate->add_option("--config", config_path, "RunConfig JSON");
  ablate->add_option("--data", data, "corpus directory or manifest")
      ->required();
  ablate->add_option("--out", out, "output directory")->required();
  ablate->add_option("--study", study,
                     "pe, final_norm, patch_head, horizon, mm or probe");
  ablate->add_option("--seeds", seeds, "training seeds")->delimiter(',');
  ablate->add_flag("--dry-run", dry_run, "print the grid without training");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    io::RunConfig cfg = io::load_run_config(config_path);
    if (gen->parsed()) {
      if (duration >= 0.0) cfg.data.duration_s = duration;
      if (seed >= 0) cfg.data.seed = static_cast<std::uint64_t>(seed);
      cfg.validate();
      return cmd_gen_data(cfg, out);
    }
    if (train->parsed()) {
      if (trials > 0) cfg.train.epochs = trials;
      if (seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed);
      cfg.validate();
      return cmd_train(cfg, data, out, kind, resume);
    }
    if (eval->parsed()) {
      return cmd_eval(checkpoint, data, mode, tau, split, out);
    }
    if (run->parsed()) {
      if (!controller.empty()) {
        cfg.run.controller = plan::parse_controller_kind(controller);
      }
      if (trials > 0) cfg.run.n_trials = trials;
      if (samples > 0) cfg.run.n_samples = samples;
      if (max_steps > 0) cfg.run.max_steps = max_steps;
      if (seed >= 0) cfg.run.world_seed_base = static_cast<std::uint64_t>(seed);
      if (oracle) cfg.run.oracle_model = true;
      cfg.validate();
      return cmd_run(cfg, checkpoint, out);
    }
    if (ablate->parsed()) {
      cfg.validate();
      return cmd_ablate(cfg, data, study, seeds, dry_run, out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vtf: error: %s\n", e.what());
    return 2;
  }
  return 0;
}
