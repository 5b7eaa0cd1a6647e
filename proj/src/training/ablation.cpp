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

#include "training/ablation.h"

#include <algorithm>
#include <chrono>

#include "io/episode_io.h"

namespace vtf::training {

namespace {

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string fmt(double v, bool failed) {
  return failed ? "nan" : io::format_double(v);
}

}  // namespace

AblationResult ablation_runner(const std::vector<AblationCell>& cells,
                               const std::vector<std::uint64_t>& seeds,
                               const WindowDataset& ds) {
  AblationResult res;
  std::string csv =
      "study,model,pe,final_norm,patch_head,tau,eval_tau,seed,val_loss,"
      "err_x,err_y,err_z,err_avg,final_xy_err,status,wall_ms\n";
  for (const AblationCell& cell : cells) {
    for (std::uint64_t seed : seeds) {
      AblationRow row;
      row.cell = cell;
      row.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TrainConfig tc = cell.tc;
        tc.seed = seed;
        const TrainResult tr = train(cell.kind, ds, cell.mc, tc);
        row.val_loss = tr.best_val;
        const AnyModel best = restore_model(tr.best);
        const NormalizationStats stats = checkpoint_stats(tr.best);
        const int eval_tau =
            cell.eval_tau > 0 ? cell.eval_tau : cell.mc.horizon;
        row.report =
            evaluate_offline(best, ds, stats, model::Mode::fkd, eval_tau);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      csv += cell.study + "," + model_kind_name(cell.kind) + "," +
             (cell.mc.pe_kind == model::PeKind::learnable ? "learnable"
                                                          : "sinusoidal") +
             "," + (cell.mc.final_norm ? "on" : "off") + "," +
             (cell.mc.patch_head ? "on" : "off") + "," +
             std::to_string(cell.mc.horizon) + "," +
             std::to_string(cell.eval_tau > 0 ? cell.eval_tau
                                              : cell.mc.horizon) +
             "," + std::to_string(seed) + "," +
             fmt(row.val_loss, row.failed) + "," +
             fmt(row.report.err_x, row.failed) + "," +
             fmt(row.report.err_y, row.failed) + "," +
             fmt(row.report.err_z, row.failed) + "," +
             fmt(row.report.err_avg, row.failed) + "," +
             fmt(row.report.final_xy_err, row.failed) + "," +
             (row.failed ? "error: " + sanitize(row.error) : "ok") + "," +
             io::format_double(row.wall_ms) + "\n";
      res.rows.push_back(std::move(row));
    }
  }
  res.csv = std::move(csv);
  return res;
}

}  // namespace vtf::training
