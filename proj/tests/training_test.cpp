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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "terrainsim/sim.h"
#include "terrainsim/terrain.h"
#include "training/ablation.h"
#include "training/metrics.h"
#include "training/probe.h"
#include "training/trainer.h"

using namespace vtf;
using namespace vtf::training;

namespace {

std::vector<sim::Episode> make_corpus(int n_eps, int min_len) {
  std::vector<sim::Episode> eps;
  sim::SimParams sp;
  sp.patch_cells = 8;  // small patches keep these runs fast
  for (int e = 0; e < n_eps; ++e) {
    sim::TerrainParams tp;
    tp.h_max = 0.08;
    const sim::ElevationMap map =
        sim::generate_terrain(1000 + static_cast<std::uint64_t>(e), tp);
    const double inset = sim::safe_inset(sp, map);
    Rng noise(77 + static_cast<std::uint64_t>(e));
    const sim::Policy pol = [&](const sim::SimState& s,
                                const std::optional<sim::Vec2>& goal) {
      return sim::demo_policy_step(s, goal.value(), map, noise, 0.1);
    };
    const sim::Vec2 goal{map.max_x() - inset, map.origin_y + 1.25};
    sim::Episode ep =
        sim::rollout_episode(map, inset + 0.05, map.origin_y + 1.25, 0.0,
                             {goal}, sp, pol, 120, 1000 + e);
    if (static_cast<int>(ep.records.size()) >= min_len)
      eps.push_back(std::move(ep));
  }
  return eps;
}

model::ModelConfig tiny_mc() {
  model::ModelConfig mc;
  mc.d_model = 16;
  mc.enc_layers = 1;
  mc.dec_layers = 1;
  mc.heads = 2;
  mc.mlp_dim = 16;
  mc.dropout = 0.1;
  mc.history = 4;
  mc.horizon = 2;
  mc.n_context = 2;
  mc.patch_cells = 8;
  return mc;
}

const std::vector<sim::Episode>& corpus() {
  static const std::vector<sim::Episode> eps = make_corpus(6, 12);
  return eps;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig ok;
  CHECK_NOTHROW(ok.validate());
  TrainConfig bad = ok;
  bad.mask_split = 1.5;
  CHECK_THROWS(bad.validate());
  bad = ok;
  bad.lr = 0.0;
  CHECK_THROWS(bad.validate());
  bad = ok;
  bad.val_fraction = 1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("window dataset: episode-level split, window census, short skip") {
  const auto& eps = corpus();
  REQUIRE(eps.size() >= 4);
  const int T = 4, tau = 2;
  const WindowDataset ds = window_dataset(eps, T, tau, 1, 0.25, 9);

  // No validation episode appears in the training split.
  std::set<int> train_set(ds.train_episodes.begin(), ds.train_episodes.end());
  for (int e : ds.val_episodes) CHECK(train_set.count(e) == 0);
  CHECK(ds.train_episodes.size() + ds.val_episodes.size() +
            static_cast<std::size_t>(ds.skipped_short) ==
        eps.size());

  // Every window is in range, and the total matches the census.
  std::size_t expect = 0;
  for (const auto& ep : eps) {
    const auto r = static_cast<std::int64_t>(ep.records.size());
    if (r >= T + tau) expect += static_cast<std::size_t>(r - (T + tau) + 1);
  }
  CHECK(ds.train_windows.size() + ds.val_windows.size() == expect);
  for (const auto& w : ds.train_windows) {
    CHECK(w.start + T + tau <=
          static_cast<int>(eps[w.episode].records.size()));
    CHECK(train_set.count(w.episode) == 1);
  }

  // Stride 2 halves the census (per episode, rounded up).
  const WindowDataset ds2 = window_dataset(eps, T, tau, 2, 0.25, 9);
  CHECK(ds2.train_windows.size() + ds2.val_windows.size() < expect);
  CHECK(ds2.train_windows.size() + ds2.val_windows.size() >= expect / 2);

  // Same seed reproduces the same split; another seed may differ.
  const WindowDataset ds3 = window_dataset(eps, T, tau, 1, 0.25, 9);
  CHECK(ds3.train_episodes == ds.train_episodes);
  CHECK(ds3.val_episodes == ds.val_episodes);

  // Deltas: one per record, null at each episode head.
  REQUIRE(ds.deltas.size() == eps.size());
  for (std::size_t e = 0; e < eps.size(); ++e) {
    REQUIRE(ds.deltas[e].size() == eps[e].records.size());
    for (double v : ds.deltas[e][0]) CHECK(v == 0.0);
  }
}

TEST_CASE("normalization: identity on actions, z-score on deltas") {
  const auto& eps = corpus();
  const WindowDataset ds = window_dataset(eps, 4, 2, 1, 0.25, 9);
  const NormalizationStats stats = fit_normalization(ds);
  CHECK(stats.action_mean[0] == 0.0);
  CHECK(stats.action_mean[1] == 0.0);
  CHECK(stats.action_std[0] == 1.0);
  CHECK(stats.action_std[1] == 1.0);
  for (double s : stats.delta_std) CHECK(s >= 1e-6);
  CHECK(stats.patch_std >= 1e-6);

  // Round trip via JSON and via the delta helpers.
  const NormalizationStats back = NormalizationStats::from_json(stats.to_json());
  CHECK(back.delta_mean == stats.delta_mean);
  CHECK(back.delta_std == stats.delta_std);
  CHECK(back.patch_mean == stats.patch_mean);
  const std::array<double, 6> d{0.02, -0.01, 0.3, 0.0, 0.11, -0.2};
  const auto z = stats.normalize_delta(d);
  const auto d2 = stats.denormalize_delta(z);
  for (int i = 0; i < 6; ++i) CHECK(d2[i] == doctest::Approx(d[i]).epsilon(1e-12));
}

TEST_CASE("adamw: first-step hand value, decay, unset-grad skip, nan throw") {
  using ad::Tensor;
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.weight_decay = 0.0;
  Tensor p = Tensor::from_data({1}, {0.5});
  p.set_requires_grad(true);
  AdamW opt({{"p", p}}, tc);
  ad::sum_all(p).backward();  // gradient exactly 1
  opt.step();
  // First step: m_hat = v_hat = 1, so the update is lr / (1 + eps).
  const double expect = 0.5 - 1e-3 / (1.0 + 1e-8);
  CHECK(p.data()[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(opt.steps_taken() == 1);

  // Decay-only update (explicit zero gradient): p *= 1 - lr*wd.
  TrainConfig td;
  td.lr = 5e-4;
  td.weight_decay = 0.08;
  Tensor q = Tensor::from_data({1}, {2.0});
  q.set_requires_grad(true);
  AdamW od({{"q", q}}, td);
  ad::sum_all(ad::scalar_mul(q, 0.0)).backward();
  od.step();
  CHECK(q.data()[0] == doctest::Approx(2.0 * (1.0 - 5e-4 * 0.08)).epsilon(1e-14));

  // A parameter with no gradient this step is left untouched (no decay).
  Tensor r = Tensor::from_data({1}, {3.0});
  r.set_requires_grad(true);
  AdamW os({{"r", r}}, td);
  os.step();
  CHECK(r.data()[0] == 3.0);

  // Non-finite gradients are rejected by name.
  Tensor s = Tensor::from_data({1}, {1.0});
  s.set_requires_grad(true);
  AdamW on({{"spike", s}}, td);
  ad::sum_all(ad::scalar_mul(s, std::numeric_limits<double>::infinity()))
      .backward();
  bool threw = false;
  try {
    on.step();
  } catch (const std::exception& e) {
    threw = true;
    CHECK(std::string(e.what()).find("spike") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("curriculum: warmup first, then the mask split governs the mix") {
  TrainConfig tc;
  tc.warmup_epochs = 2;
  tc.mask_split = 0.5;
  Rng rng(3);
  for (int e = 0; e < 2; ++e)
    CHECK(curriculum_mode(e, rng, tc) == model::Mode::warmup);
  int fkd = 0, ikd = 0, bc = 0;
  for (int i = 0; i < 4000; ++i) {
    const model::Mode m = curriculum_mode(5, rng, tc);
    fkd += m == model::Mode::fkd;
    ikd += m == model::Mode::ikd;
    bc += m == model::Mode::bc;
  }
  CHECK(bc == 0);  // behavior cloning stays zero-shot unless enabled
  CHECK(fkd + ikd == 4000);
  CHECK(std::abs(fkd - 2000) < 150);

  tc.mask_split = 1.0;
  for (int i = 0; i < 50; ++i)
    CHECK(curriculum_mode(9, rng, tc) == model::Mode::fkd);
  tc.mask_split = 0.0;
  tc.train_bc = true;
  int ikd2 = 0, bc2 = 0;
  for (int i = 0; i < 2000; ++i) {
    const model::Mode m = curriculum_mode(9, rng, tc);
    ikd2 += m == model::Mode::ikd;
    bc2 += m == model::Mode::bc;
  }
  CHECK(ikd2 + bc2 == 2000);
  CHECK(bc2 > 700);  // roughly half once enabled
}

TEST_CASE("all four model kinds train, evaluate, and restore") {
  const auto& eps = corpus();
  const model::ModelConfig mc = tiny_mc();
  const WindowDataset ds = window_dataset(eps, mc.history, mc.horizon, 1, 0.25, 9);
  REQUIRE(!ds.train_windows.empty());
  REQUIRE(!ds.val_windows.empty());

  TrainConfig tc;
  tc.epochs = 4;
  tc.batch = 32;
  tc.warmup_epochs = 2;
  tc.seed = 5;

  for (ModelKind kind : {ModelKind::vertiformer, ModelKind::encoder,
                         ModelKind::decoder, ModelKind::end2end}) {
    CAPTURE(model_kind_name(kind));
    const TrainResult r = train(kind, ds, mc, tc);
    REQUIRE(r.log.size() == static_cast<std::size_t>(tc.epochs) + 1);
    CHECK(r.log.front().epoch == 0);
    CHECK(std::isnan(r.log.front().train_loss));  // untrained baseline row
    for (const auto& row : r.log) {
      CHECK(std::isfinite(row.val_loss));
      CHECK(!row.mode_mix.empty());
    }
    CHECK(r.best_val <= r.log.front().val_loss);
    CHECK(r.log_csv.rfind("epoch,mode_mix,train_loss,val_loss\n", 0) == 0);

    const AnyModel best = restore_model(r.best);
    CHECK(best.kind == kind);
    const NormalizationStats stats = checkpoint_stats(r.best);
    const OfflineReport rep =
        evaluate_offline(best, ds, stats, model::Mode::fkd, mc.horizon);
    CHECK(std::isfinite(rep.err_avg));
    CHECK(std::isfinite(rep.final_xy_err));
    CHECK(rep.n_windows == static_cast<int>(ds.val_windows.size()));
    CHECK(rep.eval_tau == mc.horizon);

    const TrainConfig tc2 = checkpoint_train_config(r.best);
    CHECK(tc2.epochs == tc.epochs);
    CHECK(tc2.seed == tc.seed);
  }
}

TEST_CASE("identical seeds reproduce the training run bit for bit") {
  const auto& eps = corpus();
  const model::ModelConfig mc = tiny_mc();
  const WindowDataset ds = window_dataset(eps, mc.history, mc.horizon, 1, 0.25, 9);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch = 32;
  tc.warmup_epochs = 1;
  tc.seed = 5;
  const TrainResult a = train(ModelKind::vertiformer, ds, mc, tc);
  const TrainResult b = train(ModelKind::vertiformer, ds, mc, tc);
  CHECK(a.log_csv == b.log_csv);
  REQUIRE(a.final_ckpt.tensors.size() == b.final_ckpt.tensors.size());
  for (std::size_t i = 0; i < a.final_ckpt.tensors.size(); ++i) {
    const auto ta = a.final_ckpt.tensors[i].second.data();
    const auto tb = b.final_ckpt.tensors[i].second.data();
    REQUIRE(ta.size() == tb.size());
    for (std::size_t k = 0; k < ta.size(); ++k) CHECK(ta[k] == tb[k]);
  }

  // A different seed diverges.
  TrainConfig tc3 = tc;
  tc3.seed = 6;
  const TrainResult c = train(ModelKind::vertiformer, ds, mc, tc3);
  CHECK(c.log_csv != a.log_csv);
}

TEST_CASE("divergent training aborts with a non-finite loss error") {
  const auto& eps = corpus();
  const model::ModelConfig mc = tiny_mc();
  const WindowDataset ds = window_dataset(eps, mc.history, mc.horizon, 1, 0.25, 9);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch = 32;
  tc.warmup_epochs = 0;
  tc.lr = 1e9;  // drives the parameters to overflow almost immediately
  bool threw = false;
  try {
    train(ModelKind::vertiformer, ds, mc, tc);
  } catch (const std::exception& e) {
    threw = true;
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("eval horizon rules: clamp-side errors, decoder rolls farther") {
  const auto& eps = corpus();
  const model::ModelConfig mc = tiny_mc();  // horizon 2
  const WindowDataset ds2 = window_dataset(eps, mc.history, 2, 1, 0.25, 9);
  const WindowDataset ds3 = window_dataset(eps, mc.history, 3, 1, 0.25, 9);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch = 32;
  tc.warmup_epochs = 1;

  const TrainResult vf = train(ModelKind::vertiformer, ds2, mc, tc);
  const AnyModel mvf = restore_model(vf.best);
  const NormalizationStats svf = checkpoint_stats(vf.best);
  // Shorter-than-trained horizons evaluate fine on the wider dataset.
  CHECK_NOTHROW(evaluate_offline(mvf, ds3, svf, model::Mode::fkd, 1));
  // Past the dataset's own horizon there is no ground truth: rejected.
  CHECK_THROWS(evaluate_offline(mvf, ds2, svf, model::Mode::fkd, 3));
  // Past the model's trained horizon: rejected for single-pass models.
  CHECK_THROWS(evaluate_offline(mvf, ds3, svf, model::Mode::fkd, 3));

  // The autoregressive decoder extends to any horizon the data covers.
  const TrainResult dec = train(ModelKind::decoder, ds2, mc, tc);
  const AnyModel mdec = restore_model(dec.best);
  const OfflineReport rep = evaluate_offline(mdec, ds3, checkpoint_stats(dec.best),
                                             model::Mode::fkd, 3);
  CHECK(std::isfinite(rep.err_avg));
  CHECK(rep.eval_tau == 3);
}

TEST_CASE("sequence-order probe runs both tokenizations") {
  const auto& eps = corpus();
  const WindowDataset ds = window_dataset(eps, 4, 2, 1, 0.25, 9);
  ProbeConfig pc;
  pc.mc = tiny_mc();
  pc.mc.dropout = 0.0;
  pc.epochs = 2;
  pc.batch = 32;
  pc.seed = 3;
  pc.max_train_windows = 200;
  pc.max_val_windows = 100;
  for (ProbeVariant v : {ProbeVariant::unified, ProbeVariant::separate}) {
    CAPTURE(probe_variant_name(v));
    const ProbeCurves c = sequence_order_probe(v, ds, pc);
    REQUIRE(c.val_acc.size() == static_cast<std::size_t>(pc.epochs) + 1);
    for (double acc : c.val_acc) {
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0);
    }
    CHECK(c.final_acc == c.val_acc.back());
    CHECK(c.csv.rfind("epoch,val_acc,val_loss\n", 0) == 0);
    // Deterministic rerun.
    const ProbeCurves c2 = sequence_order_probe(v, ds, pc);
    CHECK(c2.csv == c.csv);
  }
}

TEST_CASE("ablation runner: full grid, stable csv, failures isolated") {
  const auto& eps = corpus();
  const model::ModelConfig mc = tiny_mc();
  const WindowDataset ds = window_dataset(eps, mc.history, mc.horizon, 1, 0.25, 9);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch = 32;
  tc.warmup_epochs = 1;

  std::vector<AblationCell> cells;
  AblationCell cell;
  cell.study = "pe";
  cell.kind = ModelKind::vertiformer;
  cell.mc = mc;
  cell.tc = tc;
  cells.push_back(cell);
  cell.mc.pe_kind = model::PeKind::learnable;
  cells.push_back(cell);

  const AblationResult ar = ablation_runner(cells, {1, 2}, ds);
  REQUIRE(ar.rows.size() == 4);
  for (const auto& row : ar.rows) {
    CHECK(!row.failed);
    CHECK(std::isfinite(row.val_loss));
    CHECK(std::isfinite(row.report.err_avg));
  }
  CHECK(ar.csv.rfind("study,model,pe,final_norm,patch_head,tau,eval_tau,seed,"
                     "val_loss,err_x,err_y,err_z,err_avg,final_xy_err,status,"
                     "wall_ms\n",
                     0) == 0);

  // Identical rerun matches except the timing column.
  const AblationResult ar2 = ablation_runner(cells, {1, 2}, ds);
  auto strip_wall = [](std::string csv) {
    std::string out;
    for (std::size_t pos = 0; pos < csv.size();) {
      const std::size_t eol = csv.find('\n', pos);
      const std::string line = csv.substr(pos, eol - pos);
      out += line.substr(0, line.rfind(','));
      out += '\n';
      pos = eol + 1;
    }
    return out;
  };
  CHECK(strip_wall(ar.csv) == strip_wall(ar2.csv));
}
