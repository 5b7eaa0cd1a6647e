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

#include "training/dataset.h"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "core/rng.h"
#include "geometry/pose.h"

namespace vtf::training {

namespace {

constexpr double kStdFloor = 1e-6;

// Running population mean/std per channel.
struct Accum {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
  double stddev() const {
    if (n == 0) return 1.0;
    const double m = mean();
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
    return std::max(kStdFloor, std::sqrt(var));
  }
};

}  // namespace

std::array<double, 6> NormalizationStats::normalize_delta(
    const std::array<double, 6>& d) const {
  std::array<double, 6> out;
  for (int i = 0; i < 6; ++i) out[i] = (d[i] - delta_mean[i]) / delta_std[i];
  return out;
}

std::array<double, 6> NormalizationStats::denormalize_delta(
    const std::array<double, 6>& d) const {
  std::array<double, 6> out;
  for (int i = 0; i < 6; ++i) out[i] = d[i] * delta_std[i] + delta_mean[i];
  return out;
}

std::string NormalizationStats::to_json() const {
  nlohmann::json j;
  j["action_mean"] = action_mean;
  j["action_std"] = action_std;
  j["delta_mean"] = delta_mean;
  j["delta_std"] = delta_std;
  j["patch_mean"] = patch_mean;
  j["patch_std"] = patch_std;
  return j.dump();
}

NormalizationStats NormalizationStats::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  NormalizationStats s;
  j.at("action_mean").get_to(s.action_mean);
  j.at("action_std").get_to(s.action_std);
  j.at("delta_mean").get_to(s.delta_mean);
  j.at("delta_std").get_to(s.delta_std);
  j.at("patch_mean").get_to(s.patch_mean);
  j.at("patch_std").get_to(s.patch_std);
  return s;
}

WindowDataset window_dataset(const std::vector<sim::Episode>& episodes,
                             int history, int horizon, int stride,
                             double val_fraction, std::uint64_t split_seed) {
  if (stride < 1) throw std::invalid_argument("window_dataset: stride >= 1");
  if (history < 1 || horizon < 1) {
    throw std::invalid_argument("window_dataset: need history, horizon >= 1");
  }
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw std::invalid_argument("window_dataset: val_fraction in [0, 1)");
  }

  WindowDataset ds;
  ds.episodes = &episodes;
  ds.history = history;
  ds.horizon = horizon;
  ds.stride = stride;

  ds.deltas.resize(episodes.size());
  std::vector<int> usable;
  const int span = history + horizon;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& recs = episodes[e].records;
    auto& dl = ds.deltas[e];
    dl.resize(recs.size());
    if (!recs.empty()) dl[0] = {};  // an episode starts with a zero delta
    for (std::size_t k = 1; k < recs.size(); ++k) {
      dl[k] = geo::to_array(
          geo::relative(recs[k - 1].pose, recs[k].pose));
    }
    if (static_cast<int>(recs.size()) < span) {
      ++ds.skipped_short;
    } else {
      usable.push_back(static_cast<int>(e));
    }
  }

  // Episode-level split: seeded Fisher-Yates over usable episodes, first
  // chunk becomes validation.
  std::vector<int> order = usable;
  Rng rng(split_seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(order[i - 1], order[j]);
  }
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(order.size())));
  if (val_fraction > 0.0 && n_val == 0 && order.size() > 1) n_val = 1;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? ds.val_episodes : ds.train_episodes).push_back(order[i]);
  }
  std::sort(ds.train_episodes.begin(), ds.train_episodes.end());
  std::sort(ds.val_episodes.begin(), ds.val_episodes.end());

  const auto emit = [&](const std::vector<int>& eps, std::vector<Window>& out) {
    for (int e : eps) {
      const int len = static_cast<int>(episodes[e].records.size());
      for (int start = 0; start + span <= len; start += stride) {
        out.push_back(Window{e, start});
      }
    }
  };
  emit(ds.train_episodes, ds.train_windows);
  emit(ds.val_episodes, ds.val_windows);
  return ds;
}

NormalizationStats fit_normalization(const WindowDataset& ds) {
  if (ds.train_windows.empty()) {
    throw std::invalid_argument("fit_normalization: no training windows");
  }
  std::array<Accum, 2> act;
  std::array<Accum, 6> del;
  Accum pat;
  const int span = ds.history + ds.horizon;
  for (const Window& w : ds.train_windows) {
    const auto& ep = (*ds.episodes)[w.episode];
    for (int k = 0; k < span; ++k) {
      const auto& rec = ep.records[static_cast<std::size_t>(w.start + k)];
      act[0].add(rec.action.throttle);
      act[1].add(rec.action.steering);
      const auto& d = ds.deltas[w.episode][static_cast<std::size_t>(w.start + k)];
      for (int i = 0; i < 6; ++i) del[i].add(d[i]);
      for (double v : rec.patch) pat.add(v);
    }
  }
  NormalizationStats s;
  for (int i = 0; i < 2; ++i) {
    s.action_mean[i] = act[i].mean();
    s.action_std[i] = act[i].stddev();
  }
  for (int i = 0; i < 6; ++i) {
    s.delta_mean[i] = del[i].mean();
    s.delta_std[i] = del[i].stddev();
  }
  s.patch_mean = pat.mean();
  s.patch_std = pat.stddev();
  return s;
}

Batch make_batch(const WindowDataset& ds, std::span<const Window> windows,
                 const NormalizationStats& stats, ad::DType dtype) {
  const std::int64_t B = static_cast<std::int64_t>(windows.size());
  if (B == 0) throw std::invalid_argument("make_batch: empty batch");
  const std::int64_t T = ds.history;
  const std::int64_t tau = ds.horizon;
  const auto& ep0 = (*ds.episodes)[windows[0].episode];
  const std::int64_t pd =
      static_cast<std::int64_t>(ep0.patch_h) * ep0.patch_w;

  std::vector<double> ha(static_cast<std::size_t>(B * T * 2));
  std::vector<double> hd(static_cast<std::size_t>(B * T * 6));
  std::vector<double> hp(static_cast<std::size_t>(B * T * pd));
  std::vector<double> fa(static_cast<std::size_t>(B * tau * 2));
  std::vector<double> fd(static_cast<std::size_t>(B * tau * 6));
  std::vector<double> fp(static_cast<std::size_t>(B * tau * pd));

  for (std::int64_t b = 0; b < B; ++b) {
    const Window& w = windows[static_cast<std::size_t>(b)];
    const auto& ep = (*ds.episodes)[w.episode];
    const auto& dl = ds.deltas[w.episode];
    for (std::int64_t k = 0; k < T + tau; ++k) {
      const auto& rec = ep.records[static_cast<std::size_t>(w.start + k)];
      const auto nd = stats.normalize_delta(dl[static_cast<std::size_t>(w.start + k)]);
      const bool hist = k < T;
      const std::int64_t s = hist ? k : k - T;
      double* pa = (hist ? ha.data() + (b * T + s) * 2
                         : fa.data() + (b * tau + s) * 2);
      pa[0] = rec.action.throttle;
      pa[1] = rec.action.steering;
      double* pdl = (hist ? hd.data() + (b * T + s) * 6
                          : fd.data() + (b * tau + s) * 6);
      for (int i = 0; i < 6; ++i) pdl[i] = nd[i];
      double* pp = (hist ? hp.data() + (b * T + s) * pd
                         : fp.data() + (b * tau + s) * pd);
      for (std::int64_t i = 0; i < pd; ++i) {
        pp[i] = stats.normalize_patch(rec.patch[static_cast<std::size_t>(i)]);
      }
    }
  }

  Batch out;
  out.hist_actions = ad::Tensor::from_data({B, T, 2}, std::move(ha), dtype);
  out.hist_deltas = ad::Tensor::from_data({B, T, 6}, std::move(hd), dtype);
  out.hist_patches = ad::Tensor::from_data({B, T, pd}, std::move(hp), dtype);
  out.fut_actions = ad::Tensor::from_data({B, tau, 2}, std::move(fa), dtype);
  out.fut_deltas = ad::Tensor::from_data({B, tau, 6}, std::move(fd), dtype);
  out.fut_patches = ad::Tensor::from_data({B, tau, pd}, std::move(fp), dtype);
  return out;
}

}  // namespace vtf::training
