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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/rng.h"
#include "io/checkpoint.h"
#include "io/data_gen.h"
#include "io/episode_io.h"
#include "io/run_config.h"

using namespace vtf;
using namespace vtf::io;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "vtf_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

sim::Episode random_episode(Rng& rng, int n_records, int patch) {
  sim::Episode ep;
  ep.dt = 1.0 / 3.0;
  ep.patch_h = patch;
  ep.patch_w = patch;
  ep.map_seed = rng.uniform_index(1u << 30);
  for (int t = 0; t < n_records; ++t) {
    sim::EpisodeRecord r;
    r.pose = {rng.normal(), rng.normal(), rng.normal(),
              rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
              rng.uniform(-3.0, 3.0)};
    r.action = t == 0 ? geo::Action{} : geo::Action{rng.uniform(-1.0, 1.0),
                                                    rng.uniform(-1.0, 1.0)};
    for (int i = 0; i < patch * patch; ++i) r.patch.push_back(rng.normal());
    ep.records.push_back(std::move(r));
  }
  return ep;
}

}  // namespace

TEST_CASE("format_double: shortest form that parses back exactly") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-12.0, 12.0));
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("episode file: write-read-write is byte-identical") {
  const auto dir = temp_dir();
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(30));
    const int patch = 2 + static_cast<int>(rng.uniform_index(4));
    const sim::Episode ep = random_episode(rng, n, patch);
    const std::string p1 = (dir / "ep_a.jsonl").string();
    const std::string p2 = (dir / "ep_b.jsonl").string();
    write_episode(p1, ep);
    const sim::Episode back = read_episode(p1);
    write_episode(p2, back);
    REQUIRE(read_bytes(p1) == read_bytes(p2));

    REQUIRE(back.records.size() == ep.records.size());
    CHECK(back.dt == ep.dt);
    CHECK(back.map_seed == ep.map_seed);
    for (std::size_t i = 0; i < ep.records.size(); ++i) {
      CHECK(back.records[i].pose.x == ep.records[i].pose.x);
      CHECK(back.records[i].pose.yaw == ep.records[i].pose.yaw);
      CHECK(back.records[i].action.throttle == ep.records[i].action.throttle);
      CHECK(back.records[i].patch == ep.records[i].patch);
    }
  }

  // The format is line-oriented text with LF newlines only.
  const std::string bytes = read_bytes((dir / "ep_a.jsonl").string());
  CHECK(bytes.find('\r') == std::string::npos);
  CHECK(bytes.back() == '\n');
}

TEST_CASE("episode read rejects truncated and corrupted files") {
  const auto dir = temp_dir();
  Rng rng(9);
  const sim::Episode ep = random_episode(rng, 5, 2);
  const std::string path = (dir / "ep_bad.jsonl").string();
  write_episode(path, ep);
  std::string bytes = read_bytes(path);

  // Drop the last record line: header count no longer matches.
  const auto cut = bytes.rfind('\n', bytes.size() - 2);
  std::ofstream(path, std::ios::binary) << bytes.substr(0, cut + 1);
  CHECK_THROWS(read_episode(path));

  CHECK_THROWS(read_episode((dir / "does_not_exist.jsonl").string()));
}

TEST_CASE("manifest round trip") {
  const auto dir = temp_dir();
  Manifest m;
  m.episodes.push_back({"ep_000.jsonl", 120, 7});
  m.episodes.push_back({"ep_001.jsonl", 88, 8});
  m.total_steps = 208;
  const std::string path = (dir / "manifest.json").string();
  write_manifest(path, m);
  const Manifest back = read_manifest(path);
  REQUIRE(back.episodes.size() == 2);
  CHECK(back.total_steps == 208);
  CHECK(back.episodes[0].file == "ep_000.jsonl");
  CHECK(back.episodes[1].steps == 88);
  CHECK(back.episodes[1].seed == 8);

  write_manifest(path, back);
  const std::string once = read_bytes(path);
  write_manifest(path, read_manifest(path));
  CHECK(read_bytes(path) == once);
}

TEST_CASE("checkpoint: bit-exact round trip, checksum catches corruption") {
  const auto dir = temp_dir();
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Checkpoint ck;
    ck.config_json = R"({"kind":"vertiformer","n":)" + std::to_string(trial) + "}";
    ck.stats_json = R"({"mean":[0.25,-1.5]})";
    const int n_tensors = 1 + static_cast<int>(rng.uniform_index(5));
    for (int i = 0; i < n_tensors; ++i) {
      const auto dtype = rng.uniform() < 0.3 ? ad::DType::f32 : ad::DType::f64;
      ck.tensors.emplace_back(
          "t" + std::to_string(i),
          ad::Tensor::randn({2 + static_cast<std::int64_t>(rng.uniform_index(4)), 3},
                            rng, 1.0, dtype));
    }
    const std::string path = (dir / "model.ckpt").string();
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.config_json == ck.config_json);
    CHECK(back.stats_json == ck.stats_json);
    REQUIRE(back.tensors.size() == ck.tensors.size());
    for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
      CHECK(back.tensors[i].first == ck.tensors[i].first);
      const auto a = ck.tensors[i].second.data();
      const auto b = back.tensors[i].second.data();
      REQUIRE(a.size() == b.size());
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
    }

    // Save -> load -> save reproduces the same bytes.
    const std::string path2 = (dir / "model2.ckpt").string();
    save_checkpoint(path2, back);
    CHECK(read_bytes(path) == read_bytes(path2));
  }

  // Flip one payload byte: the checksum must reject the file.
  Checkpoint ck;
  ck.tensors.emplace_back("w", ad::Tensor::from_data({3}, {1.0, 2.0, 3.0}));
  const std::string path = (dir / "corrupt.ckpt").string();
  save_checkpoint(path, ck);
  std::string bytes = read_bytes(path);
  bytes[bytes.size() - 12] ^= 0x40;  // inside the last tensor payload
  std::ofstream(path, std::ios::binary) << bytes;
  CHECK_THROWS(load_checkpoint(path));
}

TEST_CASE("config_hash: canonical over key order, sensitive to values") {
  const json a = json::parse(R"({"alpha":1,"beta":{"x":2.5,"y":"s"}})");
  const json b = json::parse(R"({"beta":{"y":"s","x":2.5},"alpha":1})");
  CHECK(config_hash(a) == config_hash(b));
  json c = a;
  c["beta"]["x"] = 2.5000001;
  CHECK(config_hash(c) != config_hash(a));
}

TEST_CASE("model/train config json round trips") {
  model::ModelConfig mc;
  mc.d_model = 32;
  mc.pe_kind = model::PeKind::learnable;
  mc.final_norm = false;
  mc.horizon = 6;
  mc.n_context = 6;
  const model::ModelConfig mc2 = model_config_from_json(model_config_to_json(mc));
  CHECK(mc2.d_model == 32);
  CHECK(mc2.pe_kind == model::PeKind::learnable);
  CHECK(mc2.final_norm == false);
  CHECK(mc2.horizon == 6);
  CHECK(config_hash(model_config_to_json(mc)) ==
        config_hash(model_config_to_json(mc2)));

  training::TrainConfig tc;
  tc.lr = 3e-4;
  tc.epochs = 7;
  tc.mask_split = 0.25;
  tc.train_bc = true;
  const training::TrainConfig tc2 = train_config_from_json(train_config_to_json(tc));
  CHECK(tc2.lr == 3e-4);
  CHECK(tc2.epochs == 7);
  CHECK(tc2.mask_split == 0.25);
  CHECK(tc2.train_bc == true);
}

TEST_CASE("run config: defaults, strict keys, shared-section mirroring") {
  const RunConfig defaults = load_run_config("");
  CHECK(defaults.model.d_model == 64);
  CHECK(defaults.train.epochs == 50);
  CHECK(defaults.sim.dt == doctest::Approx(1.0 / 3.0));

  // Round trip through JSON preserves the hash.
  const json j = run_config_to_json(defaults);
  const RunConfig back = run_config_from_json(j);
  CHECK(config_hash(run_config_to_json(back)) == config_hash(j));

  // Shared sections propagate into the composite configs.
  json edit = j;
  edit["sim"]["v_max"] = 0.7;
  edit["terrain"]["h_max"] = 0.4;
  edit["cost"]["lambda"] = 0.9;
  const RunConfig rc = run_config_from_json(edit);
  CHECK(rc.sim.v_max == 0.7);
  CHECK(rc.data.sim.v_max == 0.7);
  CHECK(rc.run.sim.v_max == 0.7);
  CHECK(rc.data.terrain.h_max == 0.4);
  CHECK(rc.run.terrain.h_max == 0.4);
  CHECK(rc.run.cost.lambda == 0.9);

  // Unknown keys are rejected with the section and key named.
  json bad = j;
  bad["train"]["learning_rate"] = 1e-3;
  bool threw = false;
  try {
    run_config_from_json(bad);
  } catch (const std::exception& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("train") != std::string::npos);
    CHECK(msg.find("learning_rate") != std::string::npos);
  }
  CHECK(threw);

  CHECK_THROWS(load_run_config((temp_dir() / "missing_config.json").string()));
}

TEST_CASE("corpus generation: deterministic files, loadable manifest") {
  const auto dir = temp_dir() / "corpus_a";
  const auto dir2 = temp_dir() / "corpus_b";
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
  std::filesystem::create_directories(dir);
  std::filesystem::create_directories(dir2);

  DataGenConfig cfg;
  cfg.duration_s = 30.0;  // a few short episodes
  cfg.seed = 21;
  cfg.sim.patch_cells = 8;
  const Manifest m1 = generate_corpus(cfg, dir.string());
  const Manifest m2 = generate_corpus(cfg, dir2.string());
  REQUIRE(!m1.episodes.empty());
  CHECK(m1.total_steps >= 30.0 / cfg.sim.dt);
  REQUIRE(m1.episodes.size() == m2.episodes.size());
  for (std::size_t i = 0; i < m1.episodes.size(); ++i) {
    CHECK(read_bytes((dir / m1.episodes[i].file).string()) ==
          read_bytes((dir2 / m2.episodes[i].file).string()));
  }

  const auto episodes = load_corpus((dir / "manifest.json").string());
  CHECK(episodes.size() == m1.episodes.size());
  std::int64_t steps = 0;
  for (const auto& ep : episodes)
    steps += static_cast<std::int64_t>(ep.records.size()) - 1;
  CHECK(steps == m1.total_steps);

  // Duration zero yields an empty corpus with a valid, empty manifest.
  const auto dir0 = temp_dir() / "corpus_0";
  std::filesystem::remove_all(dir0);
  std::filesystem::create_directories(dir0);
  DataGenConfig zero = cfg;
  zero.duration_s = 0.0;
  const Manifest m0 = generate_corpus(zero, dir0.string());
  CHECK(m0.episodes.empty());
  CHECK(m0.total_steps == 0);
  CHECK(load_corpus((dir0 / "manifest.json").string()).empty());
}
