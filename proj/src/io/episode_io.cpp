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

#include "io/episode_io.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace vtf::io {

namespace {

using nlohmann::json;

void append_array(std::string& out, const double* v, std::size_t n) {
  out += '[';
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
}

json parse_line(const std::string& line, const std::string& path, int lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) +
                             ": malformed episode line");
  }
  return j;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_episode(const std::string& path, const sim::Episode& episode) {
  std::ofstream out = open_out(path);
  std::string line;
  line += R"({"version":1,"dt":)";
  line += format_double(episode.dt);
  line += ",\"patch_h\":" + std::to_string(episode.patch_h);
  line += ",\"patch_w\":" + std::to_string(episode.patch_w);
  line += ",\"n_records\":" + std::to_string(episode.records.size());
  line += ",\"map_seed\":" + std::to_string(episode.map_seed);
  line += "}\n";
  out << line;
  for (std::size_t t = 0; t < episode.records.size(); ++t) {
    const sim::EpisodeRecord& r = episode.records[t];
    line.clear();
    line += "{\"t\":" + std::to_string(t) + ",\"pose\":";
    const auto pose = geo::to_array(r.pose);
    append_array(line, pose.data(), pose.size());
    line += ",\"action\":";
    const double act[2] = {r.action.throttle, r.action.steering};
    append_array(line, act, 2);
    line += ",\"patch\":";
    append_array(line, r.patch.data(), r.patch.size());
    line += "}\n";
    out << line;
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

sim::Episode read_episode(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty episode file");
  }
  const json header = parse_line(line, path, 1);
  if (header.value("version", 0) != 1) {
    throw std::runtime_error(path + ": unsupported episode version");
  }
  sim::Episode ep;
  ep.dt = header.at("dt").get<double>();
  ep.patch_h = header.at("patch_h").get<int>();
  ep.patch_w = header.at("patch_w").get<int>();
  ep.map_seed = header.at("map_seed").get<std::uint64_t>();
  const auto n_records = header.at("n_records").get<std::size_t>();
  ep.records.reserve(n_records);
  const std::size_t patch_len =
      static_cast<std::size_t>(ep.patch_h) * ep.patch_w;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse_line(line, path, lineno);
    sim::EpisodeRecord r;
    const auto& pose = j.at("pose");
    const auto& action = j.at("action");
    const auto& patch = j.at("patch");
    if (pose.size() != 6 || action.size() != 2 || patch.size() != patch_len) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": wrong field lengths");
    }
    std::array<double, 6> p6;
    for (int i = 0; i < 6; ++i) p6[i] = pose[i].get<double>();
    r.pose = geo::pose_from_array(p6);
    r.action = {action[0].get<double>(), action[1].get<double>()};
    r.patch.resize(patch_len);
    for (std::size_t i = 0; i < patch_len; ++i)
      r.patch[i] = patch[i].get<double>();
    ep.records.push_back(std::move(r));
  }
  if (ep.records.size() != n_records) {
    throw std::runtime_error(path + ": header claims " +
                             std::to_string(n_records) + " records, found " +
                             std::to_string(ep.records.size()));
  }
  return ep;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out = open_out(path);
  out << "{\"version\":1,\"episodes\":[";
  for (std::size_t i = 0; i < manifest.episodes.size(); ++i) {
    const ManifestEntry& e = manifest.episodes[i];
    if (i) out << ',';
    out << "\n  {\"file\":" << json(e.file).dump()
        << ",\"steps\":" << e.steps << ",\"seed\":" << e.seed << "}";
  }
  out << "\n],\"total_steps\":" << manifest.total_steps << "}\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (j.value("version", 0) != 1) {
    throw std::runtime_error(path + ": unsupported manifest version");
  }
  Manifest m;
  m.total_steps = j.at("total_steps").get<std::int64_t>();
  for (const auto& e : j.at("episodes")) {
    m.episodes.push_back({e.at("file").get<std::string>(),
                          e.at("steps").get<std::int64_t>(),
                          e.at("seed").get<std::uint64_t>()});
  }
  return m;
}

}  // namespace vtf::io
