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

#include "io/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace vtf::io {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian");

constexpr char kMagic[8] = {'V', 'T', 'F', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const std::string& buf, std::size_t at) {
  std::uint64_t v;
  std::memcpy(&v, buf.data() + at, 8);
  return v;
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  std::uint64_t h = seed;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kPrime;
  }
  return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json index = json::array();
  std::string payload;
  for (const auto& [name, tensor] : ckpt.tensors) {
    json entry;
    entry["name"] = name;
    entry["dtype"] = tensor.dtype() == ad::DType::f32 ? "f32" : "f64";
    entry["shape"] = tensor.shape();
    index.push_back(std::move(entry));
    if (tensor.dtype() == ad::DType::f32) {
      for (double v : tensor.data()) {
        const float f = static_cast<float>(v);
        char buf[4];
        std::memcpy(buf, &f, 4);
        payload.append(buf, 4);
      }
    } else {
      const auto d = tensor.data();
      payload.append(reinterpret_cast<const char*>(d.data()),
                     d.size() * sizeof(double));
    }
  }
  json meta;
  meta["config"] = ckpt.config_json;
  meta["stats"] = ckpt.stats_json;
  meta["tensors"] = std::move(index);
  const std::string meta_str = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::string blob;
  blob.append(kMagic, 8);
  put_u64(blob, meta_str.size());
  blob += meta_str;
  put_u64(blob, payload.size());
  blob += payload;
  put_u64(blob, fnv1a(payload.data(), payload.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 24 || std::memcmp(blob.data(), kMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a checkpoint file");
  }
  std::size_t at = 8;
  const std::uint64_t meta_len = get_u64(blob, at);
  at += 8;
  if (at + meta_len + 8 > blob.size()) {
    throw std::runtime_error(path + ": truncated checkpoint");
  }
  json meta;
  try {
    meta = json::parse(blob.substr(at, meta_len));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": bad metadata: " + e.what());
  }
  at += meta_len;
  const std::uint64_t payload_len = get_u64(blob, at);
  at += 8;
  if (at + payload_len + 8 > blob.size()) {
    throw std::runtime_error(path + ": truncated payload");
  }
  const char* payload = blob.data() + at;
  const std::uint64_t stored = get_u64(blob, at + payload_len);
  if (fnv1a(payload, payload_len) != stored) {
    throw std::runtime_error(path + ": checksum mismatch");
  }

  Checkpoint ckpt;
  ckpt.config_json = meta.at("config").get<std::string>();
  ckpt.stats_json = meta.at("stats").get<std::string>();
  std::size_t off = 0;
  for (const auto& entry : meta.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::string dtype_str = entry.at("dtype").get<std::string>();
    const ad::DType dtype =
        dtype_str == "f32" ? ad::DType::f32 : ad::DType::f64;
    ad::Shape shape = entry.at("shape").get<ad::Shape>();
    const std::size_t n = static_cast<std::size_t>(ad::numel_of(shape));
    const std::size_t bytes = n * (dtype == ad::DType::f32 ? 4 : 8);
    if (off + bytes > payload_len) {
      throw std::runtime_error(path + ": tensor " + name +
                               " overruns payload");
    }
    std::vector<double> values(n);
    if (dtype == ad::DType::f32) {
      for (std::size_t i = 0; i < n; ++i) {
        float f;
        std::memcpy(&f, payload + off + i * 4, 4);
        values[i] = static_cast<double>(f);
      }
    } else {
      std::memcpy(values.data(), payload + off, bytes);
    }
    off += bytes;
    ckpt.tensors.emplace_back(
        name, ad::Tensor::from_data(std::move(shape), std::move(values),
                                    dtype));
  }
  if (off != payload_len) {
    throw std::runtime_error(path + ": payload size mismatch");
  }
  return ckpt;
}

}  // namespace vtf::io
