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

#ifndef VTF_IO_CHECKPOINT_H_
#define VTF_IO_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adcore/tensor.h"

namespace vtf::io {

// FNV-1a 64-bit over a byte buffer; the checkpoint integrity checksum.
std::uint64_t fnv1a(const void* data, std::size_t len,
                    std::uint64_t seed = 14695981039346656037ULL);

// On-disk model container: a JSON metadata block (verbatim config snapshot,
// normalization stats, tensor index) followed by raw little-endian tensor
// payloads (8 bytes/value for f64, 4 for f32) and an FNV-1a checksum of the
// payload. Load is bit-exact: f32 tensors hold float-representable values by
// construction.
struct Checkpoint {
  std::string config_json = "{}";
  std::string stats_json = "{}";
  std::vector<std::pair<std::string, ad::Tensor>> tensors;  // ordered
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vtf::io

#endif  // VTF_IO_CHECKPOINT_H_
