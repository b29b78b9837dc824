// Copyright 2026 The InherNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INHERNET_CHECKPOINT_H_
#define INHERNET_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "inhernet/nn.h"

namespace inhernet {

inline constexpr char kCheckpointMagic[8] = {'I', 'N', 'H', 'E',
                                             'R', 'N', 'E', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Free-form provenance stored in the manifest next to the topology.
struct CheckpointInfo {
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
};

// Layout: 8-byte magic, u32 LE version, u64 LE manifest length, JSON
// manifest, then every tensor as little-endian f64 in manifest order.
void write_checkpoint(const Network& net, std::ostream& out,
                      const CheckpointInfo& info = {});
// Throws FormatError on a bad magic, version or manifest and
// CorruptionError (naming the layer) when the blob disagrees with the
// manifest. Never returns a partially loaded network.
Network read_checkpoint(std::istream& in, CheckpointInfo* info = nullptr);

// File variants. Saving writes a temporary file and renames it into place.
void save_checkpoint(const Network& net, const std::filesystem::path& path,
                     const CheckpointInfo& info = {});
Network load_checkpoint(const std::filesystem::path& path,
                        CheckpointInfo* info = nullptr);

// Writes `contents` to path via a sibling temporary file and rename,
// creating missing parent directories.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace inhernet

#endif  // INHERNET_CHECKPOINT_H_
