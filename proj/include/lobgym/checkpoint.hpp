// Copyright 2026 The lobgym Authors
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lobgym/errors.hpp"
#include "lobgym/ppo.hpp"

namespace lobgym {

inline constexpr char kCheckpointMagic[8] = {'L', 'O', 'B', 'G', 'Y', 'M', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointArray {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<double> data;
};

/// Training state on disk: header fields plus named arrays. The arrays cover
/// network parameters, Adam moments and step counts, normalization
/// statistics and the reward history, which is enough for a resumed run to
/// continue bit-identically.
struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t episodes_done = 0;
    std::uint64_t rounds_done = 0;
    std::vector<CheckpointArray> arrays;

    const CheckpointArray* find(const std::string& name) const;
};

/// Raised when a checkpoint cannot be read or does not fit the configured
/// networks. The message carries the manifest diff.
class CheckpointError : public RuntimeFault {
public:
    using RuntimeFault::RuntimeFault;
};

Checkpoint make_checkpoint(const TrainState& state, std::uint64_t config_hash, std::uint64_t seed);
/// Writes to a temporary sibling, then renames over `path`.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Rejects a bad magic or version, then checks the trailing checksum.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// One line per array whose presence or shape differs; empty when they
/// match. Variable-length history arrays are not compared.
std::string manifest_diff(const Checkpoint& expected, const Checkpoint& actual);

/// Overwrite `state` from `ckpt`. Throws CheckpointError with the manifest
/// diff when shapes disagree.
void restore(const Checkpoint& ckpt, TrainState& state);

}  // namespace lobgym
