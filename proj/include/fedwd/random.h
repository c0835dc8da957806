//
// Copyright 2026 The fedwd Authors
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
//

#ifndef FEDWD_RANDOM_H_
#define FEDWD_RANDOM_H_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace fedwd {

// Mixes a 64-bit value with the SplitMix64 finalizer.
uint64_t Mix64(uint64_t x);

// A seeded generator whose sub-streams are keyed by (label, index) rather than
// by the parent's consumption state, so a stream can be replayed from its
// path alone. `path()` is the human-readable derivation record written into
// run manifests.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Independent child stream keyed by this stream's seed, a label and an index.
  Rng Derive(std::string_view label, uint64_t index) const;

  double Uniform();         // in [0, 1)
  double OpenUniform();     // in (0, 1)
  double Normal();          // standard normal
  double Normal(double mean, double sd);
  uint64_t Next();
  // Uniform integer in [0, n).
  uint64_t Below(uint64_t n);

  uint64_t seed() const { return seed_; }
  const std::string& path() const { return path_; }
  uint64_t draws() const { return draws_; }

  std::mt19937_64& engine() { return engine_; }

 private:
  Rng(uint64_t seed, std::string path);

  uint64_t seed_;
  std::string path_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  uint64_t draws_ = 0;
};

}  // namespace fedwd

#endif  // FEDWD_RANDOM_H_
