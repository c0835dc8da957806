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

#include "fedwd/random.h"

#include "absl/strings/str_cat.h"
#include "fedwd/status.h"

namespace fedwd {
namespace {

uint64_t HashLabel(std::string_view label) {
  // FNV-1a.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : Rng(seed, absl::StrCat(seed)) {}

Rng::Rng(uint64_t seed, std::string path)
    : seed_(seed), path_(std::move(path)), engine_(Mix64(seed)) {}

Rng Rng::Derive(std::string_view label, uint64_t index) const {
  const uint64_t child =
      Mix64(Mix64(seed_ ^ HashLabel(label)) + Mix64(index + 0x632be59bd9b4e019ULL));
  return Rng(child, absl::StrCat(path_, "/", ToAbsl(label), ":", index));
}

uint64_t Rng::Next() {
  ++draws_;
  return engine_();
}

double Rng::Uniform() {
  // 53 random bits.
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

double Rng::OpenUniform() {
  return (static_cast<double>(Next() >> 12) + 0.5) * 0x1.0p-52;
}

double Rng::Normal() {
  ++draws_;
  return normal_(engine_);
}

double Rng::Normal(double mean, double sd) { return mean + sd * Normal(); }

uint64_t Rng::Below(uint64_t n) {
  std::uniform_int_distribution<uint64_t> dist(0, n - 1);
  ++draws_;
  return dist(engine_);
}

}  // namespace fedwd
