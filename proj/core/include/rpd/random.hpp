// Copyright 2026 The rpd Authors
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

namespace rpd {

/// Every stochastic step draws from its own std::mt19937_64 seeded with
/// derive_seed(master, stream), where derive_seed is one SplitMix64 round
/// over master + stream * golden_gamma. Streams are fixed per purpose so
/// adding a consumer never shifts another consumer's numbers.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

namespace stream {
inline constexpr std::uint64_t kTrainSamples = 1;
inline constexpr std::uint64_t kTestSamples = 2;
inline constexpr std::uint64_t kPairSampling = 3;
inline constexpr std::uint64_t kPanel = 4;
}  // namespace stream

}  // namespace rpd
