// Copyright 2026 The qsync Authors
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
#include <initializer_list>
#include <limits>

namespace qsync {

/// SplitMix64 finalizer (Steele, Lea and Flood). Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/// Stable hash of a word sequence: h <- splitmix64(h ^ w) for each word,
/// starting from h = splitmix64(seed). Used for every seed derivation.
std::uint64_t hash_words(std::uint64_t seed, std::initializer_list<std::uint64_t> words);

/// run-seed = hash_words(master, {value_index, run_index}).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t value_index, std::uint64_t run_index);

/// Maps 64 random bits to a double in [0, 1) with 53 bits of resolution.
double unit_interval(std::uint64_t bits);

/// Counter-based generator: the k-th output is hash_words(key, {k}).
/// Satisfies UniformRandomBitGenerator so standard distributions accept it.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(hash_words(seed, {stream})) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return hash_words(key_, {counter_++}); }
    double uniform() { return unit_interval((*this)()); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace qsync
