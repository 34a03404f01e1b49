// Copyright 2026 The aoisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software distributed
// under the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR
// CONDITIONS OF ANY KIND, either express or implied.

#ifndef AOI_TYPES_HPP_
#define AOI_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace aoi {

using Slot = std::int64_t;

// Feedback delay in slots; nullopt means acknowledgements never arrive.
using FeedbackDelay = std::optional<Slot>;

inline constexpr FeedbackDelay kNoFeedback = std::nullopt;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Observation record that no generation path can explain.
class ObservationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aoi

#endif  // AOI_TYPES_HPP_
