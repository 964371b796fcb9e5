/**
 * Copyright (c) histoens Contributors. See CONTRIBUTORS file.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace histoens {

/// Input violates a documented invariant (bad label value, wrong shape,
/// out-of-range parameter). The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A file could not be decoded. Carries the byte offset at which decoding
/// stopped making sense.
class FormatError : public ValidationError {
public:
  FormatError(const std::string &what, std::uint64_t offset)
      : ValidationError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

/// A score whose normalizer is zero; raised instead of returning NaN.
class UndefinedScoreError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

inline void require(bool cond, const std::string &msg) {
  if (!cond) {
    throw ValidationError(msg);
  }
}

} // namespace histoens
