// Copyright 2026 The strsbp Authors
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

#ifndef STRSBP_ERROR_H_
#define STRSBP_ERROR_H_

#include <stdexcept>
#include <string>

namespace strsbp {

// Failure categories. The numeric values double as process exit codes for
// the command-line tool.
enum class ErrorCode {
  kValidation = 1,
  kData = 2,
  kNumeric = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline Error ValidationError(const std::string& message) {
  return Error(ErrorCode::kValidation, message);
}
inline Error DataError(const std::string& message) {
  return Error(ErrorCode::kData, message);
}
inline Error NumericError(const std::string& message) {
  return Error(ErrorCode::kNumeric, message);
}

}  // namespace strsbp

#endif  // STRSBP_ERROR_H_
