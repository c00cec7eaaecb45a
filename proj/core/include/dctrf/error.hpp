// Copyright 2026 The dctrf Authors. All Rights Reserved.
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

#ifndef DCTRF_ERROR_HPP_
#define DCTRF_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace dctrf {

// Error categories. The CLI maps these onto process exit codes, so each
// corrupt-input case gets its own value.
enum class ErrorCode {
  kConfig,       // invalid configuration (usage error)
  kContract,     // precondition violated by the caller
  kIo,           // file could not be read or written
  kBadMagic,     // container does not start with the expected magic
  kBadVersion,   // unsupported format version
  kChecksum,     // CRC mismatch
  kTruncated,    // container ended early
  kCorrupt,      // structurally invalid payload
  kNonFinite,    // NaN/Inf produced during training
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dctrf

#endif  // DCTRF_ERROR_HPP_
