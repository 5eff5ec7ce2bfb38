/* Copyright 2026 The mcreplay Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mcreplay {

// Categories mirror the status codes exposed through the C API.
enum class ErrorCode {
  kDimension = 1,
  kNumeric,
  kInput,
  kParse,
  kUnsupportedFormat,
  kGeometry,
  kConfig,
  kIo,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// The message is only materialized on failure when passed as a literal.
template <typename Message>
inline void check(bool ok, ErrorCode code, Message&& message) {
  if (!ok) [[unlikely]] fail(code, std::string(std::forward<Message>(message)));
}

}  // namespace mcreplay
