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

#include "mcreplay/error.hpp"

#include "mcreplay/tensor.hpp"

namespace mcreplay {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kInput: return "input error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kGeometry: return "geometry error";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kIo: return "I/O error";
  }
  return "error";
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace mcreplay
