// Copyright 2026 The tdafault Authors. All Rights Reserved.
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

// Level-5 MAT-file subset: little-endian files holding real numeric
// matrices (double, single, int16, int32), optionally zlib-compressed.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tdafault/types.hpp"

namespace tdafault {

enum class MatClass : std::uint8_t { double_ = 6, single = 7, int16 = 10, int32 = 12 };

std::string to_string(MatClass cls);

struct MatArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> values;  // column-major, as stored
  MatClass cls = MatClass::double_;

  std::int64_t element_count() const;
  bool operator==(const MatArray&) const = default;
};

// An array that was recognised but could not be decoded.
struct MatArrayError {
  std::string name;
  std::int64_t offset = 0;
  std::string message;
};

struct MatFile {
  std::vector<MatArray> arrays;
  std::vector<MatArrayError> errors;
  std::vector<std::string> warnings;
};

// Throws FormatError on a bad header or a truncated element.
MatFile parse_mat(std::span<const std::uint8_t> bytes);

struct MatWriteOptions {
  bool compress = false;
  std::string description = "MATLAB 5.0 MAT-file, written by tdafault";
};

std::vector<std::uint8_t> write_mat(const std::vector<MatArray>& arrays, const MatWriteOptions& options = {});

}  // namespace tdafault
