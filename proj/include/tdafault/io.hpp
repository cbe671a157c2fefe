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

// File helpers shared by the pipeline stages: CSV series and matrices,
// JSON documents, content hashing.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdafault/types.hpp"

namespace tdafault {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

// One sample per line. Blank lines and a non-numeric first line (header) are
// skipped; a leading "# sample_rate_hz=<fs>" comment carries the rate.
struct SeriesCsv {
  Vector<double> samples;
  std::optional<double> sample_rate_hz;
};
SeriesCsv parse_series_csv(const std::string& text);
std::string series_csv(const Eigen::Ref<const Vector<double>>& samples, std::optional<double> sample_rate_hz);

// Header row of column names, then one row per matrix row.
std::string matrix_csv(const Matrix<double>& m, const std::vector<std::string>& columns);
Matrix<double> parse_matrix_csv(const std::string& text, std::vector<std::string>* columns = nullptr);

}  // namespace tdafault
