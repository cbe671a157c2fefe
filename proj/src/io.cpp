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

#include "tdafault/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tdafault {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(const std::string& text) {
  return sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_bytes(path)); }

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    fn(std::string_view(text).substr(start, end - start), ++line_no);
    start = end + 1;
  }
}

}  // namespace

SeriesCsv parse_series_csv(const std::string& text) {
  SeriesCsv out;
  std::vector<double> values;
  bool seen_content = false;
  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const auto line = trim(raw);
    if (line.empty()) return;
    if (line.front() == '#') {
      const std::string_view key = "sample_rate_hz=";
      auto body = trim(line.substr(1));
      if (body.substr(0, key.size()) == key) {
        double fs = 0;
        if (!parse_number(body.substr(key.size()), fs) || !(fs > 0))
          throw FormatError("series CSV: bad sample rate on line " + std::to_string(line_no));
        out.sample_rate_hz = fs;
      }
      return;
    }
    const auto field = split_commas(line).front();
    double v = 0;
    if (!parse_number(field, v)) {
      if (!seen_content) {
        seen_content = true;  // header
        return;
      }
      throw FormatError("series CSV: non-numeric value on line " + std::to_string(line_no));
    }
    if (!std::isfinite(v)) throw FormatError("series CSV: non-finite value on line " + std::to_string(line_no));
    seen_content = true;
    values.push_back(v);
  });
  out.samples = Eigen::Map<const Vector<double>>(values.data(), static_cast<Index>(values.size()));
  return out;
}

std::string series_csv(const Eigen::Ref<const Vector<double>>& samples, std::optional<double> sample_rate_hz) {
  std::string out;
  out.reserve(static_cast<std::size_t>(samples.size()) * 22 + 64);
  if (sample_rate_hz) out += "# sample_rate_hz=" + format_double(*sample_rate_hz) + "\n";
  out += "value\n";
  for (Index i = 0; i < samples.size(); ++i) {
    out += format_double(samples(i));
    out += '\n';
  }
  return out;
}

std::string matrix_csv(const Matrix<double>& m, const std::vector<std::string>& columns) {
  if (static_cast<Index>(columns.size()) != m.cols())
    throw std::invalid_argument("matrix_csv: column name count does not match matrix width");
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += columns[c];
  }
  out += '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

Matrix<double> parse_matrix_csv(const std::string& text, std::vector<std::string>* columns) {
  std::vector<std::vector<double>> rows;
  bool header_done = false;
  std::size_t width = 0;
  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') return;
    const auto fields = split_commas(line);
    if (!header_done) {
      header_done = true;
      double probe = 0;
      if (!parse_number(fields.front(), probe)) {
        width = fields.size();
        if (columns) {
          columns->clear();
          for (auto f : fields) columns->emplace_back(f);
        }
        return;
      }
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw FormatError("matrix CSV: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(width));
    std::vector<double> row(width);
    for (std::size_t i = 0; i < width; ++i)
      if (!parse_number(fields[i], row[i]) || !std::isfinite(row[i]))
        throw FormatError("matrix CSV: bad number on line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  });
  Matrix<double> m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

}  // namespace tdafault
