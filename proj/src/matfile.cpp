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

#include "tdafault/matfile.hpp"

#include <zlib.h>

#include <cstring>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace tdafault {

namespace {

// Element data types.
constexpr std::uint32_t miINT8 = 1;
constexpr std::uint32_t miUINT8 = 2;
constexpr std::uint32_t miINT16 = 3;
constexpr std::uint32_t miUINT16 = 4;
constexpr std::uint32_t miINT32 = 5;
constexpr std::uint32_t miUINT32 = 6;
constexpr std::uint32_t miSINGLE = 7;
constexpr std::uint32_t miDOUBLE = 9;
constexpr std::uint32_t miINT64 = 12;
constexpr std::uint32_t miUINT64 = 13;
constexpr std::uint32_t miMATRIX = 14;
constexpr std::uint32_t miCOMPRESSED = 15;

constexpr std::size_t kHeaderSize = 128;
constexpr const char kMagic[] = "MATLAB 5.0 MAT-file";
constexpr std::uint32_t kComplexFlag = 0x0800;

std::size_t pad8(std::size_t n) { return (n + 7) & ~std::size_t{7}; }

template <typename T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

std::size_t storage_size(std::uint32_t type) {
  switch (type) {
    case miINT8:
    case miUINT8:
      return 1;
    case miINT16:
    case miUINT16:
      return 2;
    case miINT32:
    case miUINT32:
    case miSINGLE:
      return 4;
    case miDOUBLE:
    case miINT64:
    case miUINT64:
      return 8;
    default:
      return 0;
  }
}

double load_as_double(std::uint32_t type, const std::uint8_t* p) {
  switch (type) {
    case miINT8: return load<std::int8_t>(p);
    case miUINT8: return load<std::uint8_t>(p);
    case miINT16: return load<std::int16_t>(p);
    case miUINT16: return load<std::uint16_t>(p);
    case miINT32: return load<std::int32_t>(p);
    case miUINT32: return load<std::uint32_t>(p);
    case miSINGLE: return load<float>(p);
    case miDOUBLE: return load<double>(p);
    case miINT64: return static_cast<double>(load<std::int64_t>(p));
    case miUINT64: return static_cast<double>(load<std::uint64_t>(p));
    default: throw std::logic_error("unreachable storage type");
  }
}

struct Element {
  std::uint32_t type = 0;
  std::size_t data = 0;   // offset of payload within the buffer
  std::size_t bytes = 0;  // payload length
  std::size_t next = 0;   // offset of the following element
};

// Reads the tag at `pos`; `base` converts buffer offsets to file offsets for
// diagnostics.
Element read_tag(std::span<const std::uint8_t> buf, std::size_t pos, std::size_t end, std::int64_t base) {
  if (end - pos < 8)
    throw FormatError("truncated element tag", base + static_cast<std::int64_t>(pos));
  const auto first = load<std::uint32_t>(buf.data() + pos);
  Element e;
  if ((first >> 16) != 0) {
    e.type = first & 0xffff;
    e.bytes = first >> 16;
    e.data = pos + 4;
    e.next = pos + 8;
    if (e.bytes > 4) throw FormatError("small data element longer than 4 bytes", base + static_cast<std::int64_t>(pos));
    return e;
  }
  e.type = first;
  e.bytes = load<std::uint32_t>(buf.data() + pos + 4);
  e.data = pos + 8;
  if (e.bytes > end - e.data)
    throw FormatError("truncated element: type " + std::to_string(e.type) + " declares " + std::to_string(e.bytes) +
                          " bytes but only " + std::to_string(end - e.data) + " remain",
                      base + static_cast<std::int64_t>(pos));
  e.next = e.type == miCOMPRESSED ? e.data + e.bytes : std::min(end, e.data + pad8(e.bytes));
  return e;
}

struct UnsupportedArray : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<MatClass> supported_class(std::uint32_t cls) {
  switch (cls) {
    case 6: return MatClass::double_;
    case 7: return MatClass::single;
    case 10: return MatClass::int16;
    case 12: return MatClass::int32;
    default: return std::nullopt;
  }
}

void parse_matrix(std::span<const std::uint8_t> buf, const Element& m, std::int64_t base, MatFile& out) {
  const std::size_t end = m.data + m.bytes;
  std::size_t pos = m.data;
  const std::int64_t offset = base + static_cast<std::int64_t>(m.data) - 8;

  const Element flags = read_tag(buf, pos, end, base);
  if (flags.type != miUINT32 || flags.bytes != 8)
    throw FormatError("matrix array-flags subelement malformed", base + static_cast<std::int64_t>(pos));
  const auto flag_word = load<std::uint32_t>(buf.data() + flags.data);
  const std::uint32_t cls_code = flag_word & 0xff;
  pos = flags.next;

  const Element dims = read_tag(buf, pos, end, base);
  if (dims.type != miINT32 || dims.bytes % 4 != 0 || dims.bytes == 0)
    throw FormatError("matrix dimensions subelement malformed", base + static_cast<std::int64_t>(pos));
  std::vector<std::int64_t> shape;
  for (std::size_t i = 0; i < dims.bytes; i += 4) shape.push_back(load<std::int32_t>(buf.data() + dims.data + i));
  pos = dims.next;

  const Element name_el = read_tag(buf, pos, end, base);
  if (name_el.type != miINT8 && name_el.type != miUINT8)
    throw FormatError("matrix name subelement malformed", base + static_cast<std::int64_t>(pos));
  std::string name(reinterpret_cast<const char*>(buf.data() + name_el.data), name_el.bytes);
  pos = name_el.next;

  const auto cls = supported_class(cls_code);
  if (!cls) {
    out.errors.push_back({name, offset, "unsupported array class " + std::to_string(cls_code)});
    return;
  }
  if (flag_word & kComplexFlag) {
    out.errors.push_back({name, offset, "complex arrays are not supported"});
    return;
  }

  const Element real = read_tag(buf, pos, end, base);
  const std::size_t width = storage_size(real.type);
  if (width == 0) {
    out.errors.push_back({name, offset, "unsupported storage type " + std::to_string(real.type)});
    return;
  }
  if (real.bytes % width != 0) {
    out.errors.push_back({name, offset, "real part length is not a multiple of its element size"});
    return;
  }
  MatArray arr;
  arr.name = std::move(name);
  arr.shape = std::move(shape);
  arr.cls = *cls;
  const std::size_t count = real.bytes / width;
  if (static_cast<std::int64_t>(count) != arr.element_count()) {
    out.errors.push_back({arr.name, offset,
                          "element count " + std::to_string(count) + " does not match shape product " +
                              std::to_string(arr.element_count())});
    return;
  }
  arr.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) arr.values[i] = load_as_double(real.type, buf.data() + real.data + i * width);
  out.arrays.push_back(std::move(arr));
}

std::vector<std::uint8_t> inflate_all(std::span<const std::uint8_t> in, std::int64_t offset) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw FormatError("zlib initialisation failed", offset);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 15];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof chunk;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("corrupt compressed element", offset);
    }
    out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw FormatError("truncated compressed element", offset);
    }
  }
  inflateEnd(&zs);
  return out;
}

void parse_elements(std::span<const std::uint8_t> buf, std::size_t pos, std::size_t end, std::int64_t base,
                    MatFile& out) {
  while (pos < end) {
    const Element e = read_tag(buf, pos, end, base);
    const std::int64_t at = base + static_cast<std::int64_t>(pos);
    if (e.type == miMATRIX) {
      if (e.bytes > 0) parse_matrix(buf, e, base, out);
    } else if (e.type == miCOMPRESSED) {
      const auto inflated = inflate_all(buf.subspan(e.data, e.bytes), at);
      // Offsets inside a compressed element are reported against the
      // element's position in the file.
      MatFile inner;
      try {
        parse_elements(inflated, 0, inflated.size(), 0, inner);
      } catch (const FormatError& err) {
        throw FormatError(std::string("inside compressed element: ") + err.what(), at);
      }
      for (auto& a : inner.arrays) out.arrays.push_back(std::move(a));
      for (auto& er : inner.errors) out.errors.push_back({er.name, at, er.message});
      for (auto& w : inner.warnings) out.warnings.push_back(std::move(w));
    } else {
      out.warnings.push_back("skipped element of type " + std::to_string(e.type) + " at byte offset " +
                             std::to_string(at));
    }
    pos = e.next;
  }
}

void append_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&x);
  v.insert(v.end(), p, p + 4);
}

void append_padded(std::vector<std::uint8_t>& v, std::uint32_t type, const std::vector<std::uint8_t>& payload) {
  if (payload.size() <= 4 && type == miINT8) {
    append_u32(v, (static_cast<std::uint32_t>(payload.size()) << 16) | type);
    std::uint8_t small[4] = {0, 0, 0, 0};
    std::memcpy(small, payload.data(), payload.size());
    v.insert(v.end(), small, small + 4);
    return;
  }
  append_u32(v, type);
  append_u32(v, static_cast<std::uint32_t>(payload.size()));
  v.insert(v.end(), payload.begin(), payload.end());
  v.resize(v.size() + (pad8(payload.size()) - payload.size()), 0);
}

template <typename T>
void append_values(std::vector<std::uint8_t>& payload, const std::vector<double>& values) {
  for (double d : values) {
    const T x = static_cast<T>(d);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&x);
    payload.insert(payload.end(), p, p + sizeof(T));
  }
}

std::vector<std::uint8_t> matrix_element(const MatArray& a) {
  if (static_cast<std::int64_t>(a.values.size()) != a.element_count())
    throw std::invalid_argument("write_mat: '" + a.name + "' has values inconsistent with its shape");
  std::vector<std::uint8_t> body;
  std::vector<std::uint8_t> flags;
  append_u32(flags, static_cast<std::uint32_t>(a.cls));
  append_u32(flags, 0);
  append_padded(body, miUINT32, flags);

  std::vector<std::uint8_t> dims;
  for (auto d : a.shape) append_u32(dims, static_cast<std::uint32_t>(static_cast<std::int32_t>(d)));
  append_padded(body, miINT32, dims);

  append_padded(body, miINT8, std::vector<std::uint8_t>(a.name.begin(), a.name.end()));

  std::vector<std::uint8_t> real;
  std::uint32_t type = miDOUBLE;
  switch (a.cls) {
    case MatClass::double_: append_values<double>(real, a.values); type = miDOUBLE; break;
    case MatClass::single: append_values<float>(real, a.values); type = miSINGLE; break;
    case MatClass::int16: append_values<std::int16_t>(real, a.values); type = miINT16; break;
    case MatClass::int32: append_values<std::int32_t>(real, a.values); type = miINT32; break;
  }
  append_padded(body, type, real);

  std::vector<std::uint8_t> element;
  append_u32(element, miMATRIX);
  append_u32(element, static_cast<std::uint32_t>(body.size()));
  element.insert(element.end(), body.begin(), body.end());
  return element;
}

}  // namespace

std::string to_string(MatClass cls) {
  switch (cls) {
    case MatClass::double_: return "double";
    case MatClass::single: return "single";
    case MatClass::int16: return "int16";
    case MatClass::int32: return "int32";
  }
  return "unknown";
}

std::int64_t MatArray::element_count() const {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

MatFile parse_mat(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize)
    throw FormatError("file shorter than the 128-byte MAT header", static_cast<long long>(bytes.size()));
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic - 1) != 0)
    throw FormatError("bad magic: not a Level 5 MAT-file", 0);
  if (bytes[126] == 'M' && bytes[127] == 'I') throw FormatError("big-endian MAT-files are not supported", 126);
  if (bytes[126] != 'I' || bytes[127] != 'M') throw FormatError("bad endian indicator", 126);
  MatFile out;
  const auto version = load<std::uint16_t>(bytes.data() + 124);
  if (version != 0x0100) out.warnings.push_back("unexpected header version " + std::to_string(version));
  parse_elements(bytes, kHeaderSize, bytes.size(), 0, out);
  return out;
}

std::vector<std::uint8_t> write_mat(const std::vector<MatArray>& arrays, const MatWriteOptions& options) {
  std::vector<std::uint8_t> out(kHeaderSize, ' ');
  const std::size_t text = std::min<std::size_t>(options.description.size(), 116);
  std::memcpy(out.data(), options.description.data(), text);
  std::memset(out.data() + 116, 0, 8);
  const std::uint16_t version = 0x0100;
  std::memcpy(out.data() + 124, &version, 2);
  out[126] = 'I';
  out[127] = 'M';

  for (const auto& a : arrays) {
    auto element = matrix_element(a);
    if (!options.compress) {
      out.insert(out.end(), element.begin(), element.end());
      continue;
    }
    uLongf len = compressBound(static_cast<uLong>(element.size()));
    std::vector<std::uint8_t> packed(len);
    if (compress2(packed.data(), &len, element.data(), static_cast<uLong>(element.size()), Z_DEFAULT_COMPRESSION) !=
        Z_OK)
      throw std::runtime_error("write_mat: compression failed");
    packed.resize(len);
    append_u32(out, miCOMPRESSED);
    append_u32(out, static_cast<std::uint32_t>(packed.size()));
    out.insert(out.end(), packed.begin(), packed.end());
  }
  return out;
}

}  // namespace tdafault
