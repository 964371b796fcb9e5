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

#include "histoens/io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace histoens {

namespace fs = std::filesystem;

std::vector<std::byte> read_file_bytes(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) {
    throw ValidationError("short read on " + path.string());
  }
  return bytes;
}

void write_file_bytes(const fs::path &path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw ValidationError("write failed on " + path.string());
  }
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace {

struct PngHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int bit_depth = 0;
  int color_type = 0;
};

std::uint32_t load_be32(const std::byte *p) {
  return (std::to_integer<std::uint32_t>(p[0]) << 24) | (std::to_integer<std::uint32_t>(p[1]) << 16) |
         (std::to_integer<std::uint32_t>(p[2]) << 8) | std::to_integer<std::uint32_t>(p[3]);
}

// Walks the chunk list so structural damage is reported with an offset
// before libpng sees the data.
PngHeader scan_png(std::span<const std::byte> bytes, const std::string &name) {
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSig, 8) != 0) {
    throw FormatError(name + ": not a PNG file (bad signature)", 0);
  }
  PngHeader hdr;
  std::size_t off = 8;
  bool first = true;
  bool seen_end = false;
  while (off < bytes.size()) {
    if (bytes.size() - off < 12) {
      throw FormatError(name + ": truncated chunk header", off);
    }
    const std::uint32_t len = load_be32(bytes.data() + off);
    if (len > bytes.size() - off - 12) {
      throw FormatError(name + ": chunk length exceeds file size", off);
    }
    const std::byte *type = bytes.data() + off + 4;
    const std::string_view tag(reinterpret_cast<const char *>(type), 4);
    const std::uint32_t stored = load_be32(type + 4 + len);
    const auto crc = static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef *>(type), len + 4));
    if (crc != stored) {
      throw FormatError(name + ": CRC mismatch in chunk " + std::string(tag), off);
    }
    if (first) {
      if (tag != "IHDR" || len != 13) {
        throw FormatError(name + ": first chunk is not a valid IHDR", off);
      }
      const std::byte *d = type + 4;
      hdr.width = load_be32(d);
      hdr.height = load_be32(d + 4);
      hdr.bit_depth = std::to_integer<int>(d[8]);
      hdr.color_type = std::to_integer<int>(d[9]);
      first = false;
    }
    if (tag == "IEND") {
      seen_end = true;
      off += 12 + len;
      break;
    }
    off += 12 + len;
  }
  if (first) {
    throw FormatError(name + ": no chunks after signature", 8);
  }
  if (!seen_end) {
    throw FormatError(name + ": missing IEND chunk", off);
  }
  if (hdr.bit_depth == 16) {
    throw FormatError(name + ": 16-bit PNG is not supported", 24);
  }
  return hdr;
}

std::vector<std::uint8_t> decode_png(std::span<const std::byte> bytes, std::uint32_t format,
                                     const std::string &name, int &height, int &width) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(name + ": " + image.message, 0);
  }
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(name + ": " + msg, bytes.size());
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buf;
}

void encode_png(const fs::path &path, const std::uint8_t *data, int height, int width,
                std::uint32_t format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw ValidationError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

} // namespace

Image8 read_image(const fs::path &path) {
  const auto bytes = read_file_bytes(path);
  const PngHeader hdr = scan_png(bytes, path.string());
  const bool gray = (hdr.color_type & PNG_COLOR_MASK_COLOR) == 0 &&
                    (hdr.color_type & PNG_COLOR_MASK_PALETTE) == 0;
  int h = 0;
  int w = 0;
  auto buf = decode_png(bytes, gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB, path.string(), h, w);
  return Image8(h, w, gray ? 1 : 3, std::move(buf));
}

void write_image(const fs::path &path, const Image8 &img) {
  require(img.channels() == 1 || img.channels() == 3, "write_image: only 1 or 3 channels supported");
  require(!img.empty(), "write_image: empty image");
  encode_png(path, img.samples().data(), img.height(), img.width(),
             img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB);
}

LabelMask read_mask(const fs::path &path) {
  const auto bytes = read_file_bytes(path);
  const PngHeader hdr = scan_png(bytes, path.string());
  if (hdr.color_type != PNG_COLOR_TYPE_GRAY || hdr.bit_depth != 8) {
    throw FormatError(path.string() + ": mask must be 8-bit grayscale", 25);
  }
  int h = 0;
  int w = 0;
  auto buf = decode_png(bytes, PNG_FORMAT_GRAY, path.string(), h, w);
  try {
    return LabelMask(h, w, std::move(buf));
  } catch (const ValidationError &e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_mask(const fs::path &path, const LabelMask &mask) {
  require(mask.size() > 0, "write_mask: empty mask");
  encode_png(path, mask.labels().data(), mask.height(), mask.width(), PNG_FORMAT_GRAY);
}

// ---------------------------------------------------------------------------
// PMAP
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kPmapMagic = "PMAP1\n";

// Reads a '\n'-terminated line starting at `off`.
std::string_view take_line(std::span<const std::byte> bytes, std::size_t &off) {
  const auto *begin = reinterpret_cast<const char *>(bytes.data()) + off;
  const auto *end = reinterpret_cast<const char *>(bytes.data()) + bytes.size();
  const auto *nl = std::find(begin, end, '\n');
  if (nl == end) {
    throw FormatError("PMAP: unterminated header line", off);
  }
  off += static_cast<std::size_t>(nl - begin) + 1;
  return {begin, static_cast<std::size_t>(nl - begin)};
}

} // namespace

ProbMap decode_probmap(std::span<const std::byte> bytes) {
  if (bytes.size() < kPmapMagic.size() ||
      std::memcmp(bytes.data(), kPmapMagic.data(), kPmapMagic.size()) != 0) {
    throw FormatError("PMAP: magic mismatch", 0);
  }
  std::size_t off = kPmapMagic.size();
  const std::size_t header_off = off;
  const std::string_view header = take_line(bytes, off);

  long long dims[3] = {0, 0, 0};
  const char *p = header.data();
  const char *end = header.data() + header.size();
  for (int i = 0; i < 3; ++i) {
    if (i > 0) {
      if (p == end || *p != ' ') {
        throw FormatError("PMAP: header must be '<K> <H> <W>'", header_off);
      }
      ++p;
    }
    auto [next, ec] = std::from_chars(p, end, dims[i]);
    if (ec != std::errc() || dims[i] < 0 || dims[i] > (1LL << 30)) {
      throw FormatError("PMAP: bad header field", header_off + static_cast<std::size_t>(p - header.data()));
    }
    p = next;
  }
  if (p != end) {
    throw FormatError("PMAP: trailing characters in header", header_off);
  }

  const auto count = static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  if (bytes.size() - off != count * 4) {
    throw FormatError("PMAP: payload is " + std::to_string(bytes.size() - off) + " bytes, expected " +
                          std::to_string(count * 4),
                      off);
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, bytes.data() + off + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap32(bits);
    }
    values[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(values[i]) || values[i] < 0.0f || values[i] > 1.0f) {
      throw ValidationError("PMAP: value " + std::to_string(values[i]) +
                            " outside [0,1] at byte offset " + std::to_string(off + 4 * i));
    }
  }
  return ProbMap(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
                 std::move(values));
}

std::vector<std::byte> encode_probmap(const ProbMap &map) {
  const std::string header = std::string(kPmapMagic) + std::to_string(map.classes()) + " " +
                             std::to_string(map.height()) + " " + std::to_string(map.width()) + "\n";
  std::vector<std::byte> out(header.size() + map.values().size() * 4);
  std::memcpy(out.data(), header.data(), header.size());
  std::size_t off = header.size();
  for (float v : map.values()) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap32(bits);
    }
    std::memcpy(out.data() + off, &bits, 4);
    off += 4;
  }
  return out;
}

ProbMap read_probmap(const fs::path &path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_probmap(bytes);
  } catch (const FormatError &e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

void write_probmap(const fs::path &path, const ProbMap &map) {
  write_file_bytes(path, encode_probmap(map));
}

// ---------------------------------------------------------------------------
// Patch prediction CSV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  return out;
}

} // namespace

PatchPredictions read_predictions(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + ": empty predictions file");
  }
  const auto header = split_csv(line);
  const bool has_origin = header.size() >= 2 && header[0] == "row" && header[1] == "col";
  const std::size_t first = has_origin ? 2 : 0;
  const int cols = static_cast<int>(header.size() - first);
  require(cols >= 1, path.string() + ": no probability columns");

  PatchPredictions out;
  std::vector<float> values;
  int rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " columns");
    }
    try {
      if (has_origin) {
        out.origins.emplace_back(std::stoi(cells[0]), std::stoi(cells[1]));
      }
      for (std::size_t i = first; i < cells.size(); ++i) {
        values.push_back(std::stof(cells[i]));
      }
    } catch (const std::logic_error &) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
    ++rows;
  }
  out.scores = PredMatrix(rows, cols, std::move(values));
  return out;
}

void write_predictions(const fs::path &path, const PatchPredictions &preds) {
  const bool has_origin = !preds.origins.empty();
  require(!has_origin || static_cast<int>(preds.origins.size()) == preds.scores.rows(),
          "write_predictions: origin count does not match rows");
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot open " + path.string() + " for writing");
  }
  if (has_origin) {
    out << "row,col,";
  }
  for (int c = 0; c < preds.scores.cols(); ++c) {
    out << (c ? "," : "") << 'p' << c;
  }
  out << '\n';
  char buf[32];
  for (int r = 0; r < preds.scores.rows(); ++r) {
    if (has_origin) {
      out << preds.origins[static_cast<std::size_t>(r)].first << ','
          << preds.origins[static_cast<std::size_t>(r)].second << ',';
    }
    for (int c = 0; c < preds.scores.cols(); ++c) {
      // Shortest round-trip representation.
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, preds.scores.at(r, c));
      out << (c ? "," : "") << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
}

} // namespace histoens
