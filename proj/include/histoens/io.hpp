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

#include <filesystem>

#include "histoens/image.hpp"

namespace histoens {

/// 8-bit PNG, RGB or grayscale. Palette and alpha inputs are converted to
/// RGB; 16-bit inputs are rejected.
Image8 read_image(const std::filesystem::path &path);
void write_image(const std::filesystem::path &path, const Image8 &img);

/// 8-bit grayscale PNG holding raw class ids 0..3.
LabelMask read_mask(const std::filesystem::path &path);
void write_mask(const std::filesystem::path &path, const LabelMask &mask);

/// PMAP1 container: "PMAP1\n", "<K> <H> <W>\n", then K*H*W little-endian
/// float32 values, channel-major then row-major.
ProbMap read_probmap(const std::filesystem::path &path);
void write_probmap(const std::filesystem::path &path, const ProbMap &map);

/// In-memory codec used by the file functions above.
ProbMap decode_probmap(std::span<const std::byte> bytes);
std::vector<std::byte> encode_probmap(const ProbMap &map);

/// CSV with header `row,col,p0,...,p{K-1}`; one line per patch. The origin
/// columns are optional on read (header `p0,...` alone is accepted).
struct PatchPredictions {
  std::vector<std::pair<int, int>> origins;
  PredMatrix scores;
};
PatchPredictions read_predictions(const std::filesystem::path &path);
void write_predictions(const std::filesystem::path &path, const PatchPredictions &preds);

std::vector<std::byte> read_file_bytes(const std::filesystem::path &path);
void write_file_bytes(const std::filesystem::path &path, std::span<const std::byte> bytes);

} // namespace histoens
