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
#include <span>
#include <string>
#include <vector>

#include "histoens/image.hpp"

namespace histoens::stacking {

/// Ordered named features. For K classes (K >= 2) the layout is
///   per class: min, max, mean                        (3K)
///   per class: patches where the class is the argmax (K)
///   per class: p10, p25, p75, p90                    (4K)
///   per class: patches with probability > 0.15, > 0.25 (2K)
/// for 10K features. A single-column matrix drops the argmax block (9).
/// Percentiles interpolate linearly at position q * (P - 1) of the sorted
/// column; argmax ties go to the lowest class.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

std::vector<std::string> feature_names(int classes, const std::string &prefix = "");
FeatureVector extract_features(const PredMatrix &pred, const std::string &prefix = "");

/// One row per image. `labels` is empty when unknown.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  std::vector<double> values; ///< row-major, ids.size() x columns.size()
  std::vector<int> labels;

  std::size_t rows() const noexcept { return ids.size(); }
  std::size_t cols() const noexcept { return columns.size(); }
  double at(std::size_t r, std::size_t c) const noexcept { return values[r * columns.size() + c]; }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(values).subspan(r * columns.size(), columns.size());
  }
  bool has_labels() const noexcept { return !labels.empty(); }
  void validate() const;
};

/// Rows from feature vectors that share one name list.
FeatureTable make_table(std::vector<std::string> ids, const std::vector<FeatureVector> &rows,
                        std::vector<int> labels = {});

/// Column-wise join of tables describing the same images in the same order.
/// Column names must be unique across the inputs; labels come from the
/// first table that has them.
FeatureTable join_tables(std::span<const FeatureTable *const> tables);

/// CSV: header `image,<features...>[,label]`.
std::string table_to_csv(const FeatureTable &table);
FeatureTable table_from_csv(const std::string &text);
FeatureTable read_table(const std::filesystem::path &path);
void write_table(const std::filesystem::path &path, const FeatureTable &table);

} // namespace histoens::stacking
