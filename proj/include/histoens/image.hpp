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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "histoens/error.hpp"

namespace histoens {

/// Row-major, channel-interleaved raster. Sample (r, c, ch) lives at
/// `(r * width + c) * channels + ch`.
template <typename T> class BasicImage {
public:
  using value_type = T;

  BasicImage() = default;
  BasicImage(int height, int width, int channels, T fill = T{});
  BasicImage(int height, int width, int channels, std::vector<T> samples);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const noexcept { return samples_.empty(); }

  T &at(int r, int c, int ch = 0) noexcept { return samples_[index(r, c, ch)]; }
  const T &at(int r, int c, int ch = 0) const noexcept { return samples_[index(r, c, ch)]; }

  std::span<T> samples() noexcept { return samples_; }
  std::span<const T> samples() const noexcept { return samples_; }

  bool operator==(const BasicImage &) const = default;

private:
  std::size_t index(int r, int c, int ch) const noexcept {
    return (static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(c)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(ch);
  }
  void validate() const;

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<T> samples_;
};

using Image8 = BasicImage<std::uint8_t>;
using ImageF = BasicImage<float>;

ImageF to_float(const Image8 &img);
/// Rounds half away from zero and saturates to [0, 255].
Image8 to_u8(const ImageF &img);

/// Per-pixel class ids. Values are 0 (Normal), 1 (Benign), 2 (InSitu),
/// 3 (Invasive); binary masks use {0, 1}.
class LabelMask {
public:
  static constexpr std::uint8_t kNumClasses = 4;

  LabelMask() = default;
  LabelMask(int height, int width, std::uint8_t fill = 0);
  LabelMask(int height, int width, std::vector<std::uint8_t> labels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return labels_.size(); }

  std::uint8_t at(int r, int c) const noexcept {
    return labels_[static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(c)];
  }
  /// Unchecked write; callers must keep values within 0..3.
  void set(int r, int c, std::uint8_t v) noexcept {
    labels_[static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(c)] = v;
  }

  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::span<std::uint8_t> labels() noexcept { return labels_; }

  bool is_binary() const noexcept;
  bool same_shape(const LabelMask &o) const noexcept {
    return height_ == o.height_ && width_ == o.width_;
  }
  bool operator==(const LabelMask &) const = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> labels_;
};

/// Channel-major then row-major probabilities in [0, 1].
class ProbMap {
public:
  ProbMap() = default;
  ProbMap(int classes, int height, int width, float fill = 0.0f);
  /// Throws ValidationError on NaN/Inf or values outside [0, 1].
  ProbMap(int classes, int height, int width, std::vector<float> values);

  int classes() const noexcept { return classes_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  float at(int k, int r, int c) const noexcept { return values_[index(k, r, c)]; }
  /// Unchecked write; callers keep the [0, 1] invariant.
  void set(int k, int r, int c, float v) noexcept { values_[index(k, r, c)] = v; }

  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> plane(int k) const noexcept {
    return std::span<const float>(values_).subspan(static_cast<std::size_t>(k) * plane_size(),
                                                   plane_size());
  }

  /// True when every pixel's class distribution sums to 1 within `tol`.
  bool is_normalized(double tol = 1e-5) const noexcept;
  bool same_shape(const ProbMap &o) const noexcept {
    return classes_ == o.classes_ && height_ == o.height_ && width_ == o.width_;
  }
  bool operator==(const ProbMap &) const = default;

private:
  std::size_t index(int k, int r, int c) const noexcept {
    return static_cast<std::size_t>(k) * plane_size() +
           static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c);
  }

  int classes_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> values_;
};

/// P x K row-major matrix of per-patch class probabilities.
class PredMatrix {
public:
  PredMatrix() = default;
  PredMatrix(int rows, int cols, float fill = 0.0f);
  PredMatrix(int rows, int cols, std::vector<float> values);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  float at(int r, int c) const noexcept { return values_[index(r, c)]; }
  void set(int r, int c, float v) noexcept { values_[index(r, c)] = v; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(int r) const noexcept {
    return std::span<const float>(values_).subspan(index(r, 0), static_cast<std::size_t>(cols_));
  }
  bool operator==(const PredMatrix &) const = default;

private:
  std::size_t index(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> values_;
};

} // namespace histoens
