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

#include "histoens/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace histoens {

namespace {

void check_dims(int h, int w, int ch) {
  require(h >= 0 && w >= 0 && ch >= 0, "negative image dimension");
}

void check_probabilities(std::span<const float> v, const char *what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float x = v[i];
    if (!std::isfinite(x)) {
      throw ValidationError(std::string(what) + ": non-finite value at index " +
                            std::to_string(i));
    }
    if (x < 0.0f || x > 1.0f) {
      throw ValidationError(std::string(what) + ": value " + std::to_string(x) +
                            " outside [0,1] at index " + std::to_string(i));
    }
  }
}

} // namespace

template <typename T>
BasicImage<T>::BasicImage(int height, int width, int channels, T fill)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels);
  samples_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                      static_cast<std::size_t>(channels),
                  fill);
  validate();
}

template <typename T>
BasicImage<T>::BasicImage(int height, int width, int channels, std::vector<T> samples)
    : height_(height), width_(width), channels_(channels), samples_(std::move(samples)) {
  check_dims(height, width, channels);
  require(samples_.size() == static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                                 static_cast<std::size_t>(channels),
          "image sample count does not match height*width*channels");
  validate();
}

template <typename T> void BasicImage<T>::validate() const {
  if constexpr (std::is_floating_point_v<T>) {
    for (T v : samples_) {
      require(std::isfinite(v), "float image contains non-finite sample");
    }
  }
}

template class BasicImage<std::uint8_t>;
template class BasicImage<float>;

ImageF to_float(const Image8 &img) {
  std::vector<float> out(img.samples().begin(), img.samples().end());
  return ImageF(img.height(), img.width(), img.channels(), std::move(out));
}

Image8 to_u8(const ImageF &img) {
  std::vector<std::uint8_t> out(img.samples().size());
  std::transform(img.samples().begin(), img.samples().end(), out.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return Image8(img.height(), img.width(), img.channels(), std::move(out));
}

LabelMask::LabelMask(int height, int width, std::uint8_t fill) : height_(height), width_(width) {
  check_dims(height, width, 1);
  require(fill < kNumClasses, "label fill value must be in 0..3");
  labels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

LabelMask::LabelMask(int height, int width, std::vector<std::uint8_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  check_dims(height, width, 1);
  require(labels_.size() == static_cast<std::size_t>(height) * static_cast<std::size_t>(width),
          "label count does not match height*width");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= kNumClasses) {
      throw ValidationError("label value " + std::to_string(labels_[i]) + " at pixel " +
                            std::to_string(i) + " is outside 0..3");
    }
  }
}

bool LabelMask::is_binary() const noexcept {
  return std::all_of(labels_.begin(), labels_.end(), [](std::uint8_t v) { return v <= 1; });
}

ProbMap::ProbMap(int classes, int height, int width, float fill)
    : classes_(classes), height_(height), width_(width) {
  check_dims(height, width, classes);
  require(std::isfinite(fill) && fill >= 0.0f && fill <= 1.0f, "ProbMap fill outside [0,1]");
  values_.assign(static_cast<std::size_t>(classes) * plane_size(), fill);
}

ProbMap::ProbMap(int classes, int height, int width, std::vector<float> values)
    : classes_(classes), height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width, classes);
  require(values_.size() == static_cast<std::size_t>(classes) * plane_size(),
          "ProbMap value count does not match K*H*W");
  check_probabilities(values_, "ProbMap");
}

bool ProbMap::is_normalized(double tol) const noexcept {
  const std::size_t n = plane_size();
  for (std::size_t p = 0; p < n; ++p) {
    double sum = 0.0;
    for (int k = 0; k < classes_; ++k) {
      sum += values_[static_cast<std::size_t>(k) * n + p];
    }
    if (std::abs(sum - 1.0) > tol) {
      return false;
    }
  }
  return true;
}

PredMatrix::PredMatrix(int rows, int cols, float fill) : rows_(rows), cols_(cols) {
  check_dims(rows, cols, 1);
  require(std::isfinite(fill) && fill >= 0.0f && fill <= 1.0f, "PredMatrix fill outside [0,1]");
  values_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

PredMatrix::PredMatrix(int rows, int cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  check_dims(rows, cols, 1);
  require(values_.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
          "PredMatrix value count does not match rows*cols");
  check_probabilities(values_, "PredMatrix");
}

} // namespace histoens
