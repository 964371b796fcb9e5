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

// Data-parallel inner loops. Each kernel has two implementations:
//   serial::  direct textbook loops, kept as the reference for tests and
//             benchmarks;
//   omp::     reordered, vectorizable loops parallelized with OpenMP.
// The unqualified functions dispatch to omp::. Every omp:: kernel assigns
// each output element to exactly one thread and sums in a fixed order, so
// results do not depend on the thread count.

#include <cstdint>
#include <span>
#include <vector>

namespace histoens::kernels {

/// Stride-1, zero "same"-padded 2-D convolution with a square odd kernel.
/// Layouts: x [n][cin][h][w], weights [cout][cin][k][k], y [n][cout][h][w].
struct ConvShape {
  int batch = 1;
  int in_channels = 1;
  int out_channels = 1;
  int height = 1;
  int width = 1;
  int kernel = 3;

  std::size_t input_size() const noexcept {
    return static_cast<std::size_t>(batch) * in_channels * height * width;
  }
  std::size_t output_size() const noexcept {
    return static_cast<std::size_t>(batch) * out_channels * height * width;
  }
  std::size_t weight_size() const noexcept {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  }
};

namespace serial {
void conv2d_forward(const ConvShape &s, std::span<const float> x, std::span<const float> weights,
                    std::span<const float> bias, std::span<float> y);
/// Overwrites dx.
void conv2d_backward_input(const ConvShape &s, std::span<const float> dy,
                           std::span<const float> weights, std::span<float> dx);
/// Accumulates into dweights and dbias.
void conv2d_backward_params(const ConvShape &s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dweights, std::span<float> dbias);

/// Correlates a single-channel plane with `taps` (odd length) along rows
/// then columns, dividing each output by the sum of the taps that landed
/// inside the image.
void separable_filter_renorm(std::span<const float> in, int height, int width,
                             std::span<const double> taps, std::span<float> out);

/// Max / min over the size x size window clipped to the image.
void dilate_square(std::span<const std::uint8_t> in, int height, int width, int size,
                   std::span<std::uint8_t> out);
void erode_square(std::span<const std::uint8_t> in, int height, int width, int size,
                  std::span<std::uint8_t> out);
} // namespace serial

namespace omp {
void conv2d_forward(const ConvShape &s, std::span<const float> x, std::span<const float> weights,
                    std::span<const float> bias, std::span<float> y);
void conv2d_backward_input(const ConvShape &s, std::span<const float> dy,
                           std::span<const float> weights, std::span<float> dx);
void conv2d_backward_params(const ConvShape &s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dweights, std::span<float> dbias);
void separable_filter_renorm(std::span<const float> in, int height, int width,
                             std::span<const double> taps, std::span<float> out);
void dilate_square(std::span<const std::uint8_t> in, int height, int width, int size,
                   std::span<std::uint8_t> out);
void erode_square(std::span<const std::uint8_t> in, int height, int width, int size,
                  std::span<std::uint8_t> out);
} // namespace omp

using omp::conv2d_backward_input;
using omp::conv2d_backward_params;
using omp::conv2d_forward;
using omp::dilate_square;
using omp::erode_square;
using omp::separable_filter_renorm;

/// Normalized 1-D Gaussian taps exp(-i^2 / (2 sigma^2)), i in [-size/2, size/2].
std::vector<double> gaussian_taps(int size, double sigma);

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

} // namespace histoens::kernels
