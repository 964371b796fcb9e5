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

// Serial reference kernels against their OpenMP counterparts.
//
//   ./bench_kernels --benchmark_filter=Conv
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <benchmark/benchmark.h>

#include <vector>

#include "histoens/kernels.hpp"
#include "histoens/rng.hpp"

namespace k = histoens::kernels;

namespace {

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  histoens::Rng rng(seed);
  std::vector<float> v(n);
  for (auto &x : v)
    x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

k::ConvShape conv_shape(const benchmark::State &state) {
  return k::ConvShape{1, static_cast<int>(state.range(1)), static_cast<int>(state.range(1)),
                      static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 3};
}

template <auto Fn> void BM_ConvForward(benchmark::State &state) {
  const auto s = conv_shape(state);
  const auto x = random_floats(s.input_size(), 1), w = random_floats(s.weight_size(), 2),
             b = random_floats(static_cast<std::size_t>(s.out_channels), 3);
  std::vector<float> y(s.output_size());
  for (auto _ : state) {
    Fn(s, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.output_size()));
}

template <auto Fn> void BM_ConvBackwardInput(benchmark::State &state) {
  const auto s = conv_shape(state);
  const auto dy = random_floats(s.output_size(), 1), w = random_floats(s.weight_size(), 2);
  std::vector<float> dx(s.input_size());
  for (auto _ : state) {
    Fn(s, dy, w, dx);
    benchmark::DoNotOptimize(dx.data());
  }
}

template <auto Fn> void BM_ConvBackwardParams(benchmark::State &state) {
  const auto s = conv_shape(state);
  const auto x = random_floats(s.input_size(), 1), dy = random_floats(s.output_size(), 2);
  std::vector<float> dw(s.weight_size()), db(static_cast<std::size_t>(s.out_channels));
  for (auto _ : state) {
    Fn(s, x, dy, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
}

template <auto Fn> void BM_GaussianFilter(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  const auto in = random_floats(static_cast<std::size_t>(n) * n, 4);
  const auto taps = k::gaussian_taps(11, 11.0 / 6.0);
  std::vector<float> out(in.size());
  for (auto _ : state) {
    Fn(in, n, n, taps, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(in.size()));
}

template <auto Fn> void BM_Dilate(benchmark::State &state) {
  const int n = static_cast<int>(state.range(0));
  histoens::Rng rng(5);
  std::vector<std::uint8_t> in(static_cast<std::size_t>(n) * n), out(in.size());
  for (auto &v : in)
    v = rng.uniform01() < 0.2 ? 1 : 0;
  for (auto _ : state) {
    Fn(in, n, n, 11, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(in.size()));
}

void conv_args(benchmark::internal::Benchmark *b) {
  b->Args({64, 8})->Args({128, 16})->Args({256, 8})->Unit(benchmark::kMillisecond);
}

} // namespace

BENCHMARK(BM_ConvForward<k::serial::conv2d_forward>)->Name("ConvForward/serial")->Apply(conv_args);
BENCHMARK(BM_ConvForward<k::omp::conv2d_forward>)->Name("ConvForward/omp")->Apply(conv_args);
BENCHMARK(BM_ConvBackwardInput<k::serial::conv2d_backward_input>)->Name("ConvBackwardInput/serial")->Apply(conv_args);
BENCHMARK(BM_ConvBackwardInput<k::omp::conv2d_backward_input>)->Name("ConvBackwardInput/omp")->Apply(conv_args);
BENCHMARK(BM_ConvBackwardParams<k::serial::conv2d_backward_params>)
    ->Name("ConvBackwardParams/serial")
    ->Apply(conv_args);
BENCHMARK(BM_ConvBackwardParams<k::omp::conv2d_backward_params>)->Name("ConvBackwardParams/omp")->Apply(conv_args);
BENCHMARK(BM_GaussianFilter<k::serial::separable_filter_renorm>)->Name("GaussianFilter/serial")->Arg(1024);
BENCHMARK(BM_GaussianFilter<k::omp::separable_filter_renorm>)->Name("GaussianFilter/omp")->Arg(1024);
BENCHMARK(BM_Dilate<k::serial::dilate_square>)->Name("Dilate11/serial")->Arg(1024);
BENCHMARK(BM_Dilate<k::omp::dilate_square>)->Name("Dilate11/omp")->Arg(1024);

BENCHMARK_MAIN();
