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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <queue>

#include "histoens/io.hpp"
#include "histoens/rng.hpp"
#include "histoens/synth.hpp"

using namespace histoens;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / "histoens_core";
  fs::create_directories(dir);
  return dir / name;
}

// 4-connected components of pixels equal to `cls`, by breadth-first search.
std::vector<std::vector<int>> regions(const LabelMask &m, int cls) {
  const int H = m.height(), W = m.width();
  std::vector<int> seen(static_cast<std::size_t>(H) * W, 0);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < H * W; ++i) {
    if (seen[i] || m.at(i / W, i % W) != cls)
      continue;
    std::vector<int> comp;
    std::queue<int> q;
    q.push(i);
    seen[i] = 1;
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      comp.push_back(p);
      const int r = p / W, c = p % W;
      const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto &n : nb)
        if (n[0] >= 0 && n[0] < H && n[1] >= 0 && n[1] < W) {
          const int j = n[0] * W + n[1];
          if (!seen[j] && m.at(n[0], n[1]) == cls) {
            seen[j] = 1;
            q.push(j);
          }
        }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

} // namespace

TEST(Rng, MatchesStandardMersenneTwister) {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i)
    v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, UniformIntCoversRangeEvenly) {
  Rng rng(3);
  std::array<int, 6> counts{};
  for (int i = 0; i < 60000; ++i) {
    const auto v = rng.uniform_int(-2, 3);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 3);
    ++counts[static_cast<std::size_t>(v + 2)];
  }
  for (int c : counts)
    EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, ForkedStreamsDiffer) {
  Rng a(1);
  Rng b = a.fork();
  Rng c = a.fork();
  EXPECT_NE(b.next_u64(), c.next_u64());
  Rng a2(1);
  EXPECT_EQ(a2.fork().next_u64(), Rng(1).fork().next_u64());
}

TEST(Image, ToU8RoundsHalfAwayAndSaturates) {
  ImageF f(1, 5, 1, std::vector<float>{-3.0f, 0.5f, 1.49f, 254.5f, 300.0f});
  const Image8 u = to_u8(f);
  EXPECT_EQ(u.at(0, 0), 0);
  EXPECT_EQ(u.at(0, 1), 1);
  EXPECT_EQ(u.at(0, 2), 1);
  EXPECT_EQ(u.at(0, 3), 255);
  EXPECT_EQ(u.at(0, 4), 255);
}

TEST(Image, RejectsInvalidValues) {
  EXPECT_THROW(LabelMask(1, 2, std::vector<std::uint8_t>{0, 4}), ValidationError);
  EXPECT_THROW(ProbMap(1, 1, 2, std::vector<float>{0.5f, 1.5f}), ValidationError);
  EXPECT_THROW(ProbMap(1, 1, 1, std::vector<float>{std::nanf("")}), ValidationError);
  EXPECT_THROW(ProbMap(1, 2, 2, std::vector<float>{0.1f}), ValidationError);
  EXPECT_THROW(PredMatrix(1, 1, std::vector<float>{-0.1f}), ValidationError);
}

TEST(Image, NormalizedProbMap) {
  ProbMap p(2, 1, 2, std::vector<float>{0.3f, 1.0f, 0.7f, 0.0f});
  EXPECT_TRUE(p.is_normalized());
  p.set(0, 0, 0, 0.4f);
  EXPECT_FALSE(p.is_normalized());
}

TEST(Io, PngRoundTrip) {
  Rng rng(2);
  Image8 rgb(7, 5, 3), gray(4, 9, 1);
  for (auto &v : rgb.samples())
    v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  for (auto &v : gray.samples())
    v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  write_image(scratch("rgb.png"), rgb);
  write_image(scratch("gray.png"), gray);
  EXPECT_EQ(read_image(scratch("rgb.png")), rgb);
  EXPECT_EQ(read_image(scratch("gray.png")), gray);

  LabelMask m(6, 6);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      m.set(r, c, static_cast<std::uint8_t>((r + c) % 4));
  write_mask(scratch("mask.png"), m);
  EXPECT_EQ(read_mask(scratch("mask.png")), m);
}

TEST(Io, MaskRejectsColorPng) {
  write_image(scratch("color.png"), Image8(2, 2, 3));
  EXPECT_THROW(read_mask(scratch("color.png")), FormatError);
}

TEST(Io, CorruptPngReportsOffset) {
  write_image(scratch("ok.png"), Image8(3, 3, 1, 7));
  auto bytes = read_file_bytes(scratch("ok.png"));
  auto bad_sig = bytes;
  bad_sig[1] = std::byte{'X'};
  write_file_bytes(scratch("badsig.png"), bad_sig);
  try {
    read_image(scratch("badsig.png"));
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  auto bad_crc = bytes;
  bad_crc[20] ^= std::byte{0xFF}; // inside the IHDR payload
  write_file_bytes(scratch("badcrc.png"), bad_crc);
  try {
    read_image(scratch("badcrc.png"));
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 8u);
  }
  bytes.resize(bytes.size() - 6);
  write_file_bytes(scratch("short.png"), bytes);
  EXPECT_THROW(read_image(scratch("short.png")), FormatError);
}

TEST(Io, ProbMapCodec) {
  ProbMap p(2, 2, 3, std::vector<float>{0, 0.25f, 0.5f, 1, 0.125f, 0.75f, 1, 0.75f, 0.5f, 0, 0.875f, 0.25f});
  const auto bytes = encode_probmap(p);
  const std::string head(reinterpret_cast<const char *>(bytes.data()), 12);
  EXPECT_EQ(head, "PMAP1\n2 2 3\n");
  EXPECT_EQ(bytes.size(), 12u + 12u * 4u);
  EXPECT_EQ(decode_probmap(bytes), p);

  auto bad = bytes;
  bad[0] = std::byte{'Q'};
  EXPECT_THROW(decode_probmap(bad), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  try {
    decode_probmap(truncated);
    FAIL();
  } catch (const FormatError &e) {
    EXPECT_EQ(e.offset(), 12u);
  }
  auto out_of_range = bytes;
  const float big = 2.0f;
  std::memcpy(out_of_range.data() + 12, &big, 4);
  EXPECT_THROW(decode_probmap(out_of_range), ValidationError);
}

TEST(Io, PredictionsCsvRoundTrip) {
  PatchPredictions p;
  p.origins = {{0, 0}, {0, 100}, {100, 0}};
  p.scores = PredMatrix(3, 2, std::vector<float>{0.1f, 0.9f, 0.5f, 0.5f, 1.0f, 0.0f});
  write_predictions(scratch("p.csv"), p);
  const auto q = read_predictions(scratch("p.csv"));
  EXPECT_EQ(q.origins, p.origins);
  EXPECT_EQ(q.scores, p.scores);
}

TEST(Synth, DeterministicPerSeed) {
  SynthSpec spec;
  spec.height = spec.width = 128;
  Rng a(9), b(9), c(10);
  const auto s1 = synth_slide(spec, a), s2 = synth_slide(spec, b), s3 = synth_slide(spec, c);
  EXPECT_EQ(s1.image, s2.image);
  EXPECT_EQ(s1.mask, s2.mask);
  EXPECT_NE(s1.mask, s3.mask);
}

TEST(Synth, BlobsAreSeparateSolidRegions) {
  SynthSpec spec;
  spec.height = spec.width = 256;
  spec.priors = {0.6, 0.1, 0.1, 0.2};
  spec.min_blobs = 1;
  spec.max_blobs = 3;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto s = synth_slide(spec, rng);
    const LabelMask &m = s.mask;
    for (int cls = 1; cls <= 3; ++cls) {
      const auto blobs = regions(m, cls);
      EXPECT_GE(static_cast<int>(blobs.size()), spec.min_blobs) << "seed " << seed << " class " << cls;
      EXPECT_LE(static_cast<int>(blobs.size()), spec.max_blobs) << "seed " << seed << " class " << cls;
    }
    // Abnormal pixels of different classes are never 4-adjacent.
    for (int r = 0; r < m.height(); ++r)
      for (int c = 0; c + 1 < m.width(); ++c) {
        const int a = m.at(r, c), b = m.at(r, c + 1);
        ASSERT_FALSE(a > 0 && b > 0 && a != b);
        if (r + 1 < m.height()) {
          const int d = m.at(r + 1, c);
          ASSERT_FALSE(a > 0 && d > 0 && a != d);
        }
      }
    // Hole-free: every Normal pixel connects to the border through Normal.
    const auto normal = regions(m, 0);
    for (const auto &comp : normal) {
      const bool touches = std::any_of(comp.begin(), comp.end(), [&](int p) {
        const int r = p / m.width(), c = p % m.width();
        return r == 0 || c == 0 || r == m.height() - 1 || c == m.width() - 1;
      });
      EXPECT_TRUE(touches) << "seed " << seed;
    }
  }
}

TEST(Synth, PriorsAreApproximated) {
  SynthSpec spec;
  spec.height = spec.width = 512;
  spec.priors = {0.7, 0.05, 0.05, 0.2};
  Rng rng(4);
  const auto s = synth_slide(spec, rng);
  std::array<double, 4> frac{};
  for (auto v : s.mask.labels())
    frac[v] += 1.0 / static_cast<double>(s.mask.size());
  for (int k = 0; k < 4; ++k)
    EXPECT_NEAR(frac[k], spec.priors[k], 0.05) << "class " << k;
}

TEST(Synth, ValidatesSpec) {
  SynthSpec spec;
  spec.priors = {0.5, 0.1, 0.1, 0.1};
  EXPECT_THROW(spec.validate(), ValidationError);
  spec = SynthSpec{};
  spec.min_blobs = 3;
  spec.max_blobs = 2;
  EXPECT_THROW(spec.validate(), ValidationError);
}
