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

#include "histoens/nn/train.hpp"

#include <algorithm>
#include <cmath>

#include "histoens/error.hpp"
#include "histoens/nn/losses.hpp"
#include "histoens/nn/ops.hpp"

namespace histoens::nn {

Tensor images_to_tensor(std::span<const ImageF> images, float scale) {
  require(!images.empty(), "images_to_tensor: no images");
  const int H = images[0].height(), W = images[0].width(), C = images[0].channels();
  Tensor t({static_cast<int>(images.size()), C, H, W});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const ImageF &img = images[n];
    require(img.height() == H && img.width() == W && img.channels() == C,
            "images_to_tensor: images differ in shape");
    for (int c = 0; c < C; ++c)
      for (int r = 0; r < H; ++r)
        for (int q = 0; q < W; ++q)
          t.at(static_cast<int>(n), c, r, q) = img.at(r, q, c) * scale;
  }
  return t;
}

namespace {

std::vector<float> crop_plane(const std::vector<float> &plane, int width, PatchOrigin o, int ph, int pw) {
  std::vector<float> out(static_cast<std::size_t>(ph) * pw);
  for (int r = 0; r < ph; ++r)
    std::copy_n(plane.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(o.row + r) * width + o.col),
                pw, out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * pw));
  return out;
}

LabelMask binarize(const LabelMask &m) {
  std::vector<std::uint8_t> out(m.labels().begin(), m.labels().end());
  for (auto &v : out)
    v = v > 0 ? 1 : 0;
  return LabelMask(m.height(), m.width(), std::move(out));
}

} // namespace

TrainHistory train_segmentation(const Model &model, std::span<const Image8> images,
                                std::span<const LabelMask> masks, const SegTrainConfig &config, Rng &rng) {
  require(!images.empty() && images.size() == masks.size(), "train_segmentation: need matching images and masks");
  require(config.epochs >= 1 && config.steps_per_epoch >= 1 && config.batch >= 1,
          "train_segmentation: epochs, steps and batch must be >= 1");
  std::vector<ImageF> floats;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<float>> weights;
  for (std::size_t i = 0; i < images.size(); ++i) {
    require(images[i].height() == masks[i].height() && images[i].width() == masks[i].width(),
            "train_segmentation: image/mask size mismatch");
    floats.push_back(to_float(images[i]));
    means.push_back(channel_means(floats.back()));
    if (config.loss == SegLoss::WeightedBoundary)
      weights.push_back(boundary_weights(binarize(masks[i]), config.boundary_ramp));
  }

  Adam adam(model.parameters(), config.adam);
  TrainHistory history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int step = 0; step < config.steps_per_epoch; ++step) {
      std::vector<ImageF> batch_images;
      std::vector<float> target;
      std::vector<float> batch_weights;
      std::vector<int> labels;
      for (int b = 0; b < config.batch; ++b) {
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(images.size()) - 1));
        const int H = floats[idx].height(), W = floats[idx].width();
        PatchSpec spec{H, W, 1};
        PatchOrigin origin{0, 0};
        if (config.patch > 0) {
          spec = PatchSpec{config.patch, config.patch, 1};
          origin = random_origin(H, W, spec, rng);
        }
        batch_images.push_back(preprocess_patch(floats[idx], origin, spec, config.scope, means[idx]));
        const LabelMask m = crop(masks[idx], origin, spec.patch_h, spec.patch_w);
        for (std::uint8_t v : m.labels()) {
          target.push_back(v > 0 ? 1.0f : 0.0f);
          labels.push_back(v);
        }
        if (config.loss == SegLoss::WeightedBoundary) {
          const auto w = crop_plane(weights[idx], W, origin, spec.patch_h, spec.patch_w);
          batch_weights.insert(batch_weights.end(), w.begin(), w.end());
        }
      }
      Var x(images_to_tensor(batch_images));
      Var logits = model.forward(x);
      Var loss;
      switch (config.loss) {
      case SegLoss::Binary:
        require(logits.value().dim(1) == 1, "binary loss needs a single-channel output");
        loss = binary_logloss(sigmoid(logits), Tensor(logits.shape(), std::move(target)));
        break;
      case SegLoss::WeightedBoundary:
        require(logits.value().dim(1) == 1, "weighted-boundary loss needs a single-channel output");
        loss = weighted_boundary_logloss(sigmoid(logits), Tensor(logits.shape(), std::move(target)),
                                         Tensor(logits.shape(), std::move(batch_weights)));
        break;
      case SegLoss::Multiclass:
        loss = softmax_ce(logits, labels);
        break;
      }
      model.zero_grad();
      backward(loss);
      adam.step(epoch);
      epoch_loss += loss.value()[0];
    }
    history.epoch_loss.push_back(epoch_loss / config.steps_per_epoch);
  }
  return history;
}

namespace {

ProbMap to_probmap(const Tensor &logits) {
  const int K = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
  std::vector<float> values(static_cast<std::size_t>(K) * H * W);
  if (K == 1) {
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] = 1.0f / (1.0f + std::exp(-logits[i]));
  } else {
    const Tensor p = softmax_channels(logits);
    std::copy_n(p.data().begin(), values.size(), values.begin());
  }
  return ProbMap(K, H, W, std::move(values));
}

} // namespace

ProbMap predict_segmentation(const Model &model, const Image8 &image) {
  const ImageF pre = mean_subtract(image);
  const Tensor logits = model.forward(Var(images_to_tensor(std::span(&pre, 1)))).value();
  return to_probmap(logits);
}

ProbMap predict_segmentation_tiled(const Model &model, const Image8 &image, const PatchSpec &spec,
                                   MeanScope scope) {
  const ImageF f = to_float(image);
  const auto means = channel_means(f);
  const PatchGrid grid = grid_patches(f, spec);
  std::vector<double> sum;
  std::vector<int> count(image.pixel_count(), 0);
  int K = 0;
  for (const PatchOrigin &o : grid.origins) {
    const ImageF patch = preprocess_patch(f, o, spec, scope, means);
    const ProbMap p = to_probmap(model.forward(Var(images_to_tensor(std::span(&patch, 1)))).value());
    if (sum.empty()) {
      K = p.classes();
      sum.assign(static_cast<std::size_t>(K) * image.pixel_count(), 0.0);
    }
    for (int r = 0; r < spec.patch_h; ++r)
      for (int c = 0; c < spec.patch_w; ++c) {
        const std::size_t pix = static_cast<std::size_t>(o.row + r) * image.width() + (o.col + c);
        ++count[pix];
        for (int k = 0; k < K; ++k)
          sum[static_cast<std::size_t>(k) * image.pixel_count() + pix] += p.at(k, r, c);
      }
  }
  std::vector<float> values(sum.size(), 0.0f);
  for (int k = 0; k < K; ++k)
    for (std::size_t pix = 0; pix < image.pixel_count(); ++pix)
      if (count[pix] > 0)
        values[static_cast<std::size_t>(k) * image.pixel_count() + pix] =
            static_cast<float>(sum[static_cast<std::size_t>(k) * image.pixel_count() + pix] / count[pix]);
  return ProbMap(K, image.height(), image.width(), std::move(values));
}

TrainHistory train_classifier(const Model &model, std::span<const Image8> images, std::span<const int> labels,
                              const ClsTrainConfig &config, Rng &rng) {
  require(!images.empty() && images.size() == labels.size(), "train_classifier: need one label per image");
  require(config.epochs >= 1 && config.steps_per_epoch >= 1 && config.batch >= 1,
          "train_classifier: epochs, steps and batch must be >= 1");
  std::vector<ImageF> floats;
  std::vector<std::vector<double>> means;
  for (const Image8 &img : images) {
    floats.push_back(to_float(img));
    means.push_back(channel_means(floats.back()));
  }
  const PatchSpec spec{config.patch, config.patch, 1};
  Adam adam(model.parameters(), config.adam);
  TrainHistory history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int step = 0; step < config.steps_per_epoch; ++step) {
      std::vector<ImageF> batch;
      std::vector<int> batch_labels;
      for (int b = 0; b < config.batch; ++b) {
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(images.size()) - 1));
        const PatchOrigin o = random_origin(floats[idx].height(), floats[idx].width(), spec, rng);
        batch.push_back(preprocess_patch(floats[idx], o, spec, config.scope, means[idx]));
        batch_labels.push_back(labels[idx]);
      }
      Var logits = model.forward(Var(images_to_tensor(batch)));
      Var loss;
      if (config.one_vs_all >= 0) {
        require(logits.value().dim(1) == 1, "one-vs-all training needs a single output");
        Tensor target({config.batch, 1});
        for (int b = 0; b < config.batch; ++b)
          target[static_cast<std::size_t>(b)] = batch_labels[static_cast<std::size_t>(b)] == config.one_vs_all ? 1.0f : 0.0f;
        loss = binary_logloss(sigmoid(logits), target);
      } else {
        loss = softmax_ce(logits, batch_labels);
      }
      model.zero_grad();
      backward(loss);
      adam.step(epoch);
      epoch_loss += loss.value()[0];
    }
    history.epoch_loss.push_back(epoch_loss / config.steps_per_epoch);
  }
  return history;
}

PredMatrix predict_patches(const Model &model, const Image8 &image, const PatchGrid &grid, MeanScope scope) {
  const ImageF f = to_float(image);
  const auto means = channel_means(f);
  std::vector<float> values;
  int K = 0;
  for (const PatchOrigin &o : grid.origins) {
    const ImageF patch = preprocess_patch(f, o, grid.spec, scope, means);
    const Tensor logits = model.forward(Var(images_to_tensor(std::span(&patch, 1)))).value();
    require(logits.rank() == 2, "predict_patches: model must end in a dense layer");
    K = logits.dim(1);
    if (K == 1) {
      values.push_back(1.0f / (1.0f + std::exp(-logits[0])));
    } else {
      const Tensor p = softmax_channels(logits);
      values.insert(values.end(), p.data().begin(), p.data().end());
    }
  }
  return PredMatrix(static_cast<int>(grid.origins.size()), K, std::move(values));
}

} // namespace histoens::nn
