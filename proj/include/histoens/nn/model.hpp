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
#include <memory>
#include <string>
#include <vector>

#include "histoens/nn/tensor.hpp"
#include "histoens/rng.hpp"

namespace histoens::nn {

enum class LayerKind { Conv3x3, Conv1x1, Relu, MaxPool2, AvgPool2, Upsample2, Dense, Spp };

const char *layer_kind_name(LayerKind kind);

/// One stage of a sequential network. `param` is the output channel/feature
/// count for conv and dense layers and the pyramid depth for spp.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int in_channels = 0;
  int out_channels = 0;
  int param = 0;
};

/// Encoder-decoder with `skip_convs` conv3x3+relu blocks on every skip
/// connection; skip_convs == 0 is the plain U-Net topology.
struct TNetSpec {
  int in_channels = 3;
  int depth = 3;
  int base_channels = 8;
  int skip_convs = 1;
  int out_classes = 1;

  void validate() const;
  /// Channels at encoder level l: base_channels * 2^l.
  int channels_at(int level) const { return base_channels << level; }
};

/// Serialized network: architecture descriptor plus flat float32 weights in
/// parameters() order.
struct ModelBundle {
  std::string architecture;
  std::vector<float> weights;
};

class Model {
public:
  virtual ~Model() = default;

  /// Runs the network on (N,C,H,W) input; output logits.
  virtual Var forward(const Var &input) const = 0;
  /// Trainable tensors in a fixed, documented order.
  virtual const std::vector<Var> &parameters() const = 0;
  /// One-line ASCII descriptor; from_architecture() inverts it.
  virtual std::string architecture() const = 0;

  std::size_t parameter_count() const;
  void zero_grad() const;
  ModelBundle bundle() const;
  /// Copies weights in parameters() order; throws on count mismatch.
  void load_weights(const std::vector<float> &weights) const;
};

/// Chain of LayerSpec stages (the patch classifier and similar stacks).
class Sequential final : public Model {
public:
  /// `layers` only need kind and param; channels are chained from
  /// `in_channels` and validated.
  Sequential(int in_channels, std::vector<LayerSpec> layers, Rng &rng);

  Var forward(const Var &input) const override;
  const std::vector<Var> &parameters() const override { return params_; }
  std::string architecture() const override;
  const std::vector<LayerSpec> &layers() const { return layers_; }

private:
  int in_channels_;
  std::vector<LayerSpec> layers_;
  std::vector<Var> params_;
  std::vector<int> param_index_; // first parameter of each layer, -1 if none
};

/// Parameter order: for each encoder level l = 0..D-1 the two convs
/// (weight, bias each); then for each decoder level l = D-2..0 the up-conv,
/// the skip convs, and the two merge convs; finally the 1x1 head.
class TNet final : public Model {
public:
  TNet(const TNetSpec &spec, Rng &rng);

  Var forward(const Var &input) const override;
  const std::vector<Var> &parameters() const override { return params_; }
  std::string architecture() const override;
  const TNetSpec &spec() const { return spec_; }

private:
  struct Conv {
    Var weight, bias;
  };
  Conv add_conv(int in, int out, int k, Rng &rng);
  static Var apply(const Conv &c, const Var &x, bool with_relu);

  TNetSpec spec_;
  std::vector<Var> params_;
  std::vector<std::pair<Conv, Conv>> encoder_;
  struct Decoder {
    Conv up;
    std::vector<Conv> skip;
    Conv merge_a, merge_b;
  };
  std::vector<Decoder> decoder_; // index l = decoder level
  Conv head_;
};

/// Parses a descriptor produced by Model::architecture(). Weights are
/// freshly initialized from `rng`.
std::unique_ptr<Model> from_architecture(const std::string &architecture, Rng &rng);
std::unique_ptr<Model> from_bundle(const ModelBundle &bundle);

/// Parses "kind[:param]" tokens separated by commas, e.g.
/// "avgpool2,conv3x3:8,relu,maxpool2,spp:3,dense:4".
std::vector<LayerSpec> parse_layers(const std::string &text);

/// NNW1 container: "NNW1\n", "<architecture> weights=<count>\n", then
/// count little-endian float32 values.
void save_model(const std::filesystem::path &path, const ModelBundle &bundle);
ModelBundle load_model(const std::filesystem::path &path);
std::vector<std::byte> encode_model(const ModelBundle &bundle);
ModelBundle decode_model(std::span<const std::byte> bytes);

} // namespace histoens::nn
