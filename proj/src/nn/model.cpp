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

#include "histoens/nn/model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "histoens/error.hpp"
#include "histoens/io.hpp"
#include "histoens/nn/ops.hpp"

namespace histoens::nn {

namespace {

// Kaiming-uniform: U(-b, b), b = sqrt(6 / fan_in). Biases start at zero.
Var init_weight(std::vector<int> shape, int fan_in, Rng &rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / std::max(1, fan_in));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.uniform(-bound, bound));
  return Var(std::move(t), true);
}

Var init_bias(int n) { return Var(Tensor({n}, 0.0f), true); }

struct KindName {
  LayerKind kind;
  const char *name;
  bool has_param;
};

constexpr KindName kKinds[] = {
    {LayerKind::Conv3x3, "conv3x3", true},   {LayerKind::Conv1x1, "conv1x1", true},
    {LayerKind::Relu, "relu", false},        {LayerKind::MaxPool2, "maxpool2", false},
    {LayerKind::AvgPool2, "avgpool2", false}, {LayerKind::Upsample2, "upsample2", false},
    {LayerKind::Dense, "dense", true},       {LayerKind::Spp, "spp", true},
};

std::map<std::string, std::string> parse_fields(std::istringstream &in) {
  std::map<std::string, std::string> out;
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    require(eq != std::string::npos, "architecture: expected key=value, got '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

int to_int(const std::string &s, const std::string &what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(), "architecture: bad integer for " + what);
  return v;
}

} // namespace

const char *layer_kind_name(LayerKind kind) {
  for (const auto &k : kKinds)
    if (k.kind == kind)
      return k.name;
  return "?";
}

std::vector<LayerSpec> parse_layers(const std::string &text) {
  std::vector<LayerSpec> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto colon = tok.find(':');
    const std::string name = tok.substr(0, colon);
    const auto *it = std::find_if(std::begin(kKinds), std::end(kKinds),
                                  [&](const KindName &k) { return name == k.name; });
    require(it != std::end(kKinds), "unknown layer kind '" + name + "'");
    LayerSpec spec;
    spec.kind = it->kind;
    if (it->has_param) {
      require(colon != std::string::npos, "layer '" + name + "' needs a :param");
      spec.param = to_int(tok.substr(colon + 1), name);
      require(spec.param >= 1, "layer '" + name + "' param must be >= 1");
    } else {
      require(colon == std::string::npos, "layer '" + name + "' takes no parameter");
    }
    out.push_back(spec);
  }
  require(!out.empty(), "empty layer list");
  return out;
}

// ---------------------------------------------------------------------------

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Var &p : parameters())
    n += p.value().size();
  return n;
}

void Model::zero_grad() const {
  for (Var p : parameters())
    p.zero_grad();
}

ModelBundle Model::bundle() const {
  ModelBundle b;
  b.architecture = architecture();
  b.weights.reserve(parameter_count());
  for (const Var &p : parameters())
    b.weights.insert(b.weights.end(), p.value().data().begin(), p.value().data().end());
  return b;
}

void Model::load_weights(const std::vector<float> &weights) const {
  if (weights.size() != parameter_count()) {
    throw ValidationError("architecture expects " + std::to_string(parameter_count()) +
                          " weights, got " + std::to_string(weights.size()));
  }
  std::size_t off = 0;
  for (Var p : parameters()) {
    auto dst = p.value().data();
    std::copy_n(weights.begin() + static_cast<std::ptrdiff_t>(off), dst.size(), dst.begin());
    off += dst.size();
  }
}

// ---------------------------------------------------------------------------

Sequential::Sequential(int in_channels, std::vector<LayerSpec> layers, Rng &rng)
    : in_channels_(in_channels), layers_(std::move(layers)) {
  require(in_channels >= 1, "sequential: in_channels must be >= 1");
  int ch = in_channels;
  bool flat = false;
  for (LayerSpec &l : layers_) {
    l.in_channels = ch;
    param_index_.push_back(-1);
    switch (l.kind) {
    case LayerKind::Conv3x3:
    case LayerKind::Conv1x1: {
      require(!flat, "sequential: conv after flattening layer");
      const int k = l.kind == LayerKind::Conv3x3 ? 3 : 1;
      param_index_.back() = static_cast<int>(params_.size());
      params_.push_back(init_weight({l.param, ch, k, k}, ch * k * k, rng));
      params_.push_back(init_bias(l.param));
      ch = l.param;
      break;
    }
    case LayerKind::Dense:
      require(flat, "sequential: dense layer needs flattened (spp) input");
      param_index_.back() = static_cast<int>(params_.size());
      params_.push_back(init_weight({l.param, ch}, ch, rng));
      params_.push_back(init_bias(l.param));
      ch = l.param;
      break;
    case LayerKind::Spp:
      require(!flat, "sequential: spp applied twice");
      ch = spp_features(ch, l.param);
      flat = true;
      break;
    case LayerKind::MaxPool2:
    case LayerKind::AvgPool2:
    case LayerKind::Upsample2:
      require(!flat, "sequential: spatial layer after flattening layer");
      break;
    case LayerKind::Relu:
      break;
    }
    l.out_channels = ch;
  }
}

Var Sequential::forward(const Var &input) const {
  require(input.value().rank() == 4 && input.value().dim(1) == in_channels_,
          "sequential: expected input (N," + std::to_string(in_channels_) + ",H,W), got " +
              input.value().shape_string());
  Var h = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec &l = layers_[i];
    const int p = param_index_[i];
    switch (l.kind) {
    case LayerKind::Conv3x3:
    case LayerKind::Conv1x1:
      h = conv2d(h, params_[static_cast<std::size_t>(p)], params_[static_cast<std::size_t>(p) + 1]);
      break;
    case LayerKind::Dense:
      h = dense(h, params_[static_cast<std::size_t>(p)], params_[static_cast<std::size_t>(p) + 1]);
      break;
    case LayerKind::Relu:
      h = relu(h);
      break;
    case LayerKind::MaxPool2:
      h = maxpool2(h);
      break;
    case LayerKind::AvgPool2:
      h = avgpool2(h);
      break;
    case LayerKind::Upsample2:
      h = upsample2(h);
      break;
    case LayerKind::Spp:
      h = spp(h, l.param);
      break;
    }
  }
  return h;
}

std::string Sequential::architecture() const {
  std::string s = "seq in=" + std::to_string(in_channels_) + " layers=";
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i)
      s += ',';
    s += layer_kind_name(layers_[i].kind);
    if (layers_[i].param > 0)
      s += ':' + std::to_string(layers_[i].param);
  }
  return s;
}

// ---------------------------------------------------------------------------

void TNetSpec::validate() const {
  require(in_channels >= 1, "tnet: in_channels must be >= 1");
  require(depth >= 1 && depth <= 8, "tnet: depth must be in 1..8");
  require(base_channels >= 1, "tnet: base_channels must be >= 1");
  require(skip_convs >= 0, "tnet: skip_convs must be >= 0");
  require(out_classes >= 1, "tnet: out_classes must be >= 1");
}

TNet::Conv TNet::add_conv(int in, int out, int k, Rng &rng) {
  Conv c{init_weight({out, in, k, k}, in * k * k, rng), init_bias(out)};
  params_.push_back(c.weight);
  params_.push_back(c.bias);
  return c;
}

Var TNet::apply(const Conv &c, const Var &x, bool with_relu) {
  Var y = conv2d(x, c.weight, c.bias);
  return with_relu ? relu(y) : y;
}

TNet::TNet(const TNetSpec &spec, Rng &rng) : spec_(spec) {
  spec_.validate();
  const int D = spec_.depth;
  int in = spec_.in_channels;
  for (int l = 0; l < D; ++l) {
    const int c = spec_.channels_at(l);
    Conv a = add_conv(in, c, 3, rng);
    Conv b = add_conv(c, c, 3, rng);
    encoder_.emplace_back(a, b);
    in = c;
  }
  decoder_.resize(static_cast<std::size_t>(std::max(0, D - 1)));
  for (int l = D - 2; l >= 0; --l) {
    const int c = spec_.channels_at(l);
    Decoder &d = decoder_[static_cast<std::size_t>(l)];
    d.up = add_conv(spec_.channels_at(l + 1), c, 3, rng);
    for (int k = 0; k < spec_.skip_convs; ++k)
      d.skip.push_back(add_conv(c, c, 3, rng));
    d.merge_a = add_conv(2 * c, c, 3, rng);
    d.merge_b = add_conv(c, c, 3, rng);
  }
  head_ = add_conv(spec_.base_channels, spec_.out_classes, 1, rng);
}

Var TNet::forward(const Var &input) const {
  const Tensor &x = input.value();
  require(x.rank() == 4 && x.dim(1) == spec_.in_channels,
          "tnet: expected input (N," + std::to_string(spec_.in_channels) + ",H,W), got " + x.shape_string());
  const int div = 1 << (spec_.depth - 1);
  if (x.dim(2) % div != 0 || x.dim(3) % div != 0) {
    throw ValidationError("tnet: input " + x.shape_string() + " spatial dims not divisible by " +
                          std::to_string(div));
  }
  std::vector<Var> skips;
  Var h = input;
  for (int l = 0; l < spec_.depth; ++l) {
    if (l > 0)
      h = maxpool2(h);
    const auto &[a, b] = encoder_[static_cast<std::size_t>(l)];
    h = apply(b, apply(a, h, true), true);
    skips.push_back(h);
  }
  for (int l = spec_.depth - 2; l >= 0; --l) {
    const Decoder &d = decoder_[static_cast<std::size_t>(l)];
    Var up = apply(d.up, upsample2(h), true);
    Var s = skips[static_cast<std::size_t>(l)];
    for (const Conv &c : d.skip)
      s = apply(c, s, true);
    h = apply(d.merge_b, apply(d.merge_a, concat_channels(up, s), true), true);
  }
  return apply(head_, h, false);
}

std::string TNet::architecture() const {
  return "tnet in=" + std::to_string(spec_.in_channels) + " depth=" + std::to_string(spec_.depth) +
         " base=" + std::to_string(spec_.base_channels) + " skip=" + std::to_string(spec_.skip_convs) +
         " out=" + std::to_string(spec_.out_classes);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Model> from_architecture(const std::string &architecture, Rng &rng) {
  std::istringstream in(architecture);
  std::string kind;
  in >> kind;
  auto fields = parse_fields(in);
  auto take = [&](const std::string &key) {
    auto it = fields.find(key);
    require(it != fields.end(), "architecture '" + architecture + "' lacks " + key);
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  std::unique_ptr<Model> model;
  if (kind == "tnet") {
    TNetSpec spec;
    spec.in_channels = to_int(take("in"), "in");
    spec.depth = to_int(take("depth"), "depth");
    spec.base_channels = to_int(take("base"), "base");
    spec.skip_convs = to_int(take("skip"), "skip");
    spec.out_classes = to_int(take("out"), "out");
    model = std::make_unique<TNet>(spec, rng);
  } else if (kind == "seq") {
    const int in_ch = to_int(take("in"), "in");
    model = std::make_unique<Sequential>(in_ch, parse_layers(take("layers")), rng);
  } else {
    throw ValidationError("unknown architecture kind '" + kind + "'");
  }
  require(fields.empty(), "architecture '" + architecture + "' has unknown field " +
                              (fields.empty() ? "" : fields.begin()->first));
  return model;
}

std::unique_ptr<Model> from_bundle(const ModelBundle &bundle) {
  Rng rng(0);
  auto model = from_architecture(bundle.architecture, rng);
  model->load_weights(bundle.weights);
  return model;
}

namespace {
constexpr std::string_view kModelMagic = "NNW1\n";
}

std::vector<std::byte> encode_model(const ModelBundle &bundle) {
  require(bundle.architecture.find('\n') == std::string::npos, "architecture must be one line");
  const std::string header = std::string(kModelMagic) + bundle.architecture +
                             " weights=" + std::to_string(bundle.weights.size()) + "\n";
  std::vector<std::byte> out(header.size() + 4 * bundle.weights.size());
  std::memcpy(out.data(), header.data(), header.size());
  for (std::size_t i = 0; i < bundle.weights.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(bundle.weights[i]);
    if constexpr (std::endian::native == std::endian::big)
      bits = __builtin_bswap32(bits);
    std::memcpy(out.data() + header.size() + 4 * i, &bits, 4);
  }
  return out;
}

ModelBundle decode_model(std::span<const std::byte> bytes) {
  if (bytes.size() < kModelMagic.size() ||
      std::memcmp(bytes.data(), kModelMagic.data(), kModelMagic.size()) != 0) {
    throw FormatError("NNW1: magic mismatch", 0);
  }
  const char *begin = reinterpret_cast<const char *>(bytes.data()) + kModelMagic.size();
  const char *end = reinterpret_cast<const char *>(bytes.data()) + bytes.size();
  const char *nl = std::find(begin, end, '\n');
  if (nl == end)
    throw FormatError("NNW1: unterminated architecture line", kModelMagic.size());
  std::string line(begin, nl);
  const auto pos = line.rfind(" weights=");
  if (pos == std::string::npos)
    throw FormatError("NNW1: architecture line lacks weights=<count>", kModelMagic.size());
  std::size_t count = 0;
  const std::string count_text = line.substr(pos + 9);
  auto [p, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
  if (ec != std::errc() || p != count_text.data() + count_text.size())
    throw FormatError("NNW1: bad weight count", kModelMagic.size() + pos + 9);

  const std::size_t payload_off = static_cast<std::size_t>(nl + 1 - reinterpret_cast<const char *>(bytes.data()));
  const std::size_t payload = bytes.size() - payload_off;
  if (payload != count * 4) {
    throw FormatError("NNW1: weight payload is " + std::to_string(payload) + " bytes, expected " +
                          std::to_string(count * 4),
                      payload_off);
  }
  ModelBundle b;
  b.architecture = line.substr(0, pos);
  b.weights.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, bytes.data() + payload_off + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big)
      bits = __builtin_bswap32(bits);
    b.weights[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(b.weights[i]))
      throw FormatError("NNW1: non-finite weight", payload_off + 4 * i);
  }
  return b;
}

void save_model(const std::filesystem::path &path, const ModelBundle &bundle) {
  write_file_bytes(path, encode_model(bundle));
}

ModelBundle load_model(const std::filesystem::path &path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_model(bytes);
  } catch (const FormatError &e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

} // namespace histoens::nn
