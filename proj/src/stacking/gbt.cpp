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

#include "histoens/stacking/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "histoens/error.hpp"

namespace histoens::stacking {

using json = nlohmann::json;

void GbtParams::validate() const {
  require(rounds >= 0, "gbt: rounds must be >= 0");
  require(max_depth >= 1, "gbt: max depth must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "gbt: learning rate must be > 0");
  require(lambda >= 0.0 && std::isfinite(lambda), "gbt: lambda must be >= 0");
  require(min_child_weight >= 0.0 && std::isfinite(min_child_weight), "gbt: min child weight must be >= 0");
}

double Tree::eval(std::span<const double> row) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const Node &node = nodes[static_cast<std::size_t>(n)];
    n = row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Samples are stored feature-major in the model's sorted column order.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;
  double at(std::size_t r, std::size_t f) const { return v[f * rows + r]; }
};

std::vector<std::size_t> column_map(const std::vector<std::string> &wanted, const FeatureTable &table) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    index.emplace(table.columns[c], c);
  std::vector<std::size_t> out;
  for (const auto &name : wanted) {
    const auto it = index.find(name);
    require(it != index.end(), "gbt: feature table lacks column '" + name + "'");
    out.push_back(it->second);
  }
  return out;
}

Tree grow_tree(const Matrix &X, const std::vector<std::vector<std::size_t>> &sorted, const std::vector<double> &g,
               const std::vector<double> &h, const GbtParams &p) {
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<double> G{std::accumulate(g.begin(), g.end(), 0.0)};
  std::vector<double> H{std::accumulate(h.begin(), h.end(), 0.0)};
  std::vector<int> node_of(X.rows, 0);
  std::vector<int> level{0};

  for (int depth = 0; depth < p.max_depth && !level.empty(); ++depth) {
    const std::size_t n_nodes = tree.nodes.size();
    std::vector<char> open(n_nodes, 0);
    for (int n : level)
      open[static_cast<std::size_t>(n)] = 1;
    std::vector<double> best_gain(n_nodes, 1e-12), best_thr(n_nodes, 0.0);
    std::vector<int> best_feat(n_nodes, -1);
    std::vector<double> GL(n_nodes), HL(n_nodes), prev(n_nodes);
    std::vector<char> seen(n_nodes);

    for (std::size_t f = 0; f < X.cols; ++f) {
      std::fill(GL.begin(), GL.end(), 0.0);
      std::fill(HL.begin(), HL.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      for (std::size_t i : sorted[f]) {
        const auto n = static_cast<std::size_t>(node_of[i]);
        if (!open[n])
          continue;
        const double x = X.at(i, f);
        if (seen[n] && x > prev[n] && HL[n] >= p.min_child_weight && H[n] - HL[n] >= p.min_child_weight) {
          const double GR = G[n] - GL[n], HR = H[n] - HL[n];
          const double gain = GL[n] * GL[n] / (HL[n] + p.lambda) + GR * GR / (HR + p.lambda) -
                              G[n] * G[n] / (H[n] + p.lambda);
          if (gain > best_gain[n]) {
            best_gain[n] = gain;
            best_feat[n] = static_cast<int>(f);
            double thr = prev[n] + (x - prev[n]) / 2.0;
            if (thr <= prev[n])
              thr = x;
            best_thr[n] = thr;
          }
        }
        seen[n] = 1;
        prev[n] = x;
        GL[n] += g[i];
        HL[n] += h[i];
      }
    }

    std::vector<int> next;
    for (int n : level) {
      const auto un = static_cast<std::size_t>(n);
      if (best_feat[un] < 0)
        continue;
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[un].feature = best_feat[un];
      tree.nodes[un].threshold = best_thr[un];
      tree.nodes[un].left = left;
      tree.nodes[un].right = left + 1;
      G.resize(tree.nodes.size(), 0.0);
      H.resize(tree.nodes.size(), 0.0);
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t i = 0; i < X.rows; ++i) {
      const Tree::Node &node = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (node.feature < 0)
        continue;
      node_of[i] = X.at(i, static_cast<std::size_t>(node.feature)) < node.threshold ? node.left : node.right;
      G[static_cast<std::size_t>(node_of[i])] += g[i];
      H[static_cast<std::size_t>(node_of[i])] += h[i];
    }
    level = std::move(next);
  }
  for (std::size_t n = 0; n < tree.nodes.size(); ++n)
    if (tree.nodes[n].feature < 0)
      tree.nodes[n].value = -p.learning_rate * G[n] / (H[n] + p.lambda);
  return tree;
}

} // namespace

GbtModel gbt_train(const FeatureTable &table, const GbtParams &params) {
  params.validate();
  table.validate();
  require(table.has_labels(), "gbt_train: table has no labels");
  require(table.rows() >= 1 && table.cols() >= 1, "gbt_train: empty table");

  GbtModel model;
  model.params = params;
  model.classes = table.labels;
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  require(model.classes.size() >= 2, "gbt_train: need at least two classes");
  model.features = table.columns;
  std::sort(model.features.begin(), model.features.end());

  const std::size_t n = table.rows(), F = model.features.size(), K = model.classes.size();
  const auto cols = column_map(model.features, table);
  Matrix X{n, F, std::vector<double>(n * F)};
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t r = 0; r < n; ++r)
      X.v[f * n + r] = table.at(r, cols[f]);
  std::vector<std::vector<std::size_t>> sorted(F);
  for (std::size_t f = 0; f < F; ++f) {
    auto &idx = sorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return X.at(a, f) < X.at(b, f); });
  }

  std::vector<std::vector<double>> y(K, std::vector<double>(n)), score(K);
  for (std::size_t k = 0; k < K; ++k) {
    double count = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      y[k][r] = table.labels[r] == model.classes[k] ? 1.0 : 0.0;
      count += y[k][r];
    }
    const double prior = count / static_cast<double>(n);
    model.base_score.push_back(std::log(prior / (1.0 - prior)));
    score[k].assign(n, model.base_score.back());
  }

  std::vector<double> g(n), h(n), row(F);
  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t r = 0; r < n; ++r) {
        const double pr = sigmoid(score[k][r]);
        g[r] = pr - y[k][r];
        h[r] = std::max(pr * (1.0 - pr), 1e-16);
      }
      Tree tree = grow_tree(X, sorted, g, h, params);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t f = 0; f < F; ++f)
          row[f] = X.at(r, f);
        score[k][r] += tree.eval(row);
      }
      model.trees.push_back(std::move(tree));
    }
  }
  return model;
}

namespace {

std::vector<double> raw_scores(const GbtModel &m, std::span<const double> row) {
  require(row.size() == m.features.size(), "gbt: row length does not match the model's features");
  std::vector<double> s = m.base_score;
  const std::size_t K = m.classes.size();
  for (std::size_t t = 0; t < m.trees.size(); ++t)
    s[t % K] += m.trees[t].eval(row);
  return s;
}

template <typename Fn> void for_each_row(const GbtModel &m, const FeatureTable &table, Fn fn) {
  table.validate();
  const auto cols = column_map(m.features, table);
  std::vector<double> row(cols.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t f = 0; f < cols.size(); ++f)
      row[f] = table.at(r, cols[f]);
    fn(r, row);
  }
}

} // namespace

std::vector<double> GbtModel::predict_proba(std::span<const double> row_by_feature) const {
  std::vector<double> p = raw_scores(*this, row_by_feature);
  double sum = 0.0;
  for (double &v : p) {
    v = sigmoid(v);
    sum += v;
  }
  for (double &v : p)
    v /= sum;
  return p;
}

std::vector<std::vector<double>> GbtModel::predict_proba(const FeatureTable &table) const {
  std::vector<std::vector<double>> out;
  for_each_row(*this, table, [&](std::size_t, const std::vector<double> &row) { out.push_back(predict_proba(row)); });
  return out;
}

std::vector<int> GbtModel::predict(const FeatureTable &table) const {
  std::vector<int> out;
  for (const auto &p : predict_proba(table))
    out.push_back(classes[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())]);
  return out;
}

double GbtModel::logistic_loss(const FeatureTable &table) const {
  require(table.has_labels(), "logistic_loss: table has no labels");
  double total = 0.0;
  for_each_row(*this, table, [&](std::size_t r, const std::vector<double> &row) {
    const auto s = raw_scores(*this, row);
    for (std::size_t k = 0; k < classes.size(); ++k) {
      // log(1 + e^-z) and log(1 + e^z) in overflow-safe form.
      const double z = s[k];
      const double softplus_neg = std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
      total += table.labels[r] == classes[k] ? softplus_neg : softplus_neg + z;
    }
  });
  return total / static_cast<double>(table.rows() * classes.size());
}

std::string gbt_to_json(const GbtModel &model) {
  json j;
  j["format"] = "histoens-gbt-1";
  j["params"] = {{"rounds", model.params.rounds},
                 {"max_depth", model.params.max_depth},
                 {"learning_rate", model.params.learning_rate},
                 {"lambda", model.params.lambda},
                 {"min_child_weight", model.params.min_child_weight}};
  j["classes"] = model.classes;
  j["features"] = model.features;
  j["base_score"] = model.base_score;
  json trees = json::array();
  for (const Tree &t : model.trees) {
    json jt = {{"feature", json::array()}, {"threshold", json::array()}, {"left", json::array()},
               {"right", json::array()},   {"value", json::array()}};
    for (const Tree::Node &n : t.nodes) {
      jt["feature"].push_back(n.feature);
      jt["threshold"].push_back(n.threshold);
      jt["left"].push_back(n.left);
      jt["right"].push_back(n.right);
      jt["value"].push_back(n.value);
    }
    trees.push_back(std::move(jt));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

GbtModel gbt_from_json(const std::string &text) {
  GbtModel m;
  try {
    const json j = json::parse(text);
    require(j.at("format") == "histoens-gbt-1", "gbt model: unknown format tag");
    const json &p = j.at("params");
    m.params.rounds = p.at("rounds").get<int>();
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.lambda = p.at("lambda").get<double>();
    m.params.min_child_weight = p.at("min_child_weight").get<double>();
    m.classes = j.at("classes").get<std::vector<int>>();
    m.features = j.at("features").get<std::vector<std::string>>();
    m.base_score = j.at("base_score").get<std::vector<double>>();
    for (const json &jt : j.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto thr = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<int>>();
      const auto right = jt.at("right").get<std::vector<int>>();
      const auto value = jt.at("value").get<std::vector<double>>();
      require(!feature.empty() && thr.size() == feature.size() && left.size() == feature.size() &&
                  right.size() == feature.size() && value.size() == feature.size(),
              "gbt model: ragged tree arrays");
      Tree t;
      const int n = static_cast<int>(feature.size());
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (feature[ui] >= 0)
          require(feature[ui] < static_cast<int>(m.features.size()) && left[ui] > i && left[ui] < n &&
                      right[ui] > i && right[ui] < n,
                  "gbt model: tree node points outside the tree");
        t.nodes.push_back({feature[ui], thr[ui], left[ui], right[ui], value[ui]});
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const json::exception &e) {
    throw ValidationError(std::string("gbt model: ") + e.what());
  }
  m.params.validate();
  require(m.classes.size() >= 2 && m.base_score.size() == m.classes.size(), "gbt model: class list malformed");
  require(m.trees.size() % m.classes.size() == 0, "gbt model: tree count is not a multiple of the class count");
  return m;
}

void save_gbt(const std::filesystem::path &path, const GbtModel &model) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << gbt_to_json(model) << "\n";
}

GbtModel load_gbt(const std::filesystem::path &path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return gbt_from_json(ss.str());
}

} // namespace histoens::stacking
