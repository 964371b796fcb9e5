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
#include <string>
#include <vector>

#include "histoens/stacking/features.hpp"

namespace histoens::stacking {

struct GbtParams {
  int rounds = 30;
  int max_depth = 3;
  double learning_rate = 0.3;
  double lambda = 1.0;           ///< L2 penalty on leaf weights
  double min_child_weight = 1.0; ///< minimum hessian sum per child
  void validate() const;
};

/// Array-backed regression tree. Rows with value < threshold go left.
struct Tree {
  struct Node {
    int feature = -1; ///< index into GbtModel::features; -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;
  double eval(std::span<const double> row) const;
};

/// One-vs-rest logistic boosting. trees[r * classes.size() + k] is round r
/// of class k.
struct GbtModel {
  GbtParams params;
  std::vector<int> classes;          ///< sorted distinct training labels
  std::vector<std::string> features; ///< sorted column names the trees index
  std::vector<double> base_score;    ///< logit of each class prior
  std::vector<Tree> trees;

  /// Probabilities aligned with `classes`, normalized to sum to 1.
  std::vector<double> predict_proba(std::span<const double> row_by_feature) const;
  /// Looks columns up by name; returns one probability row per table row.
  std::vector<std::vector<double>> predict_proba(const FeatureTable &table) const;
  std::vector<int> predict(const FeatureTable &table) const;
  /// Mean per-class logistic loss on `table`; used to track training.
  double logistic_loss(const FeatureTable &table) const;
};

/// Exact greedy split search on sorted columns, grown level by level.
/// Ties between equally good splits go to the feature whose name sorts
/// first, so column order never affects the model.
GbtModel gbt_train(const FeatureTable &table, const GbtParams &params = {});

std::string gbt_to_json(const GbtModel &model);
GbtModel gbt_from_json(const std::string &text);
void save_gbt(const std::filesystem::path &path, const GbtModel &model);
GbtModel load_gbt(const std::filesystem::path &path);

} // namespace histoens::stacking
