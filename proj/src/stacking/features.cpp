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

#include "histoens/stacking/features.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "histoens/error.hpp"

namespace histoens::stacking {

namespace {

constexpr double kQuantiles[] = {0.10, 0.25, 0.75, 0.90};
constexpr const char *kQuantileNames[] = {"p10", "p25", "p75", "p90"};
constexpr double kCutoffs[] = {0.15, 0.25};
constexpr const char *kCutoffNames[] = {"gt15", "gt25"};

std::string cname(const std::string &prefix, int k, const char *what) {
  return prefix + "c" + std::to_string(k) + "_" + what;
}

double quantile(const std::vector<double> &sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace

std::vector<std::string> feature_names(int classes, const std::string &prefix) {
  require(classes >= 1, "feature_names: need at least one class");
  std::vector<std::string> names;
  for (int k = 0; k < classes; ++k)
    for (const char *s : {"min", "max", "mean"})
      names.push_back(cname(prefix, k, s));
  if (classes > 1)
    for (int k = 0; k < classes; ++k)
      names.push_back(cname(prefix, k, "argmax"));
  for (int k = 0; k < classes; ++k)
    for (const char *s : kQuantileNames)
      names.push_back(cname(prefix, k, s));
  for (int k = 0; k < classes; ++k)
    for (const char *s : kCutoffNames)
      names.push_back(cname(prefix, k, s));
  return names;
}

FeatureVector extract_features(const PredMatrix &pred, const std::string &prefix) {
  require(pred.rows() >= 1 && pred.cols() >= 1, "extract_features: empty prediction matrix");
  const int P = pred.rows(), K = pred.cols();
  FeatureVector fv;
  fv.names = feature_names(K, prefix);

  std::vector<std::vector<double>> cols(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto &col = cols[static_cast<std::size_t>(k)];
    for (int p = 0; p < P; ++p)
      col.push_back(pred.at(p, k));
    std::sort(col.begin(), col.end());
  }
  for (const auto &col : cols) {
    double sum = 0.0;
    for (double v : col)
      sum += v;
    fv.values.push_back(col.front());
    fv.values.push_back(col.back());
    fv.values.push_back(sum / P);
  }
  if (K > 1) {
    std::vector<double> wins(static_cast<std::size_t>(K), 0.0);
    for (int p = 0; p < P; ++p) {
      const auto row = pred.row(p);
      wins[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())] += 1.0;
    }
    fv.values.insert(fv.values.end(), wins.begin(), wins.end());
  }
  for (const auto &col : cols)
    for (double q : kQuantiles)
      fv.values.push_back(quantile(col, q));
  for (const auto &col : cols)
    for (double t : kCutoffs)
      fv.values.push_back(static_cast<double>(col.end() - std::upper_bound(col.begin(), col.end(), t)));
  return fv;
}

void FeatureTable::validate() const {
  require(values.size() == ids.size() * columns.size(), "feature table: value count does not match its shape");
  require(labels.empty() || labels.size() == ids.size(), "feature table: label count does not match row count");
  std::set<std::string> seen;
  for (const auto &c : columns)
    require(seen.insert(c).second, "feature table: duplicate column '" + c + "'");
}

FeatureTable make_table(std::vector<std::string> ids, const std::vector<FeatureVector> &rows,
                        std::vector<int> labels) {
  require(ids.size() == rows.size(), "make_table: one id per row required");
  require(!rows.empty(), "make_table: no rows");
  FeatureTable t;
  t.ids = std::move(ids);
  t.columns = rows[0].names;
  for (const FeatureVector &fv : rows) {
    require(fv.names == t.columns, "make_table: rows disagree on feature names");
    t.values.insert(t.values.end(), fv.values.begin(), fv.values.end());
  }
  t.labels = std::move(labels);
  t.validate();
  return t;
}

FeatureTable join_tables(std::span<const FeatureTable *const> tables) {
  require(!tables.empty(), "join_tables: no tables");
  FeatureTable out;
  out.ids = tables[0]->ids;
  for (const FeatureTable *t : tables) {
    require(t->ids == out.ids, "join_tables: tables list different images");
    out.columns.insert(out.columns.end(), t->columns.begin(), t->columns.end());
    if (out.labels.empty() && t->has_labels())
      out.labels = t->labels;
  }
  out.values.reserve(out.ids.size() * out.columns.size());
  for (std::size_t r = 0; r < out.ids.size(); ++r)
    for (const FeatureTable *t : tables) {
      const auto row = t->row(r);
      out.values.insert(out.values.end(), row.begin(), row.end());
    }
  out.validate();
  return out;
}

std::string table_to_csv(const FeatureTable &table) {
  table.validate();
  std::string out = "image";
  for (const auto &c : table.columns)
    out += "," + c;
  if (table.has_labels())
    out += ",label";
  out += "\n";
  char buf[64];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out += table.ids[r];
    for (double v : table.row(r)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out += ",";
      out.append(buf, end);
    }
    if (table.has_labels())
      out += "," + std::to_string(table.labels[r]);
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos)
      return cells;
    start = comma + 1;
  }
}

template <typename T> T parse_number(const std::string &cell, std::size_t line_no) {
  T v{};
  const char *end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  require(ec == std::errc() && ptr == end,
          "feature table line " + std::to_string(line_no) + ": bad number '" + cell + "'");
  return v;
}

} // namespace

FeatureTable table_from_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "feature table: missing header");
  auto header = split(line);
  require(header.size() >= 2 && header[0] == "image", "feature table: header must start with 'image'");
  const bool labelled = header.back() == "label";
  FeatureTable t;
  t.columns.assign(header.begin() + 1, header.end() - (labelled ? 1 : 0));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    const auto cells = split(line);
    require(cells.size() == header.size(),
            "feature table line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                " cells, got " + std::to_string(cells.size()));
    t.ids.push_back(cells[0]);
    for (std::size_t c = 1; c <= t.columns.size(); ++c)
      t.values.push_back(parse_number<double>(cells[c], line_no));
    if (labelled)
      t.labels.push_back(parse_number<int>(cells.back(), line_no));
  }
  t.validate();
  return t;
}

FeatureTable read_table(const std::filesystem::path &path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return table_from_csv(ss.str());
}

void write_table(const std::filesystem::path &path, const FeatureTable &table) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << table_to_csv(table);
}

} // namespace histoens::stacking
