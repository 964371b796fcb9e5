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

#include "config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "histoens/error.hpp"

namespace histoens::cli {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Leaf commands with their full names, e.g. "stack train".
void leaves(const CLI::App &app, const std::string &prefix, std::vector<const CLI::App *> &out) {
  const auto subs = app.get_subcommands([](const CLI::App *) { return true; });
  if (subs.empty() && !prefix.empty()) {
    out.push_back(&app);
    return;
  }
  for (const CLI::App *s : subs)
    leaves(*s, prefix + s->get_name() + " ", out);
}

const CLI::Option *find_option(const CLI::App &app, const std::string &key) {
  return app.get_option_no_throw("--" + key);
}

} // namespace

std::vector<ConfigEntry> parse_config(const std::string &text) {
  std::vector<ConfigEntry> out;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty())
      continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, "config line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(line_no) + ": expected key = value");
    ConfigEntry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    require(!e.key.empty(), "config line " + std::to_string(line_no) + ": empty key");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ConfigEntry> load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> section_scope(const std::string &section, const CLI::App &root) {
  static const std::map<std::string, std::vector<std::string>> groups = {
      {"train", {"train-cls", "train-seg", "demo"}},
      {"postprocess", {"postprocess", "demo"}},
      {"stack", {"train", "select", "predict"}},
  };
  std::vector<const CLI::App *> all;
  leaves(root, "", all);
  std::vector<std::string> names;
  for (const CLI::App *a : all)
    names.push_back(a->get_name());
  if (section.empty())
    return names;
  if (const auto it = groups.find(section); it != groups.end())
    return it->second;
  for (const auto &n : names)
    if (n == section)
      return {section};
  throw ValidationError("config: unknown section [" + section + "]");
}

std::vector<std::string> config_arguments(const std::vector<ConfigEntry> &entries, const CLI::App &root,
                                          const CLI::App &cmd) {
  std::vector<const CLI::App *> all;
  leaves(root, "", all);
  std::vector<std::string> args;
  for (const ConfigEntry &e : entries) {
    const auto scope = section_scope(e.section, root);
    bool known = false, applies = false;
    for (const CLI::App *a : all) {
      bool in_scope = false;
      for (const auto &n : scope)
        in_scope = in_scope || a->get_name() == n;
      // The stack section names leaf commands shared with other parents.
      if (e.section == "stack")
        in_scope = in_scope && a->get_parent() && a->get_parent()->get_name() == "stack";
      if (in_scope && find_option(*a, e.key)) {
        known = true;
        applies = applies || a == &cmd;
      }
    }
    require(known, "config line " + std::to_string(e.line) + ": unknown key '" + e.key + "'" +
                       (e.section.empty() ? "" : " in section [" + e.section + "]"));
    if (!applies)
      continue;
    const CLI::Option *opt = find_option(cmd, e.key);
    if (opt->count() > 0)
      continue; // the command line wins
    if (opt->get_expected_min() == 0) {
      if (e.value == "true" || e.value == "1" || e.value == "yes")
        args.push_back("--" + e.key);
      else
        require(e.value == "false" || e.value == "0" || e.value == "no",
                "config line " + std::to_string(e.line) + ": '" + e.key + "' expects true or false");
      continue;
    }
    args.push_back("--" + e.key);
    std::istringstream values(e.value);
    std::string v;
    while (values >> v)
      args.push_back(v);
  }
  return args;
}

} // namespace histoens::cli
