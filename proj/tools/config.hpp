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

#include <CLI11.hpp>

namespace histoens::cli {

/// `key = value` lines, `#` comments, `[section]` headers. Entries before the
/// first header are global.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

std::vector<ConfigEntry> parse_config(const std::string &text);
std::vector<ConfigEntry> load_config(const std::filesystem::path &path);

/// Subcommand names a section applies to. Global entries apply to every
/// command; `train`, `postprocess` and `stack` cover the commands that read
/// those settings; any other section name must be a command name.
std::vector<std::string> section_scope(const std::string &section, const CLI::App &root);

/// Command-line tokens that apply `entries` to the selected command `cmd`
/// (a leaf subcommand of `root`). Options already given on the command line
/// keep their values. Throws ValidationError for a key that no command in
/// its section's scope accepts.
std::vector<std::string> config_arguments(const std::vector<ConfigEntry> &entries, const CLI::App &root,
                                          const CLI::App &cmd);

} // namespace histoens::cli
