/*
 * Copyright 2026 The actmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Line-oriented scene serialization shared by the environments. A scene is
// a header line "actmap-scene 1 <env>" followed by one record per line:
// a keyword and whitespace-separated numbers.

#ifndef ACTMAP_SRC_SCENE_TEXT_HPP_
#define ACTMAP_SRC_SCENE_TEXT_HPP_

#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "actmap/error.hpp"

namespace actmap::detail {

class SceneWriter {
 public:
  explicit SceneWriter(std::string_view env) {
    out_ << std::setprecision(17) << "actmap-scene 1 " << env << '\n';
  }

  template <class... Ts>
  void record(std::string_view key, const Ts&... values) {
    out_ << key;
    ((out_ << ' ' << values), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

struct SceneRecord {
  std::string key;
  std::vector<double> values;
};

inline std::vector<SceneRecord> parse_scene(std::string_view text, std::string_view env) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty scene");
  {
    std::istringstream header(line);
    std::string magic, kind;
    int version = 0;
    header >> magic >> version >> kind;
    if (magic != "actmap-scene" || version != 1) throw ConfigError("not an actmap scene (v1)");
    if (kind != env) {
      throw ConfigError("scene is for environment '" + kind + "', expected '" +
                        std::string(env) + "'");
    }
  }
  std::vector<SceneRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SceneRecord r;
    ls >> r.key;
    std::string token;
    while (ls >> token) {
      try {
        std::size_t used = 0;
        r.values.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ConfigError("scene line " + std::to_string(lineno) + ": bad number '" + token + "'");
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline void expect_count(const SceneRecord& r, std::size_t n) {
  if (r.values.size() != n) {
    throw ConfigError("scene record '" + r.key + "' needs " + std::to_string(n) + " values");
  }
}

}  // namespace actmap::detail

#endif  // ACTMAP_SRC_SCENE_TEXT_HPP_
