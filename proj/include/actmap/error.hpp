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

#ifndef ACTMAP_ERROR_HPP_
#define ACTMAP_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace actmap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or mismatched dimensions between components.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
  ConfigError(const std::string& what, std::vector<std::string> fields)
      : Error(what), fields_(std::move(fields)) {}

  // Field-level diagnostics ("section.key: message"), possibly empty.
  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

// A caller violated an operation precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Non-finite values reached a numerical routine.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace actmap

#endif  // ACTMAP_ERROR_HPP_
