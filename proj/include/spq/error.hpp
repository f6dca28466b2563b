/*
 * Copyright (c) 2026 The spq Authors. All Rights Reserved
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPQ_ERROR_HPP_
#define SPQ_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace spq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or layer shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, empty inputs, or an operation whose numeric
// preconditions do not hold.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated model container / dataset file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spq

#endif  // SPQ_ERROR_HPP_
