// Copyright 2026 The InsPose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <stdexcept>
#include <string>

namespace inspose {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration, shape disagreement, or invalid arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed annotation/results/checkpoint file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A pose that cannot be turned into a rectangle or scored.
class GeometryError : public Error {
 public:
  using Error::Error;
};

}  // namespace inspose
