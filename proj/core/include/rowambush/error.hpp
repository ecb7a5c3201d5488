// Copyright 2026 The rowambush Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace rowambush {

/// Base class for every error raised by the simulator.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public SimError {
 public:
  using SimError::SimError;
};

class AddressOutOfRange : public SimError {
 public:
  using SimError::SimError;
};

class OutOfMemory : public SimError {
 public:
  using SimError::SimError;
};

class DoubleFree : public SimError {
 public:
  using SimError::SimError;
};

class UnknownBlock : public SimError {
 public:
  using SimError::SimError;
};

class VmaLimitExceeded : public SimError {
 public:
  using SimError::SimError;
};

class DriverLimitExceeded : public SimError {
 public:
  using SimError::SimError;
};

class AttemptCapExceeded : public SimError {
 public:
  using SimError::SimError;
};

class ConfigError : public SimError {
 public:
  using SimError::SimError;
};

}  // namespace rowambush
