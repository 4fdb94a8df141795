// include/subalign/common.h

// Copyright 2026  subalign authors

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

#ifndef SUBALIGN_COMMON_H_
#define SUBALIGN_COMMON_H_

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace subalign {

// Working scalar for data and training. Model math is additionally
// instantiated for double to support high-precision gradient checks.
using Real = float;

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Mat = MatX<Real>;
using Vec = VecX<Real>;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace subalign

#endif  // SUBALIGN_COMMON_H_
