// Copyright 2026 The mpxlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MPXLAB_ERROR_HPP_
#define MPXLAB_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpxlab {

enum class ErrorKind {
  kInvalidArgument,
  kTagOverflow,
  kDoubleReady,
  kInvalidOp,
  kIllegalTransition,
  kOracleBound,
  kIncompleteAssignment,
  kInvalidAssignment,
  kMapping,
  kDomain,
  kUnsupportedPattern,
  kMalformedSpec,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace mpxlab

#endif  // MPXLAB_ERROR_HPP_
