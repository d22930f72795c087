// Copyright 2026 The zalmsim Authors
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

#include "zalm/error.hpp"

namespace zalm {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kStructural: return "structural";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kUnnormalizable: return "unnormalizable";
    case ErrorKind::kSynthesis: return "synthesis";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kTolerance: return "tolerance";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace zalm
