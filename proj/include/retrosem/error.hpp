// Copyright 2026 The retrosem Authors.
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

namespace retrosem {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  kInput = 1,
  kConfig = 2,
  kDimension = 3,
  kIndex = 4,
  kNumericDomain = 5,
  kData = 6,
  kIo = 7,
  kContract = 8,
  kParse = 9,
  kInventory = 10,
  kDegenerate = 11,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define RETROSEM_DEFINE_ERROR(Name, Code)                          \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(Code, what) {}  \
  };

RETROSEM_DEFINE_ERROR(InputError, ErrorCode::kInput)
RETROSEM_DEFINE_ERROR(ConfigError, ErrorCode::kConfig)
RETROSEM_DEFINE_ERROR(DimensionError, ErrorCode::kDimension)
RETROSEM_DEFINE_ERROR(IndexError, ErrorCode::kIndex)
RETROSEM_DEFINE_ERROR(NumericDomainError, ErrorCode::kNumericDomain)
RETROSEM_DEFINE_ERROR(DataError, ErrorCode::kData)
RETROSEM_DEFINE_ERROR(IoError, ErrorCode::kIo)
RETROSEM_DEFINE_ERROR(ContractError, ErrorCode::kContract)
RETROSEM_DEFINE_ERROR(ParseError, ErrorCode::kParse)
RETROSEM_DEFINE_ERROR(InventoryError, ErrorCode::kInventory)
// Raised for statistically degenerate input such as zero-variance differences.
RETROSEM_DEFINE_ERROR(DegenerateInputError, ErrorCode::kDegenerate)

#undef RETROSEM_DEFINE_ERROR

}  // namespace retrosem
