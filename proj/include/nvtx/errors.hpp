/* Copyright 2026 The nvtx Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace nvtx {

/// Category of a failure. Mirrors the status codes of the C API one-to-one.
enum class ErrorKind {
  kDimension = 1,
  kDomain,
  kContract,
  kConfig,
  kFormat,
  kInput,
  kStatistics,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define NVTX_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

NVTX_DEFINE_ERROR(DimensionError, kDimension)
NVTX_DEFINE_ERROR(DomainError, kDomain)
NVTX_DEFINE_ERROR(ContractError, kContract)
NVTX_DEFINE_ERROR(ConfigError, kConfig)
NVTX_DEFINE_ERROR(FormatError, kFormat)
NVTX_DEFINE_ERROR(InputError, kInput)
NVTX_DEFINE_ERROR(StatisticsError, kStatistics)
NVTX_DEFINE_ERROR(IoError, kIo)

#undef NVTX_DEFINE_ERROR

}  // namespace nvtx
