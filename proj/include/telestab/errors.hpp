#pragma once

#include <stdexcept>
#include <string>

namespace telestab {

// Failure categories surfaced through the C API as distinct status codes.
enum class ErrorKind {
  kArgument,
  kStructural,
  kBracket,
  kNumerical,
  kContract,
  kClassification,
  kConfig,
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

#define TELESTAB_DEFINE_ERROR(Name, Kind)                              \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Kind, what) {}      \
  };

TELESTAB_DEFINE_ERROR(ArgumentError, ErrorKind::kArgument)
TELESTAB_DEFINE_ERROR(StructuralError, ErrorKind::kStructural)
TELESTAB_DEFINE_ERROR(BracketError, ErrorKind::kBracket)
TELESTAB_DEFINE_ERROR(NumericalError, ErrorKind::kNumerical)
TELESTAB_DEFINE_ERROR(ContractError, ErrorKind::kContract)
TELESTAB_DEFINE_ERROR(ClassificationError, ErrorKind::kClassification)
TELESTAB_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
TELESTAB_DEFINE_ERROR(IoError, ErrorKind::kIo)

#undef TELESTAB_DEFINE_ERROR

}  // namespace telestab
