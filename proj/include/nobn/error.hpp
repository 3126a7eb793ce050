#pragma once

#include <stdexcept>
#include <string>

namespace nobn {

enum class ErrorKind {
  kUsage,
  kSyntax,
  kValidation,
  kCapExceeded,
  kImpossibleEvidence,
};

// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nobn
