#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace euc {

/// Error raised by every library operation. `code` is a stable kebab-case
/// identifier (e.g. "invariant-violation") that the CLI and the HTTP API
/// surface verbatim; `field` names the offending input field when known.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message,
        std::optional<std::string> field = std::nullopt)
      : std::runtime_error(message), code_(std::move(code)), field_(std::move(field)) {}

  const std::string& code() const noexcept { return code_; }
  const std::optional<std::string>& field() const noexcept { return field_; }

 private:
  std::string code_;
  std::optional<std::string> field_;
};

}  // namespace euc
