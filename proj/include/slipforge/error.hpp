#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slipforge {

// Every failure carries a stable machine-readable code; the CLI and the HTTP
// service surface it verbatim.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

/// Physics or GA parameters outside their declared domain.
struct ParameterError : Error {
  explicit ParameterError(const std::string& m) : Error("parameter_domain", m) {}
};

/// Caller passed malformed or too-small input.
struct InputError : Error {
  explicit InputError(const std::string& m) : Error("invalid_input", m) {}
};

/// Target and candidate taken from the same group.
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& m) : Error("group_protocol", m) {}
};

struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& m) : Error("degenerate_input", m) {}
};

struct ModelError : Error {
  explicit ModelError(const std::string& m) : Error("model_shape", m) {}
};

struct NotFoundError : Error {
  explicit NotFoundError(const std::string& m) : Error("not_found", m) {}
};

// Persistence failures.
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse_failure", m) {}
};
struct VersionError : Error {
  explicit VersionError(const std::string& m) : Error("version_mismatch", m) {}
};
struct InvariantError : Error {
  explicit InvariantError(const std::string& m) : Error("invariant_violation", m) {}
};
struct IntegrityError : Error {
  explicit IntegrityError(const std::string& m) : Error("integrity", m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape_mismatch", m) {}
};
struct StorageError : Error {
  explicit StorageError(const std::string& m) : Error("storage", m) {}
};

}  // namespace slipforge
