#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace layoutforge {

// Base for every domain error raised by the library. `code()` is a stable
// machine-readable tag used in CLI output and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define LAYOUTFORGE_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& message) : Error(tag, message) {}       \
  }

// scene model
LAYOUTFORGE_DEFINE_ERROR(SchemaError, "schema_error");
LAYOUTFORGE_DEFINE_ERROR(ValueError, "value_error");
LAYOUTFORGE_DEFINE_ERROR(NoMatchError, "no_match");
LAYOUTFORGE_DEFINE_ERROR(IoError, "io_error");
LAYOUTFORGE_DEFINE_ERROR(PreconditionError, "precondition_failed");

// geometry / dataset
LAYOUTFORGE_DEFINE_ERROR(EmptyLayoutError, "empty_layout");
LAYOUTFORGE_DEFINE_ERROR(DegenerateError, "degenerate");
LAYOUTFORGE_DEFINE_ERROR(InsufficientDataError, "insufficient_data");

// prompts and completions
LAYOUTFORGE_DEFINE_ERROR(UnresolvedSizeError, "unresolved_size");
LAYOUTFORGE_DEFINE_ERROR(UnsupportedEditError, "unsupported_edit");
LAYOUTFORGE_DEFINE_ERROR(NoAnswerBlockError, "no_answer_block");
LAYOUTFORGE_DEFINE_ERROR(MalformedScoreError, "malformed_score");
LAYOUTFORGE_DEFINE_ERROR(RangeError, "range_error");

// gateway
LAYOUTFORGE_DEFINE_ERROR(TransportError, "transport_error");
LAYOUTFORGE_DEFINE_ERROR(ScriptExhaustedError, "script_exhausted");
LAYOUTFORGE_DEFINE_ERROR(AuthError, "auth_error");

// preference forge
LAYOUTFORGE_DEFINE_ERROR(NoEligibleObjectError, "no_eligible_object");
LAYOUTFORGE_DEFINE_ERROR(TooFewObjectsError, "too_few_objects");
LAYOUTFORGE_DEFINE_ERROR(NonFiniteError, "non_finite");

// navigation
LAYOUTFORGE_DEFINE_ERROR(UnknownTargetError, "unknown_target");
LAYOUTFORGE_DEFINE_ERROR(InvalidStartError, "invalid_start");

#undef LAYOUTFORGE_DEFINE_ERROR

// Raised when an answer block exists but holds no usable layout JSON.
// `offset` is the byte position in the completion where parsing gave up.
class MalformedLayoutError : public Error {
 public:
  MalformedLayoutError(const std::string& message, std::size_t offset)
      : Error("malformed_layout",
              message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace layoutforge
