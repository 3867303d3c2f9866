#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cxrnet {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
  shape,    // tensor extents do not fit the operation
  input,    // value-level precondition violated (non-binary label, empty set)
  state,    // call sequence violated (backward without cache)
  layout,   // dataset directory tree malformed
  decode,   // raster file unreadable
  format,   // checkpoint / score file malformed
  numeric,  // NaN or Inf produced
  config,   // run configuration rejected
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define CXRNET_DEFINE_ERROR(Name, cat)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(cat, message) {}  \
  };

CXRNET_DEFINE_ERROR(ShapeError, ErrorCategory::shape)
CXRNET_DEFINE_ERROR(InputError, ErrorCategory::input)
CXRNET_DEFINE_ERROR(StateError, ErrorCategory::state)
CXRNET_DEFINE_ERROR(LayoutError, ErrorCategory::layout)
CXRNET_DEFINE_ERROR(DecodeError, ErrorCategory::decode)
CXRNET_DEFINE_ERROR(FormatError, ErrorCategory::format)
CXRNET_DEFINE_ERROR(NumericError, ErrorCategory::numeric)
CXRNET_DEFINE_ERROR(ConfigError, ErrorCategory::config)

#undef CXRNET_DEFINE_ERROR

}  // namespace cxrnet
