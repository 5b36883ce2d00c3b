#pragma once

// Shared types, error hierarchy and the warning sink used by every module.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace spca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual std::string_view kind() const noexcept { return "Error"; }
  /// Throws a copy of the same dynamic type with `context` prepended.
  [[noreturn]] virtual void rethrow_with(const std::string& context) const {
    throw Error(context + ": " + what());
  }
};

#define SPCA_DEFINE_ERROR(Name)                                             \
  class Name : public Error {                                               \
   public:                                                                  \
    using Error::Error;                                                     \
    std::string_view kind() const noexcept override { return #Name; }       \
    [[noreturn]] void rethrow_with(const std::string& context) const override { \
      throw Name(context + ": " + what());                                  \
    }                                                                       \
  }

SPCA_DEFINE_ERROR(ShapeMismatch);
SPCA_DEFINE_ERROR(InvalidArgument);
SPCA_DEFINE_ERROR(NotPositiveDefinite);
SPCA_DEFINE_ERROR(MaxIterExceeded);
SPCA_DEFINE_ERROR(DegenerateComponent);
SPCA_DEFINE_ERROR(SolveFailure);
SPCA_DEFINE_ERROR(ParseError);
SPCA_DEFINE_ERROR(NonContiguousLabels);
SPCA_DEFINE_ERROR(BadPixelCount);
SPCA_DEFINE_ERROR(PgmFormatError);
SPCA_DEFINE_ERROR(InconsistentDimensions);
SPCA_DEFINE_ERROR(MissingLabel);
SPCA_DEFINE_ERROR(IoError);
SPCA_DEFINE_ERROR(ModelFormatError);

#undef SPCA_DEFINE_ERROR

/// Re-throws `e` as its own dynamic type with `context` prepended.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  e.rethrow_with(context);
  throw;  // unreachable
}

namespace detail {
inline std::function<void(std::string_view)>& warning_handler() {
  static std::function<void(std::string_view)> handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}
}  // namespace detail

/// Replaces the process-wide warning sink and returns the previous one.
inline std::function<void(std::string_view)> set_warning_handler(
    std::function<void(std::string_view)> handler) {
  return std::exchange(detail::warning_handler(), std::move(handler));
}

inline void warn(std::string_view message) {
  if (auto& h = detail::warning_handler()) h(message);
}

inline void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + " contains non-finite entries");
}

}  // namespace spca
