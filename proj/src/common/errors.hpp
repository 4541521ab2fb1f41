#ifndef VLNLAB_COMMON_ERRORS_HPP
#define VLNLAB_COMMON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vlnlab {

// All library failures derive from Error and carry a stable machine-parsable
// category string. The CLI prints "error: <category>: <message>" and exits
// nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

#define VLNLAB_DEFINE_ERROR(ClassName, category_literal)            \
  class ClassName : public Error {                                  \
   public:                                                          \
    explicit ClassName(const std::string& message)                  \
        : Error(category_literal, message) {}                       \
  }

VLNLAB_DEFINE_ERROR(InvalidParameterError, "invalid-parameter");
VLNLAB_DEFINE_ERROR(NotFoundError, "not-found");
VLNLAB_DEFINE_ERROR(NoPathError, "no-path");
VLNLAB_DEFINE_ERROR(ShapeError, "shape");
VLNLAB_DEFINE_ERROR(NumericError, "numeric");
VLNLAB_DEFINE_ERROR(ContractError, "contract");
VLNLAB_DEFINE_ERROR(VocabularyError, "vocabulary");
VLNLAB_DEFINE_ERROR(IndexError, "index");
VLNLAB_DEFINE_ERROR(MalformedTrajectoryError, "malformed-trajectory");
VLNLAB_DEFINE_ERROR(InvalidInputError, "invalid-input");
VLNLAB_DEFINE_ERROR(ConfigError, "config");
VLNLAB_DEFINE_ERROR(FormatError, "format");
VLNLAB_DEFINE_ERROR(CorruptionError, "corruption");
VLNLAB_DEFINE_ERROR(DependencyError, "dependency");
VLNLAB_DEFINE_ERROR(IoError, "io");

#undef VLNLAB_DEFINE_ERROR

}  // namespace vlnlab

#endif  // VLNLAB_COMMON_ERRORS_HPP
