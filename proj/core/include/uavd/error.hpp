#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace uavd {

/// Source locator attached to a diagnostic. `line`/`column` are 1-based; 0 means
/// "not applicable". `field` is a dotted path such as `functions[3].params[0].min`.
struct Locator {
  int line = 0;
  int column = 0;
  std::string field;
};

enum class Severity { kError, kWarning };

struct Diagnostic {
  Severity severity = Severity::kError;
  std::string code;
  std::string message;
  Locator where;

  std::string to_string() const;
};

using DiagnosticList = std::vector<Diagnostic>;

std::string format_diagnostics(const DiagnosticList& diags);

/// Either a value or the diagnostics explaining why there is none.
template <class T>
class Checked {
 public:
  Checked(T value) : data_(std::move(value)) {}
  Checked(DiagnosticList diags) : data_(std::move(diags)) {}

  bool ok() const { return std::holds_alternative<T>(data_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(data_); }
  T& value() & { return std::get<T>(data_); }
  T&& value() && { return std::get<T>(std::move(data_)); }
  const DiagnosticList& diagnostics() const { return std::get<DiagnosticList>(data_); }

 private:
  std::variant<T, DiagnosticList> data_;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UAVD_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

UAVD_DEFINE_ERROR(ConfigError);
UAVD_DEFINE_ERROR(InputError);
UAVD_DEFINE_ERROR(GenerationError);
UAVD_DEFINE_ERROR(TemplateError);
UAVD_DEFINE_ERROR(TokenizerError);
UAVD_DEFINE_ERROR(LossError);
UAVD_DEFINE_ERROR(CheckpointError);
UAVD_DEFINE_ERROR(SchemaLoadError);

#undef UAVD_DEFINE_ERROR

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(long step, const std::string& what)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace uavd
