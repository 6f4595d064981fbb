#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavd/error.hpp"
#include "uavd/schema.hpp"

namespace uavd {

struct Arg {
  std::string name;
  Literal value;
  bool operator==(const Arg&) const = default;
};

struct Call {
  std::string name;
  std::vector<Arg> args;
  int source_line = 0;
  bool operator==(const Call&) const = default;
};

struct CallSequence {
  std::string import_stmt;
  std::string handle;
  std::optional<std::string> ctor;  // from an optional `<handle> = <Ctor>()` line
  std::vector<Call> calls;
  std::optional<Call> on_error;
};

/// Line-oriented parse of generated control code. Keyword arguments only.
/// Diagnostic codes: PARSE_SYNTAX, PARSE_POSITIONAL.
Checked<CallSequence> parse_program(std::string_view text);

/// Prints a CallSequence in the canonical code surface.
std::string render_program(const CallSequence& seq);

/// Exact match (after trimming) against the refusal line.
bool detect_refusal(std::string_view text);

enum class SdkMatch { kMatched, kRefusal, kNoMatch };

struct SdkIdentification {
  std::optional<std::string> sdk_id;  // nullopt = Unknown
  SdkMatch reason = SdkMatch::kNoMatch;
};

SdkIdentification identify_sdk(std::string_view text, const std::vector<SdkSchema>& schemas);
SdkIdentification identify_sdk(const CallSequence& seq, const std::vector<SdkSchema>& schemas);

struct CallVerdict {
  std::string name;
  int source_line = 0;
  bool on_error = false;
  bool function_ok = false;
  bool params_ok = false;
};

/// Diagnostic codes: FN_UNKNOWN, PARAM_MISSING, PARAM_UNKNOWN, PARAM_TYPE,
/// PARAM_RANGE, plus IMPORT_MISMATCH / HANDLE_MISMATCH for the program header.
struct ValidationReport {
  std::optional<std::string> sdk_id;
  DiagnosticList diagnostics;
  std::vector<CallVerdict> verdicts;

  bool clean() const { return diagnostics.empty(); }
};

ValidationReport check_calls(const CallSequence& seq, const SdkSchema& schema);

/// Parameter-level check of one call against its spec; appends diagnostics and
/// returns params_ok. Exposed for the report builder and tests.
bool check_params(const Call& call, const FunctionSpec& fn, DiagnosticList& diags);

}  // namespace uavd
