#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uavd/error.hpp"

namespace uavd {

/// Repo-wide capability vocabulary. Counterfactual generation relies on every
/// schema drawing its tags from this fixed list.
inline constexpr std::array<std::string_view, 12> kCapabilities = {
    "takeoff", "land",  "move",     "rotate", "altitude", "speed",
    "photo",   "video", "waypoint", "flip",   "gimbal",   "rtl"};

bool is_capability(std::string_view tag);

enum class ParamKind { kInt, kFloat, kString, kEnum };

std::string_view to_string(ParamKind kind);
std::optional<ParamKind> param_kind_from_string(std::string_view s);

/// A literal as it appears in generated code or in a schema default.
using Literal = std::variant<long long, double, std::string>;

std::string render_literal(const Literal& lit);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kFloat;
  std::optional<std::string> unit;
  std::optional<double> min;
  std::optional<double> max;
  std::vector<std::string> allowed;
  bool required = true;
  std::optional<Literal> default_value;

  bool operator==(const ParamSpec&) const = default;
};

struct FunctionSpec {
  std::string name;
  std::vector<ParamSpec> params;
  std::string capability;
  std::string description;

  const ParamSpec* find_param(std::string_view param) const;
  bool operator==(const FunctionSpec&) const = default;
};

struct SdkSchema {
  std::string sdk_id;
  std::string import_stmt;
  std::string handle;
  std::vector<std::string> capabilities;
  std::vector<FunctionSpec> functions;

  bool has_capability(std::string_view tag) const;
  bool operator==(const SdkSchema&) const = default;
};

/// Parses schema JSON text. Returns the schema only when every invariant holds.
Checked<SdkSchema> parse_schema(std::string_view text);

/// Reads a schema file from disk; unreadable files yield a PARSE diagnostic.
Checked<SdkSchema> load_schema(const std::filesystem::path& path);

/// One diagnostic per violated invariant; empty means the schema is valid.
DiagnosticList validate_schema(const SdkSchema& schema);

/// Case-sensitive lookup. nullptr means NotFound.
const FunctionSpec* lookup_function(const SdkSchema& schema, std::string_view name);

/// Serializes back to the strict schema file format (pretty JSON, stable key order).
std::string serialize_schema(const SdkSchema& schema);

/// Loads every `*.json` in `dir` sorted by file name. Throws SchemaLoadError
/// carrying all diagnostics when any file fails.
std::vector<SdkSchema> load_schema_dir(const std::filesystem::path& dir);

const SdkSchema* find_schema(const std::vector<SdkSchema>& schemas, std::string_view sdk_id);

}  // namespace uavd
