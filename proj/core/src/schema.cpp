#include "uavd/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace uavd {

using nlohmann::json;

std::string Diagnostic::to_string() const {
  std::ostringstream os;
  os << (severity == Severity::kError ? "error" : "warning") << " [" << code << "]";
  if (where.line > 0) {
    os << " line " << where.line;
    if (where.column > 0) os << ":" << where.column;
  }
  if (!where.field.empty()) os << " at " << where.field;
  os << ": " << message;
  return os.str();
}

std::string format_diagnostics(const DiagnosticList& diags) {
  std::string out;
  for (const auto& d : diags) {
    out += d.to_string();
    out += '\n';
  }
  return out;
}

bool is_capability(std::string_view tag) {
  return std::find(kCapabilities.begin(), kCapabilities.end(), tag) != kCapabilities.end();
}

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::kInt: return "int";
    case ParamKind::kFloat: return "float";
    case ParamKind::kString: return "string";
    case ParamKind::kEnum: return "enum";
  }
  return "?";
}

std::optional<ParamKind> param_kind_from_string(std::string_view s) {
  if (s == "int") return ParamKind::kInt;
  if (s == "float") return ParamKind::kFloat;
  if (s == "string") return ParamKind::kString;
  if (s == "enum") return ParamKind::kEnum;
  return std::nullopt;
}

std::string render_literal(const Literal& lit) {
  if (const auto* i = std::get_if<long long>(&lit)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&lit)) {
    // Literals are kept on a one-decimal grid; render with at least one decimal.
    char buf[64];
    double r = std::round(*d * 10.0) / 10.0;
    if (r == *d) {
      std::snprintf(buf, sizeof buf, "%.1f", *d);
    } else {
      // Shortest form that parses back to the same double.
      char wide[400];  // fixed notation of subnormals runs to ~330 chars
      auto res = std::to_chars(wide, wide + sizeof wide, *d, std::chars_format::fixed);
      std::string s(wide, res.ptr);
      if (s.find('.') == std::string::npos) s += ".0";
      return s;
    }
    return buf;
  }
  return "\"" + std::get<std::string>(lit) + "\"";
}

const ParamSpec* FunctionSpec::find_param(std::string_view param) const {
  for (const auto& p : params)
    if (p.name == param) return &p;
  return nullptr;
}

bool SdkSchema::has_capability(std::string_view tag) const {
  return std::find(capabilities.begin(), capabilities.end(), tag) != capabilities.end();
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = static_cast<unsigned char>(s[0]);
  if (!(std::isalpha(head) || s[0] == '_')) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool is_sdk_id(std::string_view s) {
  if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

Diagnostic schema_error(std::string field, std::string message) {
  return Diagnostic{Severity::kError, "SchemaError", std::move(message), Locator{0, 0, std::move(field)}};
}

Diagnostic parse_error(int line, int column, std::string message) {
  return Diagnostic{Severity::kError, "ParseError", std::move(message), Locator{line, column, {}}};
}

std::pair<int, int> line_col(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Structural decoding. Type mismatches and unknown keys land in `diags`; the
// returned schema is only meaningful when `diags` stays empty.
class Decoder {
 public:
  explicit Decoder(DiagnosticList& diags) : diags_(diags) {}

  SdkSchema decode(const json& doc) {
    SdkSchema s;
    if (!doc.is_object()) {
      diags_.push_back(schema_error("", "top-level value must be an object"));
      return s;
    }
    check_keys(doc, "", {"sdk_id", "import_stmt", "handle", "capabilities", "functions"});
    s.sdk_id = req_string(doc, "sdk_id", "sdk_id");
    s.import_stmt = req_string(doc, "import_stmt", "import_stmt");
    s.handle = req_string(doc, "handle", "handle");
    if (auto it = doc.find("capabilities"); it == doc.end() || !it->is_array()) {
      diags_.push_back(schema_error("capabilities", "missing or not an array"));
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& c = (*it)[i];
        if (!c.is_string()) {
          diags_.push_back(schema_error("capabilities[" + std::to_string(i) + "]", "not a string"));
          continue;
        }
        s.capabilities.push_back(c.get<std::string>());
      }
    }
    if (auto it = doc.find("functions"); it == doc.end() || !it->is_array()) {
      diags_.push_back(schema_error("functions", "missing or not an array"));
    } else {
      for (std::size_t i = 0; i < it->size(); ++i)
        s.functions.push_back(decode_function((*it)[i], "functions[" + std::to_string(i) + "]"));
    }
    return s;
  }

 private:
  FunctionSpec decode_function(const json& j, const std::string& path) {
    FunctionSpec f;
    if (!j.is_object()) {
      diags_.push_back(schema_error(path, "function entry must be an object"));
      return f;
    }
    check_keys(j, path, {"name", "capability", "description", "params"});
    f.name = req_string(j, "name", path + ".name");
    f.capability = req_string(j, "capability", path + ".capability");
    f.description = req_string(j, "description", path + ".description");
    if (auto it = j.find("params"); it == j.end() || !it->is_array()) {
      diags_.push_back(schema_error(path + ".params", "missing or not an array"));
    } else {
      for (std::size_t i = 0; i < it->size(); ++i)
        f.params.push_back(decode_param((*it)[i], path + ".params[" + std::to_string(i) + "]"));
    }
    return f;
  }

  ParamSpec decode_param(const json& j, const std::string& path) {
    ParamSpec p;
    if (!j.is_object()) {
      diags_.push_back(schema_error(path, "param entry must be an object"));
      return p;
    }
    check_keys(j, path, {"name", "kind", "unit", "min", "max", "allowed", "required", "default"});
    p.name = req_string(j, "name", path + ".name");
    const std::string kind = req_string(j, "kind", path + ".kind");
    if (auto k = param_kind_from_string(kind)) {
      p.kind = *k;
    } else if (!kind.empty()) {
      diags_.push_back(schema_error(path + ".kind", "unknown kind '" + kind + "'"));
    }
    if (auto it = j.find("unit"); it != j.end()) {
      if (it->is_string()) p.unit = it->get<std::string>();
      else diags_.push_back(schema_error(path + ".unit", "not a string"));
    }
    for (const char* key : {"min", "max"}) {
      if (auto it = j.find(key); it != j.end()) {
        if (!it->is_number()) {
          diags_.push_back(schema_error(path + "." + key, "not a number"));
          continue;
        }
        (std::string_view(key) == "min" ? p.min : p.max) = it->get<double>();
      }
    }
    if (auto it = j.find("allowed"); it != j.end()) {
      if (!it->is_array()) {
        diags_.push_back(schema_error(path + ".allowed", "not an array"));
      } else {
        for (const auto& v : *it) {
          if (v.is_string()) p.allowed.push_back(v.get<std::string>());
          else diags_.push_back(schema_error(path + ".allowed", "entries must be strings"));
        }
      }
    }
    if (auto it = j.find("required"); it != j.end()) {
      if (it->is_boolean()) p.required = it->get<bool>();
      else diags_.push_back(schema_error(path + ".required", "not a boolean"));
    }
    if (auto it = j.find("default"); it != j.end()) {
      if (it->is_number_integer()) p.default_value = Literal{it->get<long long>()};
      else if (it->is_number()) p.default_value = Literal{it->get<double>()};
      else if (it->is_string()) p.default_value = Literal{it->get<std::string>()};
      else diags_.push_back(schema_error(path + ".default", "must be a number or string"));
    }
    return p;
  }

  void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> known) {
    for (const auto& [key, _] : obj.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end())
        diags_.push_back(schema_error(path.empty() ? key : path + "." + key, "unknown key '" + key + "'"));
    }
  }

  std::string req_string(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      diags_.push_back(schema_error(path, "missing required key"));
      return {};
    }
    if (!it->is_string()) {
      diags_.push_back(schema_error(path, "not a string"));
      return {};
    }
    return it->get<std::string>();
  }

  DiagnosticList& diags_;
};

bool default_satisfies(const ParamSpec& p, const Literal& v, std::string& why) {
  switch (p.kind) {
    case ParamKind::kInt:
      if (!std::holds_alternative<long long>(v)) {
        why = "default is not an int";
        return false;
      }
      break;
    case ParamKind::kFloat:
      if (std::holds_alternative<std::string>(v)) {
        why = "default is not numeric";
        return false;
      }
      break;
    case ParamKind::kString:
      if (!std::holds_alternative<std::string>(v)) {
        why = "default is not a string";
        return false;
      }
      return true;
    case ParamKind::kEnum: {
      const auto* s = std::get_if<std::string>(&v);
      if (!s || std::find(p.allowed.begin(), p.allowed.end(), *s) == p.allowed.end()) {
        why = "default not in allowed set";
        return false;
      }
      return true;
    }
  }
  double x = std::holds_alternative<long long>(v) ? static_cast<double>(std::get<long long>(v))
                                                   : std::get<double>(v);
  if ((p.min && x < *p.min) || (p.max && x > *p.max)) {
    why = "default outside bounds";
    return false;
  }
  return true;
}

}  // namespace

DiagnosticList validate_schema(const SdkSchema& schema) {
  DiagnosticList diags;
  if (!is_sdk_id(schema.sdk_id))
    diags.push_back(schema_error("sdk_id", "sdk_id must match [a-z][a-z0-9_]*"));
  if (schema.import_stmt.empty() || schema.import_stmt.find('\n') != std::string::npos)
    diags.push_back(schema_error("import_stmt", "import_stmt must be a single nonempty line"));
  if (!is_identifier(schema.handle))
    diags.push_back(schema_error("handle", "handle must be an identifier"));

  std::set<std::string> caps;
  for (std::size_t i = 0; i < schema.capabilities.size(); ++i) {
    const auto& c = schema.capabilities[i];
    std::string path = "capabilities[" + std::to_string(i) + "]";
    if (!is_capability(c)) diags.push_back(schema_error(path, "tag '" + c + "' is not in the capability vocabulary"));
    if (!caps.insert(c).second) diags.push_back(schema_error(path, "duplicate capability '" + c + "'"));
  }

  if (schema.functions.empty()) diags.push_back(schema_error("functions", "at least one function is required"));

  std::set<std::string> fn_names;
  for (std::size_t fi = 0; fi < schema.functions.size(); ++fi) {
    const auto& f = schema.functions[fi];
    const std::string fpath = "functions[" + std::to_string(fi) + "]";
    if (!is_identifier(f.name)) diags.push_back(schema_error(fpath + ".name", "name must be an identifier"));
    if (!fn_names.insert(f.name).second)
      diags.push_back(schema_error(fpath + ".name", "duplicate function name '" + f.name + "'"));
    if (!caps.count(f.capability))
      diags.push_back(schema_error(fpath + ".capability", "unknown capability '" + f.capability + "'"));

    std::set<std::string> param_names;
    bool seen_optional = false;
    for (std::size_t pi = 0; pi < f.params.size(); ++pi) {
      const auto& p = f.params[pi];
      const std::string ppath = fpath + ".params[" + std::to_string(pi) + "]";
      if (!is_identifier(p.name)) diags.push_back(schema_error(ppath + ".name", "name must be an identifier"));
      if (!param_names.insert(p.name).second)
        diags.push_back(schema_error(ppath + ".name", "duplicate param name '" + p.name + "'"));
      if (!p.required) {
        seen_optional = true;
      } else if (seen_optional) {
        diags.push_back(schema_error(ppath + ".required", "required param follows an optional param"));
      }
      if (p.min && p.max && *p.min > *p.max) diags.push_back(schema_error(ppath, "min exceeds max"));
      const bool numeric = p.kind == ParamKind::kInt || p.kind == ParamKind::kFloat;
      if (!numeric && (p.min || p.max)) diags.push_back(schema_error(ppath, "bounds on a non-numeric param"));
      if (p.kind == ParamKind::kEnum && p.allowed.empty())
        diags.push_back(schema_error(ppath + ".allowed", "enum param requires a nonempty allowed list"));
      if (p.kind != ParamKind::kEnum && !p.allowed.empty())
        diags.push_back(schema_error(ppath + ".allowed", "allowed list on a non-enum param"));
      if (p.default_value) {
        std::string why;
        if (!default_satisfies(p, *p.default_value, why)) diags.push_back(schema_error(ppath + ".default", why));
      }
    }
  }
  return diags;
}

Checked<SdkSchema> parse_schema(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    return DiagnosticList{parse_error(line, col, e.what())};
  }
  DiagnosticList diags;
  SdkSchema schema = Decoder(diags).decode(doc);
  if (!diags.empty()) return diags;
  diags = validate_schema(schema);
  if (!diags.empty()) return diags;
  return schema;
}

Checked<SdkSchema> load_schema(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return DiagnosticList{parse_error(0, 0, "cannot read " + path.string())};
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

const FunctionSpec* lookup_function(const SdkSchema& schema, std::string_view name) {
  for (const auto& f : schema.functions)
    if (f.name == name) return &f;
  return nullptr;
}

std::string serialize_schema(const SdkSchema& schema) {
  // ordered_json keeps the file-format key order stable.
  nlohmann::ordered_json doc;
  doc["sdk_id"] = schema.sdk_id;
  doc["import_stmt"] = schema.import_stmt;
  doc["handle"] = schema.handle;
  doc["capabilities"] = schema.capabilities;
  doc["functions"] = nlohmann::ordered_json::array();
  for (const auto& f : schema.functions) {
    nlohmann::ordered_json jf;
    jf["name"] = f.name;
    jf["capability"] = f.capability;
    jf["description"] = f.description;
    jf["params"] = nlohmann::ordered_json::array();
    for (const auto& p : f.params) {
      nlohmann::ordered_json jp;
      jp["name"] = p.name;
      jp["kind"] = std::string(to_string(p.kind));
      if (p.unit) jp["unit"] = *p.unit;
      if (p.min) jp["min"] = *p.min;
      if (p.max) jp["max"] = *p.max;
      if (!p.allowed.empty()) jp["allowed"] = p.allowed;
      jp["required"] = p.required;
      if (p.default_value) {
        std::visit([&](const auto& v) { jp["default"] = v; }, *p.default_value);
      }
      jf["params"].push_back(std::move(jp));
    }
    doc["functions"].push_back(std::move(jf));
  }
  return doc.dump(2) + "\n";
}

std::vector<SdkSchema> load_schema_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  if (ec) throw SchemaLoadError("cannot list schema directory " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<SdkSchema> out;
  std::string problems;
  for (const auto& f : files) {
    auto res = load_schema(f);
    if (!res) {
      problems += f.filename().string() + ":\n" + format_diagnostics(res.diagnostics());
      continue;
    }
    out.push_back(std::move(res).value());
  }
  if (!problems.empty()) throw SchemaLoadError(problems);
  if (out.empty()) throw SchemaLoadError("no schema files in " + dir.string());
  std::set<std::string> ids, imports;
  for (const auto& s : out) {
    if (!ids.insert(s.sdk_id).second) throw SchemaLoadError("duplicate sdk_id " + s.sdk_id);
    if (!imports.insert(s.import_stmt).second) throw SchemaLoadError("duplicate import_stmt " + s.import_stmt);
  }
  return out;
}

const SdkSchema* find_schema(const std::vector<SdkSchema>& schemas, std::string_view sdk_id) {
  for (const auto& s : schemas)
    if (s.sdk_id == sdk_id) return &s;
  return nullptr;
}

}  // namespace uavd
