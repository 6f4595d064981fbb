#include "uavd/validator.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <set>

#include "uavd/dataset.hpp"
#include "uavd/tokenizer.hpp"

namespace uavd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct SyntaxFailure {
  std::string code;
  std::string message;
  int column;
};

// Cursor over one source line.
class LineParser {
 public:
  LineParser(std::string_view line, int line_no) : s_(line), line_no_(line_no) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool at_end() {
    skip_ws();
    return i_ >= s_.size();
  }
  bool peek(char c) {
    skip_ws();
    return i_ < s_.size() && s_[i_] == c;
  }
  void expect(char c) {
    if (!peek(c)) fail("PARSE_SYNTAX", std::string("expected '") + c + "'");
    ++i_;
  }
  std::string ident() {
    skip_ws();
    if (i_ >= s_.size() || !ident_start(s_[i_])) fail("PARSE_SYNTAX", "expected identifier");
    std::size_t j = i_ + 1;
    while (j < s_.size() && ident_char(s_[j])) ++j;
    std::string out(s_.substr(i_, j - i_));
    i_ = j;
    return out;
  }
  bool at_literal() {
    skip_ws();
    if (i_ >= s_.size()) return false;
    char c = s_[i_];
    return c == '"' || std::isdigit(static_cast<unsigned char>(c)) ||
           ((c == '-' || c == '+') && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])));
  }
  Literal literal() {
    skip_ws();
    if (i_ >= s_.size()) fail("PARSE_SYNTAX", "expected literal");
    if (s_[i_] == '"') {
      std::size_t j = i_ + 1;
      while (j < s_.size() && s_[j] != '"') ++j;
      if (j >= s_.size()) fail("PARSE_SYNTAX", "unterminated string literal");
      std::string v(s_.substr(i_ + 1, j - i_ - 1));
      i_ = j + 1;
      return Literal{v};
    }
    std::size_t j = i_;
    if (s_[j] == '-' || s_[j] == '+') ++j;
    const std::size_t digits_start = j;
    while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
    if (j == digits_start) fail("PARSE_SYNTAX", "expected literal");
    bool is_float = false;
    if (j < s_.size() && s_[j] == '.') {
      ++j;
      const std::size_t frac = j;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
      if (j == frac) fail("PARSE_SYNTAX", "malformed decimal literal");
      is_float = true;
    }
    if (j < s_.size() && ident_char(s_[j])) fail("PARSE_SYNTAX", "malformed numeric literal");
    std::string text(s_.substr(i_, j - i_));
    i_ = j;
    const char* first = text.data() + (text[0] == '+' ? 1 : 0);
    const char* last = text.data() + text.size();
    if (is_float) {
      double d = 0;
      auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || ptr != last) fail("PARSE_SYNTAX", "numeric literal out of range");
      return Literal{d};
    }
    long long v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail("PARSE_SYNTAX", "numeric literal out of range");
    return Literal{v};
  }

  // <handle>.<ident>(<kwargs>)
  Call call(std::string& receiver) {
    Call c;
    c.source_line = line_no_;
    receiver = ident();
    expect('.');
    c.name = ident();
    expect('(');
    std::set<std::string> names;
    if (!peek(')')) {
      while (true) {
        if (at_literal()) fail("PARSE_POSITIONAL", "positional argument; use name=value");
        std::string name = ident();
        if (!peek('=')) fail("PARSE_POSITIONAL", "argument '" + name + "' is not in keyword form");
        expect('=');
        Literal v = literal();
        if (!names.insert(name).second) fail("PARSE_SYNTAX", "duplicate keyword argument '" + name + "'");
        c.args.push_back(Arg{name, std::move(v)});
        if (peek(',')) {
          ++i_;
          continue;
        }
        break;
      }
    }
    expect(')');
    if (!at_end()) fail("PARSE_SYNTAX", "unexpected trailing text");
    return c;
  }

  [[noreturn]] void fail(const std::string& code, const std::string& msg) {
    throw SyntaxFailure{code, msg, static_cast<int>(i_) + 1};
  }

  std::size_t pos() const { return i_; }
  void set_pos(std::size_t p) { i_ = p; }

 private:
  std::string_view s_;
  std::size_t i_ = 0;
  int line_no_;
};

bool literal_is_numeric(const Literal& v) { return !std::holds_alternative<std::string>(v); }

double as_double(const Literal& v) {
  if (const auto* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

Diagnostic call_diag(const std::string& code, const std::string& msg, int line) {
  return Diagnostic{Severity::kError, code, msg, Locator{line, 0, {}}};
}

}  // namespace

Checked<CallSequence> parse_program(std::string_view text) {
  std::vector<std::pair<int, std::string_view>> lines;
  {
    std::size_t pos = 0;
    int no = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      auto end = nl == std::string_view::npos ? text.size() : nl;
      ++no;
      auto line = trim(text.substr(pos, end - pos));
      if (!line.empty()) lines.emplace_back(no, line);
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
  }
  auto syntax = [](int line, int col, std::string code, std::string msg) {
    return DiagnosticList{Diagnostic{Severity::kError, std::move(code), std::move(msg), Locator{line, col, {}}}};
  };
  if (lines.empty()) return syntax(1, 1, "PARSE_SYNTAX", "empty program");

  CallSequence seq;
  const auto& [first_no, first] = lines.front();
  if (!(first.starts_with("import ") || first.starts_with("from ")))
    return syntax(first_no, 1, "PARSE_SYNTAX", "program must begin with an import statement");
  seq.import_stmt = normalize_whitespace(first);

  std::size_t idx = 1;
  try {
    // Optional `<handle> = <Ctor>()`.
    if (idx < lines.size()) {
      LineParser p(lines[idx].second, lines[idx].first);
      std::string lhs = p.ident();
      if (p.peek('=')) {
        p.expect('=');
        std::string ctor = p.ident();
        p.expect('(');
        p.expect(')');
        if (!p.at_end()) p.fail("PARSE_SYNTAX", "unexpected trailing text");
        seq.handle = lhs;
        seq.ctor = ctor;
        ++idx;
      }
    }
    for (; idx < lines.size(); ++idx) {
      const auto& [no, line] = lines[idx];
      LineParser p(line, no);
      std::string receiver;
      bool is_on_error = false;
      if (line.starts_with("on_error")) {
        std::size_t save = p.pos();
        std::string kw = p.ident();
        if (kw == "on_error" && p.peek(':')) {
          p.expect(':');
          is_on_error = true;
        } else {
          p.set_pos(save);
        }
      }
      Call c = p.call(receiver);
      if (seq.handle.empty()) seq.handle = receiver;
      if (receiver != seq.handle)
        throw SyntaxFailure{"PARSE_SYNTAX", "receiver '" + receiver + "' differs from handle '" + seq.handle + "'", 1};
      if (seq.on_error) throw SyntaxFailure{"PARSE_SYNTAX", "on_error must be the final line", 1};
      if (is_on_error) seq.on_error = std::move(c);
      else seq.calls.push_back(std::move(c));
    }
  } catch (const SyntaxFailure& f) {
    return syntax(lines[std::min(idx, lines.size() - 1)].first, f.column, f.code, f.message);
  }
  if (seq.calls.empty()) return syntax(lines.back().first, 1, "PARSE_SYNTAX", "program has no calls");
  return seq;
}

std::string render_program(const CallSequence& seq) {
  auto render = [&](const Call& c) {
    std::string s = seq.handle + "." + c.name + "(";
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      if (i) s += ", ";
      s += c.args[i].name + "=" + render_literal(c.args[i].value);
    }
    return s + ")";
  };
  std::string out = seq.import_stmt;
  if (seq.ctor) out += "\n" + seq.handle + " = " + *seq.ctor + "()";
  for (const auto& c : seq.calls) out += "\n" + render(c);
  if (seq.on_error) out += "\non_error: " + render(*seq.on_error);
  return out;
}

bool detect_refusal(std::string_view text) { return trim(text) == kRefusalLine; }

SdkIdentification identify_sdk(std::string_view text, const std::vector<SdkSchema>& schemas) {
  if (detect_refusal(text)) return {std::nullopt, SdkMatch::kRefusal};
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (!line.empty()) {
      const std::string norm = normalize_whitespace(line);
      for (const auto& s : schemas)
        if (s.import_stmt == norm) return {s.sdk_id, SdkMatch::kMatched};
      return {std::nullopt, SdkMatch::kNoMatch};
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return {std::nullopt, SdkMatch::kNoMatch};
}

SdkIdentification identify_sdk(const CallSequence& seq, const std::vector<SdkSchema>& schemas) {
  for (const auto& s : schemas)
    if (s.import_stmt == seq.import_stmt) return {s.sdk_id, SdkMatch::kMatched};
  return {std::nullopt, SdkMatch::kNoMatch};
}

bool check_params(const Call& call, const FunctionSpec& fn, DiagnosticList& diags) {
  bool ok = true;
  const int line = call.source_line;
  for (const auto& a : call.args) {
    const ParamSpec* p = fn.find_param(a.name);
    if (!p) {
      diags.push_back(call_diag("PARAM_UNKNOWN", fn.name + ": unknown parameter '" + a.name + "'", line));
      ok = false;
      continue;
    }
    bool kind_ok = false;
    switch (p->kind) {
      case ParamKind::kInt: kind_ok = std::holds_alternative<long long>(a.value); break;
      case ParamKind::kFloat: kind_ok = literal_is_numeric(a.value); break;
      case ParamKind::kString:
      case ParamKind::kEnum: kind_ok = std::holds_alternative<std::string>(a.value); break;
    }
    if (!kind_ok) {
      diags.push_back(call_diag("PARAM_TYPE",
                                fn.name + "." + a.name + ": expected " + std::string(to_string(p->kind)) +
                                    ", got " + render_literal(a.value),
                                line));
      ok = false;
      continue;
    }
    if (p->kind == ParamKind::kEnum) {
      const auto& v = std::get<std::string>(a.value);
      if (std::find(p->allowed.begin(), p->allowed.end(), v) == p->allowed.end()) {
        diags.push_back(call_diag("PARAM_RANGE", fn.name + "." + a.name + ": '" + v + "' is not an allowed value", line));
        ok = false;
      }
    } else if (p->kind != ParamKind::kString) {
      const double x = as_double(a.value);
      if (!std::isfinite(x) || (p->min && x < *p->min) || (p->max && x > *p->max)) {
        diags.push_back(call_diag("PARAM_RANGE", fn.name + "." + a.name + ": " + render_literal(a.value) +
                                                     " outside the permitted range",
                                  line));
        ok = false;
      }
    }
  }
  for (const auto& p : fn.params) {
    if (!p.required) continue;
    bool bound = std::any_of(call.args.begin(), call.args.end(), [&](const Arg& a) { return a.name == p.name; });
    if (!bound) {
      diags.push_back(call_diag("PARAM_MISSING", fn.name + ": missing required parameter '" + p.name + "'", line));
      ok = false;
    }
  }
  return ok;
}

ValidationReport check_calls(const CallSequence& seq, const SdkSchema& schema) {
  ValidationReport r;
  if (normalize_whitespace(seq.import_stmt) == schema.import_stmt) {
    r.sdk_id = schema.sdk_id;
  } else {
    r.diagnostics.push_back(call_diag("IMPORT_MISMATCH",
                                      "import '" + seq.import_stmt + "' does not match " + schema.sdk_id, 1));
  }
  const bool handle_ok = seq.handle == schema.handle;
  if (!handle_ok)
    r.diagnostics.push_back(
        call_diag("HANDLE_MISMATCH", "receiver '" + seq.handle + "' is not " + schema.sdk_id + "'s handle", 0));

  auto verdict = [&](const Call& c, bool on_error) {
    CallVerdict v{c.name, c.source_line, on_error, false, false};
    const FunctionSpec* fn = lookup_function(schema, c.name);
    if (!fn) {
      r.diagnostics.push_back(call_diag("FN_UNKNOWN", schema.sdk_id + " has no function '" + c.name + "'", c.source_line));
    } else {
      v.function_ok = handle_ok;
      v.params_ok = check_params(c, *fn, r.diagnostics);
    }
    r.verdicts.push_back(v);
  };
  for (const auto& c : seq.calls) verdict(c, false);
  if (seq.on_error) verdict(*seq.on_error, true);
  return r;
}

}  // namespace uavd
