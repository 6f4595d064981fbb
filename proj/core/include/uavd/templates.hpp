#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace uavd {

/// Surface templates used to render instructions and reasoning steps.
///
/// Placeholders use `{name}` syntax. Rendering fails with TemplateError if a
/// placeholder has no binding, so a typo in a template never leaks into data.
struct TemplateSet {
  /// capability -> phrase templates; bindings: {desc}, {args}.
  std::map<std::string, std::vector<std::string>, std::less<>> call_phrases;
  /// Whole-instruction frames; binding: {calls}.
  std::vector<std::string> instruction_frames;
  /// One template per reasoning stage name.
  std::map<std::string, std::string, std::less<>> think;

  static TemplateSet defaults();
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes `{key}` occurrences. Throws TemplateError on any unresolved key.
std::string fill_template(std::string_view tmpl, const Bindings& bindings);

}  // namespace uavd
