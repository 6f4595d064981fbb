#include "uavd/templates.hpp"

#include "uavd/error.hpp"

namespace uavd {

std::string fill_template(std::string_view tmpl, const Bindings& bindings) {
  std::string out;
  out.reserve(tmpl.size() + 32);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out += tmpl[i++];
      continue;
    }
    auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw TemplateError("unterminated placeholder in '" + std::string(tmpl) + "'");
    auto key = tmpl.substr(i + 1, close - i - 1);
    auto it = bindings.find(key);
    if (it == bindings.end())
      throw TemplateError("unresolved placeholder {" + std::string(key) + "} in '" + std::string(tmpl) + "'");
    out += it->second;
    i = close + 1;
  }
  return out;
}

TemplateSet TemplateSet::defaults() {
  TemplateSet t;
  t.call_phrases = {
      {"takeoff", {"{desc}{args}", "first {desc}{args}", "to start {desc}{args}"}},
      {"land", {"{desc}{args}", "finally {desc}{args}", "to finish {desc}{args}"}},
      {"rtl", {"{desc}{args}", "afterwards {desc}{args}", "to wrap up {desc}{args}"}},
      {"move", {"{desc}{args}", "then {desc}{args}", "next {desc}{args}"}},
      {"rotate", {"{desc}{args}", "then {desc}{args}", "after that {desc}{args}"}},
      {"altitude", {"{desc}{args}", "next {desc}{args}", "for height control {desc}{args}"}},
      {"speed", {"{desc}{args}", "please {desc}{args}", "for pacing {desc}{args}"}},
      {"photo", {"{desc}{args}", "then {desc}{args}", "for imaging {desc}{args}"}},
      {"video", {"{desc}{args}", "then {desc}{args}", "for footage {desc}{args}"}},
      {"waypoint", {"{desc}{args}", "next {desc}{args}", "for navigation {desc}{args}"}},
      {"flip", {"{desc}{args}", "then {desc}{args}", "for fun {desc}{args}"}},
      {"gimbal", {"{desc}{args}", "then {desc}{args}", "for the camera {desc}{args}"}},
  };
  t.instruction_frames = {"{calls}.", "please {calls}.", "mission: {calls}."};
  t.think = {
      {"parse", "the task needs {caps}."},
      {"select_sdk", "use {sdk} with handle {handle}."},
      {"reject_alternative", "{alt} is rejected because {reason}."},
      {"sequence", "call {calls}."},
      {"validate_params", "{checks}."},
      {"refuse", "{sdk} has no {cap} function."},
  };
  return t;
}

}  // namespace uavd
