#include "uavd/pipeline_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"
#include "uavd/error.hpp"

namespace uavd {

using json = nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

template <class T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

void apply_section(const json& doc, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!doc.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : doc.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception&) {
      throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
    }
  }
}

std::map<std::string, Setter> optimizer_keys(DistillConfig& c) {
  return {
      {"lr", set(c.lr)},
      {"beta1", set(c.beta1)},
      {"beta2", set(c.beta2)},
      {"weight-decay", set(c.weight_decay)},
      {"warmup-steps", set(c.warmup_steps)},
      {"min-lr-ratio", set(c.min_lr_ratio)},
      {"grad-clip", set(c.grad_clip)},
      {"batch-size", set(c.batch_size)},
      {"steps", set(c.steps)},
      {"probe-size", set(c.probe_size)},
      {"probe-interval", set(c.probe_interval)},
  };
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  std::string mode;
  auto distill_keys = optimizer_keys(cfg.distill);
  distill_keys["mode"] = set(mode);
  distill_keys["alpha"] = set(cfg.distill.alpha);
  distill_keys["temp"] = set(cfg.distill.temperature);
  distill_keys["beta"] = set(cfg.distill.beta);

  const std::map<std::string, std::function<void(const json&)>> sections = {
      {"seed", [&](const json& v) { cfg.seed = v.get<std::uint64_t>(); }},
      {"data-gen",
       [&](const json& v) {
         GenConfig& g = cfg.data_gen;
         apply_section(v, "data-gen",
                       {{"per-sdk", set(g.per_sdk)},
                        {"cf-ratio", set(g.counterfactual_ratio)},
                        {"min-calls", set(g.min_calls)},
                        {"max-calls", set(g.max_calls)},
                        {"grid-points", set(g.grid_points)},
                        {"optional-param-prob", set(g.optional_param_prob)},
                        {"train-fraction", set(g.train_fraction)},
                        {"val-fraction", set(g.val_fraction)},
                        {"test-fraction", set(g.test_fraction)}});
       }},
      {"train-teacher",
       [&](const json& v) {
         auto keys = optimizer_keys(cfg.train_teacher);
         keys["context-slack"] = set(cfg.context_slack);
         apply_section(v, "train-teacher", keys);
       }},
      {"distill", [&](const json& v) { apply_section(v, "distill", distill_keys); }},
      {"bench",
       [&](const json& v) {
         apply_section(v, "bench",
                       {{"load-repeats", set(cfg.bench.load_repeats)},
                        {"gen-repeats", set(cfg.bench.gen_repeats)},
                        {"max-new", set(cfg.bench.max_new)},
                        {"prompts", set(cfg.bench_prompts)}});
       }},
      {"gen", [&](const json& v) { apply_section(v, "gen", {{"max-new", set(cfg.gen_max_new)}}); }},
  };
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  for (const auto& [key, value] : doc.items()) {
    auto it = sections.find(key);
    if (it == sections.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }
  if (!mode.empty()) {
    auto m = distill_mode_from_string(mode);
    if (!m) throw ConfigError("unknown distill mode '" + mode + "'");
    cfg.distill.mode = *m;
  }
  cfg.data_gen.seed = cfg.seed;
  cfg.train_teacher.seed = cfg.seed;
  cfg.distill.seed = cfg.seed;
  cfg.train_teacher.validate();
  cfg.distill.validate();
  if (cfg.context_slack < 0) throw ConfigError("context-slack must be >= 0");
  if (cfg.bench_prompts < 1) throw ConfigError("bench.prompts must be >= 1");
  if (cfg.gen_max_new < 1) throw ConfigError("gen.max-new must be >= 1");
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str());
}

}  // namespace uavd
