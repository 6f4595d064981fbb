#include "uavd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "uavd/error.hpp"
#include "uavd/rng.hpp"

namespace uavd {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kParse: return "parse";
    case Stage::kSelectSdk: return "select_sdk";
    case Stage::kRejectAlternative: return "reject_alternative";
    case Stage::kSequence: return "sequence";
    case Stage::kValidateParams: return "validate_params";
    case Stage::kRefuse: return "refuse";
  }
  return "?";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (Stage st : {Stage::kParse, Stage::kSelectSdk, Stage::kRejectAlternative, Stage::kSequence,
                   Stage::kValidateParams, Stage::kRefuse})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::string_view to_string(Label label) { return label == Label::kFeasible ? "feasible" : "infeasible"; }

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

std::vector<std::size_t> Corpus::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == which) out.push_back(i);
  return out;
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string render_bound(const ParamSpec& p, std::optional<double> bound) {
  if (!bound) return "any";
  if (p.kind == ParamKind::kInt) return render_literal(Literal{static_cast<long long>(std::llround(*bound))});
  return render_literal(Literal{*bound});
}

Literal sample_literal(const ParamSpec& p, const GenConfig& cfg, Rng& rng) {
  switch (p.kind) {
    case ParamKind::kEnum:
      return Literal{p.allowed[rng.below(p.allowed.size())]};
    case ParamKind::kString:
      return Literal{cfg.string_pool[rng.below(cfg.string_pool.size())]};
    case ParamKind::kInt:
    case ParamKind::kFloat:
      break;
  }
  double lo = p.min.value_or(p.max ? std::min(cfg.unbounded_lo, *p.max) : cfg.unbounded_lo);
  double hi = p.max.value_or(p.min ? std::max(cfg.unbounded_hi, *p.min) : cfg.unbounded_hi);
  const int g = std::max(1, cfg.grid_points);
  const auto k = static_cast<double>(rng.below(static_cast<std::uint64_t>(g) + 1));
  const double v = lo + k * (hi - lo) / g;
  if (p.kind == ParamKind::kInt) {
    long long iv = std::llround(v);
    iv = std::clamp(iv, static_cast<long long>(std::ceil(lo)), static_cast<long long>(std::floor(hi)));
    return Literal{iv};
  }
  double fv = std::clamp(std::round(v * 10.0) / 10.0, lo, hi);
  if (fv == 0.0) fv = 0.0;  // drop negative zero
  return Literal{fv};
}

std::vector<Binding> sample_args(const FunctionSpec& f, const GenConfig& cfg, Rng& rng) {
  std::vector<Binding> out;
  for (const auto& p : f.params) {
    if (!p.required && !rng.bernoulli(cfg.optional_param_prob)) continue;
    out.push_back(Binding{p.name, sample_literal(p, cfg, rng)});
  }
  return out;
}

std::string args_phrase(const FunctionSpec& f, const std::vector<Binding>& args) {
  if (args.empty()) return "";
  std::vector<std::string> parts;
  for (const auto& a : args) {
    std::string s = a.name + " " + render_literal(a.value);
    const ParamSpec* p = f.find_param(a.name);
    if (p && p->unit) s += " " + *p->unit;
    parts.push_back(std::move(s));
  }
  return " " + join(parts, ", ");
}

std::string call_phrase(const FunctionSpec& f, const std::vector<Binding>& args, const TemplateSet& templates,
                        Rng& rng) {
  auto it = templates.call_phrases.find(f.capability);
  if (it == templates.call_phrases.end() || it->second.empty())
    throw TemplateError("no phrase templates for capability '" + f.capability + "'");
  const auto& options = it->second;
  return fill_template(options[rng.below(options.size())], {{"desc", f.description}, {"args", args_phrase(f, args)}});
}

std::string compose_instruction(const std::vector<std::string>& phrases, const TemplateSet& templates, Rng& rng) {
  std::string calls;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i == 0) {
      calls = phrases[i];
    } else if (i + 1 == phrases.size()) {
      calls += ", and " + phrases[i];
    } else {
      calls += ", " + phrases[i];
    }
  }
  if (templates.instruction_frames.empty()) throw TemplateError("no instruction frames");
  const auto& frame = templates.instruction_frames[rng.below(templates.instruction_frames.size())];
  return fill_template(frame, {{"calls", calls}});
}

ReasoningStep step(const TemplateSet& templates, Stage stage, const Bindings& b) {
  auto it = templates.think.find(to_string(stage));
  if (it == templates.think.end()) throw TemplateError("no template for stage " + std::string(to_string(stage)));
  return ReasoningStep{stage, fill_template(it->second, b)};
}

std::string param_check(const FunctionSpec& f, const Binding& a) {
  const ParamSpec* p = f.find_param(a.name);
  std::string s = f.name + " " + a.name + "=" + render_literal(a.value);
  if (!p) return s;
  switch (p->kind) {
    case ParamKind::kEnum: return s + " is allowed";
    case ParamKind::kString: return s + " is text";
    case ParamKind::kInt:
    case ParamKind::kFloat:
      s += " within " + render_bound(*p, p->min) + " to " + render_bound(*p, p->max);
      if (p->unit) s += " " + *p->unit;
      return s;
  }
  return s;
}

std::string render_call(const std::string& handle, const std::string& fn, const std::vector<Binding>& args) {
  std::string s = handle + "." + fn + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ", ";
    s += args[i].name + "=" + render_literal(args[i].value);
  }
  return s + ")";
}

const FunctionSpec* safety_land(const SdkSchema& schema) {
  for (const auto& f : schema.functions) {
    if (f.capability != "land") continue;
    if (std::none_of(f.params.begin(), f.params.end(), [](const ParamSpec& p) { return p.required; })) return &f;
  }
  return nullptr;
}

std::vector<const FunctionSpec*> with_capability(const SdkSchema& s, std::initializer_list<std::string_view> caps) {
  std::vector<const FunctionSpec*> out;
  for (const auto& f : s.functions)
    if (std::find(caps.begin(), caps.end(), f.capability) != caps.end()) out.push_back(&f);
  return out;
}

template <class T>
std::vector<T> pick_distinct(std::vector<T> pool, std::size_t n, Rng& rng) {
  n = std::min(n, pool.size());
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(n);
  return pool;
}

}  // namespace

std::string render_prompt_context(const SdkSchema& schema) {
  std::vector<std::string> names;
  std::vector<std::string> constraints;
  for (const auto& f : schema.functions) {
    names.push_back(f.name);
    for (const auto& p : f.params) {
      if (p.kind == ParamKind::kEnum) {
        std::vector<std::string> quoted;
        for (const auto& a : p.allowed) quoted.push_back("\"" + a + "\"");
        constraints.push_back(f.name + "." + p.name + "[" + join(quoted, ", ") + "]");
      } else if (p.min || p.max) {
        constraints.push_back(f.name + "." + p.name + "[" + render_bound(p, p.min) + ", " + render_bound(p, p.max) + "]");
      }
    }
  }
  return "SDK: " + schema.sdk_id + "\nFUNCTIONS: " + join(names, ", ") +
         "\nCONSTRAINTS: " + (constraints.empty() ? std::string("none") : join(constraints, "; "));
}

std::string render_think(const std::vector<ReasoningStep>& think) {
  std::string out;
  for (std::size_t i = 0; i < think.size(); ++i) {
    if (i) out += '\n';
    out += std::string(to_string(think[i].stage)) + ": " + think[i].text;
  }
  return out;
}

TaskPlan sample_task(const SdkSchema& schema, int seed_index, const GenConfig& cfg) {
  if (schema.functions.size() < 3)
    throw GenerationError("schema " + schema.sdk_id + " has fewer than 3 functions; cannot plan a composite task");
  if (cfg.min_calls < 3 || cfg.max_calls > 5 || cfg.min_calls > cfg.max_calls)
    throw GenerationError("call-count range must lie within [3, 5]");

  Rng rng = Rng::keyed(cfg.seed, "plan:" + schema.sdk_id, static_cast<std::uint64_t>(seed_index));
  const int n = cfg.min_calls + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_calls - cfg.min_calls + 1)));

  auto starts = with_capability(schema, {"takeoff"});
  auto ends = with_capability(schema, {"land", "rtl"});
  std::vector<const FunctionSpec*> middle;
  for (const auto& f : schema.functions)
    if (f.capability != "takeoff" && f.capability != "land" && f.capability != "rtl") middle.push_back(&f);

  std::vector<const FunctionSpec*> chosen;
  if (!starts.empty() && !ends.empty() && !middle.empty()) {
    chosen.push_back(starts[rng.below(starts.size())]);
    auto mid = pick_distinct(middle, static_cast<std::size_t>(n - 2), rng);
    chosen.insert(chosen.end(), mid.begin(), mid.end());
    chosen.push_back(ends[rng.below(ends.size())]);
  } else {
    std::vector<const FunctionSpec*> all;
    for (const auto& f : schema.functions) all.push_back(&f);
    chosen = pick_distinct(all, static_cast<std::size_t>(n), rng);
  }
  if (chosen.size() < 3) throw GenerationError("schema " + schema.sdk_id + " cannot supply 3 distinct calls");

  TaskPlan plan{schema.sdk_id, {}, seed_index};
  for (const FunctionSpec* f : chosen) plan.calls.push_back(PlannedCall{f->name, sample_args(*f, cfg, rng)});
  return plan;
}

Triplet render_triplet(const TaskPlan& plan, const SdkSchema& schema, const TemplateSet& templates,
                       const GenConfig& cfg, const std::vector<SdkSchema>* alternatives) {
  Rng rng = Rng::keyed(cfg.seed, "render:" + schema.sdk_id, static_cast<std::uint64_t>(plan.seed_index));

  std::vector<const FunctionSpec*> fns;
  for (const auto& c : plan.calls) {
    const FunctionSpec* f = lookup_function(schema, c.function);
    if (!f) throw GenerationError("plan calls unknown function " + c.function + " for " + schema.sdk_id);
    fns.push_back(f);
  }

  Triplet t;
  t.sdk_id = schema.sdk_id;
  t.seed_index = plan.seed_index;
  t.label = Label::kFeasible;
  t.prompt_context = render_prompt_context(schema);

  std::vector<std::string> phrases;
  for (std::size_t i = 0; i < fns.size(); ++i) phrases.push_back(call_phrase(*fns[i], plan.calls[i].args, templates, rng));
  t.instruction = compose_instruction(phrases, templates, rng);

  std::vector<std::string> caps;
  for (const auto* f : fns) caps.push_back(f->capability);
  t.think.push_back(step(templates, Stage::kParse, {{"caps", join(caps, ", ")}}));
  t.think.push_back(step(templates, Stage::kSelectSdk, {{"sdk", schema.sdk_id}, {"handle", schema.handle}}));

  if (cfg.reject_alternative && alternatives) {
    std::vector<std::pair<const SdkSchema*, std::string>> lacking;
    std::vector<const SdkSchema*> others;
    for (const auto& alt : *alternatives) {
      if (alt.sdk_id == schema.sdk_id) continue;
      others.push_back(&alt);
      for (const auto& c : caps) {
        if (!alt.has_capability(c)) {
          lacking.emplace_back(&alt, c);
          break;
        }
      }
    }
    if (!lacking.empty()) {
      const auto& [alt, cap] = lacking[rng.below(lacking.size())];
      t.think.push_back(step(templates, Stage::kRejectAlternative, {{"alt", alt->sdk_id}, {"reason", "it lacks " + cap}}));
    } else if (!others.empty()) {
      const SdkSchema* alt = others[rng.below(others.size())];
      t.think.push_back(step(templates, Stage::kRejectAlternative,
                             {{"alt", alt->sdk_id}, {"reason", "the prompt targets " + schema.sdk_id}}));
    }
  }

  std::vector<std::string> names;
  for (const auto* f : fns) names.push_back(f->name);
  t.think.push_back(step(templates, Stage::kSequence, {{"calls", join(names, ", then ")}}));

  std::vector<std::string> checks;
  for (std::size_t i = 0; i < fns.size(); ++i)
    for (const auto& a : plan.calls[i].args) checks.push_back(param_check(*fns[i], a));
  t.think.push_back(step(templates, Stage::kValidateParams,
                         {{"checks", checks.empty() ? std::string("no parameters to check") : join(checks, "; ")}}));

  t.code = schema.import_stmt;
  for (std::size_t i = 0; i < fns.size(); ++i) t.code += "\n" + render_call(schema.handle, fns[i]->name, plan.calls[i].args);
  if (const FunctionSpec* safe = safety_land(schema)) t.code += "\non_error: " + render_call(schema.handle, safe->name, {});
  return t;
}

Triplet make_counterfactual(const SdkSchema& schema, const std::vector<SdkSchema>& all_schemas, int seed_index,
                            const GenConfig& cfg, const TemplateSet& templates) {
  std::vector<std::string> missing, plausible;
  for (auto cap : kCapabilities) {
    if (schema.has_capability(cap)) continue;
    missing.emplace_back(cap);
    for (const auto& other : all_schemas) {
      if (other.sdk_id != schema.sdk_id && other.has_capability(cap)) {
        plausible.emplace_back(cap);
        break;
      }
    }
  }
  if (missing.empty()) throw GenerationError("no counterfactual axis: " + schema.sdk_id + " covers every capability");

  Rng rng = Rng::keyed(cfg.seed, "counterfactual:" + schema.sdk_id, static_cast<std::uint64_t>(seed_index));
  const auto& pool = plausible.empty() ? missing : plausible;
  const std::string cap = pool[rng.below(pool.size())];

  // Borrow a concrete function for the missing capability from another SDK so
  // the request reads like a real command.
  std::vector<const FunctionSpec*> donors;
  for (const auto& other : all_schemas) {
    if (other.sdk_id == schema.sdk_id) continue;
    for (const auto& f : other.functions)
      if (f.capability == cap) donors.push_back(&f);
  }
  FunctionSpec fallback{"", {}, cap, "use the " + cap + " function"};
  const FunctionSpec& donor = donors.empty() ? fallback : *donors[rng.below(donors.size())];

  std::vector<std::string> phrases;
  std::vector<std::string> caps;
  auto starts = with_capability(schema, {"takeoff"});
  auto ends = with_capability(schema, {"land", "rtl"});
  if (!starts.empty()) {
    const FunctionSpec* f = starts[rng.below(starts.size())];
    phrases.push_back(call_phrase(*f, sample_args(*f, cfg, rng), templates, rng));
    caps.push_back(f->capability);
  }
  phrases.push_back(call_phrase(donor, sample_args(donor, cfg, rng), templates, rng));
  caps.push_back(cap);
  if (!ends.empty()) {
    const FunctionSpec* f = ends[rng.below(ends.size())];
    phrases.push_back(call_phrase(*f, sample_args(*f, cfg, rng), templates, rng));
    caps.push_back(f->capability);
  }

  Triplet t;
  t.sdk_id = schema.sdk_id;
  t.seed_index = seed_index;
  t.label = Label::kInfeasible;
  t.requested_capability = cap;
  t.prompt_context = render_prompt_context(schema);
  t.instruction = compose_instruction(phrases, templates, rng);
  t.think.push_back(step(templates, Stage::kParse, {{"caps", join(caps, ", ")}}));
  t.think.push_back(step(templates, Stage::kRefuse, {{"sdk", schema.sdk_id}, {"cap", cap}}));
  t.code = std::string(kRefusalLine);
  return t;
}

int counterfactual_count(const GenConfig& cfg) {
  return static_cast<int>(std::llround(cfg.per_sdk * cfg.counterfactual_ratio));
}

Corpus build_corpus(const std::vector<SdkSchema>& schemas, const GenConfig& cfg, const TemplateSet& templates) {
  if (schemas.empty()) throw GenerationError("build_corpus needs at least one schema");
  if (cfg.per_sdk < 1) throw GenerationError("per_sdk must be positive");
  if (cfg.counterfactual_ratio < 0.0 || cfg.counterfactual_ratio > 1.0)
    throw GenerationError("counterfactual ratio must lie in [0, 1]");
  const double fsum = cfg.train_fraction + cfg.val_fraction + cfg.test_fraction;
  if (std::fabs(fsum - 1.0) > 1e-9 || cfg.train_fraction < 0 || cfg.val_fraction < 0 || cfg.test_fraction < 0)
    throw GenerationError("split fractions must be nonnegative and sum to 1");

  Corpus corpus;
  corpus.gen_config = cfg;
  corpus.seed = cfg.seed;

  const int n_cf = counterfactual_count(cfg);
  const int n_feasible = cfg.per_sdk - n_cf;
  // Guards against pathological schemas where fresh draws keep colliding.
  const int max_attempts_factor = 50;

  for (const auto& schema : schemas) {
    for (Label label : {Label::kFeasible, Label::kInfeasible}) {
      const int want = label == Label::kFeasible ? n_feasible : n_cf;
      std::set<std::string> seen;
      std::vector<Triplet> group;
      for (int k = 0; static_cast<int>(group.size()) < want; ++k) {
        if (k >= want * max_attempts_factor + 100)
          throw GenerationError(schema.sdk_id + ": could not draw " + std::to_string(want) + " distinct " +
                                std::string(to_string(label)) + " samples");
        Triplet t;
        try {
          t = label == Label::kFeasible
                  ? render_triplet(sample_task(schema, k, cfg), schema, templates, cfg, &schemas)
                  : make_counterfactual(schema, schemas, k, cfg, templates);
        } catch (const GenerationError& e) {
          throw GenerationError(schema.sdk_id + ": " + e.what());
        }
        if (!seen.insert(t.instruction).second) continue;
        group.push_back(std::move(t));
      }

      // Stratified split for this (sdk, label) group.
      const auto m = group.size();
      const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(m) * cfg.train_fraction));
      const auto n_val = std::min(m - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(m) * cfg.val_fraction)));
      std::vector<std::size_t> order(m);
      for (std::size_t i = 0; i < m; ++i) order[i] = i;
      Rng rng = Rng::keyed(cfg.seed, "split:" + schema.sdk_id + ":" + std::string(to_string(label)), 0);
      for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      std::vector<Split> assign(m, Split::kTest);
      for (std::size_t r = 0; r < m; ++r) {
        if (r < n_train) assign[order[r]] = Split::kTrain;
        else if (r < n_train + n_val) assign[order[r]] = Split::kVal;
      }
      for (std::size_t i = 0; i < m; ++i) {
        corpus.samples.push_back(std::move(group[i]));
        corpus.split.push_back(assign[i]);
      }
    }
  }
  return corpus;
}

}  // namespace uavd
