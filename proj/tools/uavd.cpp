// Command-line driver for the full pipeline: schemas, corpus generation,
// teacher training, distillation, evaluation, benchmarking and one-shot gen.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "uavd/bench.hpp"
#include "uavd/checkpoint.hpp"
#include "uavd/dataset.hpp"
#include "uavd/error.hpp"
#include "uavd/inference.hpp"
#include "uavd/pipeline_config.hpp"
#include "uavd/schema.hpp"
#include "uavd/train.hpp"
#include "uavd/validator.hpp"

namespace fs = std::filesystem;
using namespace uavd;

namespace {

struct Options {
  std::string config_path = UAVD_DEFAULT_CONFIG;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  std::string dir, schemas = UAVD_DEFAULT_SCHEMAS, out, corpus, teacher, model, sdk, instruction, mode, split = "test";
  std::optional<int> per_sdk, steps;
  std::optional<double> cf_ratio, alpha, temp, beta;
  std::vector<std::string> models;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write " + path);
  f << text;
  if (!f) throw InputError("failed writing " + path);
}

std::vector<SdkSchema> load_schemas(const std::string& dir) { return load_schema_dir(dir); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void log_progress(const Options& o, const TrainHistory& h, const std::string& what) {
  if (o.quiet) return;
  for (const auto& s : h.steps)
    if (s.probe_accuracy)
      std::fprintf(stderr, "%s step %ld loss %.4f probe_acc %.4f\n", what.c_str(), s.step, s.loss.total,
                   *s.probe_accuracy);
}

int cmd_schema_check(const Options& o) {
  const auto schemas = load_schemas(o.dir);
  std::printf("%zu schemas OK\n", schemas.size());
  return 0;
}

int cmd_data_gen(const Options& o, PipelineConfig cfg) {
  const auto schemas = load_schemas(o.schemas);
  if (o.per_sdk) cfg.data_gen.per_sdk = *o.per_sdk;
  if (o.cf_ratio) cfg.data_gen.counterfactual_ratio = *o.cf_ratio;
  const Corpus corpus = build_corpus(schemas, cfg.data_gen);
  write_corpus(corpus, o.out);
  std::printf("%zu samples (%zu train, %zu val, %zu test) -> %s\n", corpus.samples.size(),
              corpus.indices(Split::kTrain).size(), corpus.indices(Split::kVal).size(),
              corpus.indices(Split::kTest).size(), o.out.c_str());
  return 0;
}

int cmd_train_teacher(const Options& o, PipelineConfig cfg) {
  const Corpus corpus = read_corpus(o.corpus);
  if (o.steps) cfg.train_teacher.steps = *o.steps;
  const Tokenizer tok = build_vocab(corpus);
  const int ctx = longest_sample(tok, corpus) + cfg.context_slack;
  Checkpoint ck{ModelState(ModelConfig::teacher_preset(static_cast<int>(tok.size()), ctx)), tok, "teacher"};
  ck.model.init(cfg.train_teacher.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainHistory h = train_teacher(ck.model, tok, corpus, cfg.train_teacher);
  log_progress(o, h, "teacher");
  save_checkpoint(ck, o.out);
  std::printf("teacher: %zu params, %d steps, final loss %.4f, %.1f s -> %s\n", parameter_count(ck.model.config),
              cfg.train_teacher.steps, h.steps.back().loss.total, seconds_since(t0), o.out.c_str());
  return 0;
}

int cmd_distill(const Options& o, PipelineConfig cfg) {
  const Checkpoint teacher = load_checkpoint(o.teacher);
  const Corpus corpus = read_corpus(o.corpus);
  const auto schemas = load_schemas(o.schemas);
  DistillConfig& d = cfg.distill;
  if (!o.mode.empty()) {
    auto m = distill_mode_from_string(o.mode);
    if (!m) throw ConfigError("unknown distill mode '" + o.mode + "'");
    d.mode = *m;
  }
  if (o.alpha) d.alpha = *o.alpha;
  if (o.temp) d.temperature = *o.temp;
  if (o.beta) d.beta = *o.beta;
  if (o.steps) d.steps = *o.steps;
  const ModelConfig student_cfg =
      ModelConfig::student_preset(teacher.model.config.vocab_size, teacher.model.config.max_seq_len);
  const auto t0 = std::chrono::steady_clock::now();
  DistillResult r = distill(teacher.model, student_cfg, teacher.tokenizer, corpus, schemas, d);
  log_progress(o, r.history, "student");
  save_checkpoint(Checkpoint{std::move(r.student), teacher.tokenizer, "student"}, o.out);
  std::printf("student: %zu params (teacher %zu, ratio %.3f), mode %s, %zu regenerated / %zu kept, final loss %.4f, "
              "%.1f s -> %s\n",
              r.student_param_count, r.teacher_param_count,
              static_cast<double>(r.student_param_count) / static_cast<double>(r.teacher_param_count),
              std::string(to_string(d.mode)).c_str(), r.regenerated, r.kept_reference,
              r.history.steps.back().loss.total, seconds_since(t0), o.out.c_str());
  return 0;
}

int cmd_eval(const Options& o, const PipelineConfig& cfg) {
  const Checkpoint ck = load_checkpoint(o.model);
  const Corpus corpus = read_corpus(o.corpus);
  const auto schemas = load_schemas(o.schemas);
  const auto split = split_from_string(o.split);
  if (!split) throw InputError("unknown split '" + o.split + "'");
  const EvalMetrics m = evaluate_split(ck.model, ck.tokenizer, corpus, *split, schemas, cfg.gen_max_new);
  const std::string csv = metrics_to_csv(m);
  write_file(o.out, csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_bench(const Options& o, const PipelineConfig& cfg) {
  const Corpus corpus = read_corpus(o.corpus);
  const auto test = corpus.indices(Split::kTest);
  if (test.empty()) throw InputError("corpus has no test split to draw prompts from");
  std::vector<BenchRow> rows;
  for (const auto& path : o.models) {
    const Checkpoint ck = load_checkpoint(path);
    std::vector<std::vector<TokenId>> prompts;
    for (std::size_t k = 0; k < test.size() && static_cast<int>(prompts.size()) < cfg.bench_prompts; ++k) {
      const Triplet& t = corpus.samples[test[k]];
      prompts.push_back(encode_prompt(ck.tokenizer, t.prompt_context, t.instruction));
    }
    const std::string name = ck.name.empty() ? fs::path(path).stem().string() : ck.name;
    rows.push_back(bench_checkpoint(path, name, prompts, cfg.bench));
  }
  fs::create_directories(o.out);
  const std::string md = render_table(rows, TableFormat::kMarkdown);
  write_file((fs::path(o.out) / "bench_report.md").string(), md);
  write_file((fs::path(o.out) / "bench_report.csv").string(), render_table(rows, TableFormat::kCsv));
  std::fputs(md.c_str(), stdout);
  return 0;
}

int cmd_gen(const Options& o, const PipelineConfig& cfg) {
  const Checkpoint ck = load_checkpoint(o.model);
  const auto schemas = load_schemas(o.schemas);
  const SdkSchema* schema = find_schema(schemas, o.sdk);
  if (!schema) throw InputError("unknown sdk '" + o.sdk + "'");
  const DecodedResponse r =
      respond(ck.model, ck.tokenizer, render_prompt_context(*schema), o.instruction, cfg.gen_max_new);
  if (detect_refusal(r.code))
    std::printf("%s\n", std::string(kRefusalLine).c_str());
  else
    std::printf("%s\n", render_response(r.think, r.code).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema-driven corpus generation, distillation and validation for drone-control code models", "uavd"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "Defaults file (keys mirror flag names)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Global seed (default 42)");
  app.add_flag("-q,--quiet", o.quiet, "Suppress progress output");

  auto* schema = app.add_subcommand("schema", "SDK schema tools");
  schema->require_subcommand(1);
  auto* schema_check = schema->add_subcommand("check", "Validate every schema in a directory");
  schema_check->add_option("dir", o.dir, "Schema directory")->required()->check(CLI::ExistingDirectory);

  auto* data = app.add_subcommand("data", "Corpus tools");
  data->require_subcommand(1);
  auto* data_gen = data->add_subcommand("gen", "Generate the instruct-think-code corpus");
  data_gen->add_option("--schemas", o.schemas, "Schema directory")->check(CLI::ExistingDirectory);
  data_gen->add_option("--out", o.out, "Output JSONL")->required();
  data_gen->add_option("--per-sdk", o.per_sdk, "Samples per SDK")->check(CLI::PositiveNumber);
  data_gen->add_option("--cf-ratio", o.cf_ratio, "Counterfactual ratio")->check(CLI::Range(0.0, 1.0));
  data_gen->add_option("--seed", o.seed, "Seed");

  auto* train = app.add_subcommand("train", "Model training");
  train->require_subcommand(1);
  auto* train_teacher_cmd = train->add_subcommand("teacher", "Train the teacher on hard labels");
  train_teacher_cmd->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  train_teacher_cmd->add_option("--out", o.out, "Output checkpoint")->required();
  train_teacher_cmd->add_option("--steps", o.steps, "Optimizer steps")->check(CLI::PositiveNumber);
  train_teacher_cmd->add_option("--seed", o.seed, "Seed");

  auto* distill_cmd = app.add_subcommand("distill", "Distill a teacher checkpoint into a student");
  distill_cmd->add_option("--teacher", o.teacher, "Teacher checkpoint")->required()->check(CLI::ExistingFile);
  distill_cmd->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  distill_cmd->add_option("--schemas", o.schemas, "Schema directory")->check(CLI::ExistingDirectory);
  distill_cmd->add_option("--mode", o.mode, "blackbox | whitebox | hybrid")
      ->check(CLI::IsMember({"blackbox", "whitebox", "hybrid"}));
  distill_cmd->add_option("--alpha", o.alpha, "Hard-label weight")->check(CLI::Range(0.0, 1.0));
  distill_cmd->add_option("--temp", o.temp, "Softmax temperature")->check(CLI::PositiveNumber);
  distill_cmd->add_option("--beta", o.beta, "Hidden-alignment weight")->check(CLI::NonNegativeNumber);
  distill_cmd->add_option("--steps", o.steps, "Optimizer steps")->check(CLI::PositiveNumber);
  distill_cmd->add_option("--out", o.out, "Output checkpoint")->required();
  distill_cmd->add_option("--seed", o.seed, "Seed");

  auto* eval = app.add_subcommand("eval", "Generate for a split and score it");
  eval->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--schemas", o.schemas, "Schema directory")->check(CLI::ExistingDirectory);
  eval->add_option("--split", o.split, "train | val | test")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", o.out, "Metrics CSV")->required();

  auto* bench = app.add_subcommand("bench", "Loading time, generation speed and memory per checkpoint");
  bench->add_option("--models", o.models, "Checkpoints")->required()->check(CLI::ExistingFile);
  bench->add_option("--corpus", o.corpus, "Corpus JSONL (test split supplies prompts)")
      ->required()
      ->check(CLI::ExistingFile);
  bench->add_option("--out", o.out, "Report directory")->required();

  auto* gen = app.add_subcommand("gen", "One-shot generation for an instruction");
  gen->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  gen->add_option("--schemas", o.schemas, "Schema directory")->check(CLI::ExistingDirectory);
  gen->add_option("--sdk", o.sdk, "Target SDK id")->required();
  gen->add_option("--instruction", o.instruction, "Natural-language instruction")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    PipelineConfig cfg = load_pipeline_config(o.config_path);
    if (o.seed) {
      cfg.seed = *o.seed;
      cfg.data_gen.seed = cfg.train_teacher.seed = cfg.distill.seed = *o.seed;
    }
    if (*schema_check) return cmd_schema_check(o);
    if (*data_gen) return cmd_data_gen(o, cfg);
    if (*train_teacher_cmd) return cmd_train_teacher(o, cfg);
    if (*distill_cmd) return cmd_distill(o, cfg);
    if (*eval) return cmd_eval(o, cfg);
    if (*bench) return cmd_bench(o, cfg);
    if (*gen) return cmd_gen(o, cfg);
  } catch (const SchemaLoadError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
