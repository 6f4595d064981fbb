// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Criteria 3-5 and 9 share one teacher,
// trained once with the shipped configuration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "test_support.hpp"
#include "uavd/bench.hpp"
#include "uavd/checkpoint.hpp"
#include "uavd/grad_check.hpp"
#include "uavd/inference.hpp"
#include "uavd/loss.hpp"
#include "uavd/pipeline_config.hpp"
#include "uavd/train.hpp"

namespace fs = std::filesystem;
using namespace uavd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

Mat<double> random_matrix(Rng& rng, int r, int c, double scale) {
  Mat<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// ---------------------------------------------------------------- criterion 1

Outcome loss_identities() {
  const Stopwatch sw;
  double worst_alpha1 = 0, worst_kl_self = 0, worst_sum = 0;
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5, V = 13, ds = 4, dt = 6;
    const Mat<double> sl = random_matrix(rng, n, V, 3.0), tl = random_matrix(rng, n, V, 3.0);
    const Mat<double> sh = random_matrix(rng, n, ds, 1.0), th = random_matrix(rng, n, dt, 1.0);
    const Mat<double> proj = random_matrix(rng, ds, dt, 0.5);
    std::vector<TokenId> targets(n);
    for (auto& t : targets) t = static_cast<TokenId>(rng.below(V));
    std::vector<std::uint8_t> mask(n, 1);
    mask[0] = 0;

    DistillConfig cfg;
    cfg.alpha = 1.0;
    cfg.beta = 0.0;
    cfg.temperature = 0.5 + 4.0 * rng.uniform();
    const auto b = total_distill_loss<double>(sl, sh, &tl, &th, &proj, targets, mask, cfg);
    worst_alpha1 = std::max(worst_alpha1, std::abs(b.total - cross_entropy<double>(sl, targets, mask)));
    worst_kl_self = std::max(worst_kl_self, std::abs(kl_soft<double>(sl, sl, cfg.temperature, mask)));
    for (Eigen::Index i = 0; i < n; ++i)
      worst_sum = std::max(worst_sum, std::abs(softmax_t<double>(sl.row(i), cfg.temperature).sum() - 1.0));
  }

  RowVec<double> z(2);
  z << 2, 0;
  const RowVec<double> p = softmax_t<double>(z, 1.0);
  Mat<double> t2(1, 2), u2(1, 2);
  t2 << 2, 0;
  u2 << 0, 0;
  const std::vector<std::uint8_t> one{1};
  const std::vector<TokenId> zero{0};
  const double kl = kl_soft<double>(t2, u2, 1.0, one);
  const double ce = cross_entropy<double>(u2, zero, one);
  const bool hand = std::abs(p(0) - 0.8808) <= 1e-3 && std::abs(p(1) - 0.1192) <= 1e-3 &&
                    std::abs(kl - 0.3278) <= 1e-3 && std::abs(ce - std::log(2.0)) <= 1e-3;
  const double secs = sw.seconds();

  Outcome o;
  o.pass = worst_alpha1 <= 1e-9 && worst_kl_self <= 1e-12 && worst_sum <= 1e-12 && hand && secs < 1.0;
  o.detail = fmt("|total-CE| %.1e, KL(self) %.1e, |sum-1| %.1e, softmax[2,0]=[%.4f,%.4f], KL=%.4f, CE=%.4f, %.3f s",
                 worst_alpha1, worst_kl_self, worst_sum, p(0), p(1), kl, ce, secs);
  return o;
}

// ---------------------------------------------------------------- criterion 2

Outcome gradient_check() {
  const Stopwatch sw;
  const GradCheckResult good = grad_check();
  GradCheckOptions bad;
  bad.corrupt_backward = true;
  const GradCheckResult broken = grad_check(bad);
  const double secs = sw.seconds();
  Outcome o;
  o.pass = good.max_rel_error <= 1e-4 && broken.max_rel_error > 1e-2 && secs < 120.0;
  o.detail = fmt("max rel err %.2e over %zu entries (worst %s); corrupted backward %.2e; %.1f s", good.max_rel_error,
                 good.checked, good.worst_param.c_str(), broken.max_rel_error, secs);
  return o;
}

// ---------------------------------------------------------------- shared state

struct Workspace {
  fs::path dir;
  PipelineConfig cfg;
  std::vector<SdkSchema> schemas;
  Corpus corpus;
  Tokenizer tok;
  std::optional<ModelState> teacher;
  std::optional<TrainHistory> teacher_history;
  double teacher_cpu_s = 0;
  fs::path teacher_path;
  std::optional<ModelState> student;  // representative hybrid student
  fs::path student_path;
};

void prepare_corpus(Workspace& w) {
  w.schemas = load_schema_dir(uavd::testing::fixtures_dir());
  w.corpus = build_corpus(w.schemas, w.cfg.data_gen);
  w.tok = build_vocab(w.corpus);
}

void ensure_teacher(Workspace& w) {
  if (w.teacher) return;
  if (!w.teacher_path.empty()) {
    Checkpoint ck = load_checkpoint(w.teacher_path.string());
    if (ck.tokenizer.vocab() != w.tok.vocab()) throw InputError("teacher vocabulary does not match the corpus");
    w.teacher = std::move(ck.model);
    return;
  }
  const int ctx = longest_sample(w.tok, w.corpus) + w.cfg.context_slack;
  ModelState m(ModelConfig::teacher_preset(static_cast<int>(w.tok.size()), ctx));
  m.init(w.cfg.train_teacher.seed);
  const double c0 = cpu_seconds();
  w.teacher_history = train_teacher(m, w.tok, w.corpus, w.cfg.train_teacher);
  w.teacher_cpu_s = cpu_seconds() - c0;
  w.teacher_path = w.dir / "teacher.ckpt";
  save_checkpoint(Checkpoint{m, w.tok, "teacher"}, w.teacher_path.string());
  w.teacher = std::move(m);
}

// ---------------------------------------------------------------- criterion 3

Outcome teacher_training(Workspace& w) {
  ensure_teacher(w);
  if (!w.teacher_history) return {false, "teacher was loaded, not trained in this run"};
  const auto train = encode_split(w.tok, w.corpus, Split::kTrain);
  const AccuracyCount acc = token_accuracy(*w.teacher, train);
  const TrainHistory& h = *w.teacher_history;
  const std::size_t n = h.steps.size();
  const double s_start = h.smoothed_loss(std::min<std::size_t>(19, n - 1));
  const double s_mid = h.smoothed_loss(n / 2 - 1);
  const double s_end = h.smoothed_loss(n - 1);
  Outcome o;
  o.pass = acc.value() >= 0.80 && s_start > s_mid && s_mid > s_end && w.teacher_cpu_s <= 1800.0;
  o.detail = fmt("train token accuracy %.4f (%zu/%zu); smoothed loss %.4f -> %.4f -> %.4f; %zu steps, %.0f s CPU",
                 acc.value(), acc.correct, acc.total, s_start, s_mid, s_end, n, w.teacher_cpu_s);
  return o;
}

// ---------------------------------------------------------------- criterion 4

Outcome distillation_direction(Workspace& w) {
  ensure_teacher(w);
  const ModelState& teacher = *w.teacher;
  const ModelConfig student_cfg = ModelConfig::student_preset(teacher.config.vocab_size, teacher.config.max_seq_len);
  const auto train_set = encode_split(w.tok, w.corpus, Split::kTrain);
  const auto val = encode_split(w.tok, w.corpus, Split::kVal);

  // Teacher greedy decoding does not depend on the student seed; decode each
  // training prompt once and replay it for every seed.
  const SequenceSource greedy = teacher_greedy_source(teacher, w.tok, w.schemas);
  std::map<std::vector<TokenId>, std::optional<std::vector<TokenId>>> memo;
  const SequenceSource cached = [&](const EncodedSample& s, const Triplet& t) {
    std::vector<TokenId> key(s.ids.begin(), s.ids.begin() + static_cast<long>(s.response_start));
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(std::move(key), greedy(s, t)).first;
    return it->second;
  };

  struct SeedRun {
    std::uint64_t seed;
    double hybrid, hard;
  };
  std::vector<SeedRun> runs;
  std::vector<ModelState> hybrids;
  std::size_t regenerated = 0, kept = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    DistillConfig d = w.cfg.distill;
    d.seed = seed;
    d.mode = DistillMode::kHybrid;
    DistillResult r = distill(teacher, student_cfg, w.tok, w.corpus, w.schemas, d, &cached);
    regenerated = r.regenerated;
    kept = r.kept_reference;

    ModelState hard(student_cfg);
    hard.init(seed);
    train(hard, train_set, d);  // no teacher: cross-entropy on reference targets only

    runs.push_back({seed, token_accuracy(r.student, val).value(), token_accuracy(hard, val).value()});
    hybrids.push_back(std::move(r.student));
    std::fprintf(stderr, "  seed %llu: hybrid %.4f, hard-label %.4f\n", static_cast<unsigned long long>(seed),
                 runs.back().hybrid, runs.back().hard);
  }

  std::vector<double> hy, ha;
  for (const auto& r : runs) {
    hy.push_back(r.hybrid);
    ha.push_back(r.hard);
  }
  const double med_hybrid = median(hy), med_hard = median(ha);

  // The hybrid student with the median validation accuracy represents the
  // method in criteria 5 and 9.
  std::size_t rep = 0;
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (runs[i].hybrid == med_hybrid) rep = i;
  w.student_path = w.dir / "student.ckpt";
  save_checkpoint(Checkpoint{hybrids[rep], w.tok, "student"}, w.student_path.string());
  w.student = std::move(hybrids[rep]);

  std::string per_seed;
  for (const auto& r : runs)
    per_seed += fmt(" seed%llu=%.4f/%.4f", static_cast<unsigned long long>(r.seed), r.hybrid, r.hard);
  Outcome o;
  o.pass = med_hybrid >= med_hard;
  o.detail = fmt("median val token accuracy hybrid %.4f vs hard-label %.4f (%d steps;", med_hybrid, med_hard,
                 w.cfg.distill.steps) +
             per_seed + fmt("; %zu teacher targets, %zu references kept)", regenerated, kept);
  return o;
}

// ---------------------------------------------------------------- criterion 5

Outcome refusal_behavior(Workspace& w) {
  // Validator precision on every reference response of the corpus.
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& t : w.corpus.samples) {
    const bool flagged = detect_refusal(t.code);
    const bool infeasible = t.label == Label::kInfeasible;
    tp += flagged && infeasible;
    fp += flagged && !infeasible;
    fn += !flagged && infeasible;
  }
  const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;

  if (!w.student) distillation_direction(w);
  std::size_t cf = 0, cf_refused = 0, fe = 0, fe_refused = 0;
  for (std::size_t i : w.corpus.indices(Split::kTest)) {
    const Triplet& t = w.corpus.samples[i];
    const DecodedResponse r = respond(*w.student, w.tok, t.prompt_context, t.instruction, w.cfg.gen_max_new);
    const bool refused = detect_refusal(r.code);
    if (t.label == Label::kInfeasible) {
      ++cf;
      cf_refused += refused;
    } else {
      ++fe;
      fe_refused += refused;
    }
  }
  const double cf_rate = cf ? static_cast<double>(cf_refused) / static_cast<double>(cf) : 0.0;
  const double fe_rate = fe ? static_cast<double>(fe_refused) / static_cast<double>(fe) : 1.0;
  Outcome o;
  o.pass = precision == 1.0 && fn == 0 && cf > 0 && cf_rate >= 0.9 && fe_rate <= 0.05;
  o.detail = fmt("detect_refusal precision %.3f (%zu tp, %zu fp, %zu fn); student refuses %zu/%zu counterfactual "
                 "(%.3f), %zu/%zu feasible (%.3f)",
                 precision, tp, fp, fn, cf_refused, cf, cf_rate, fe_refused, fe, fe_rate);
  return o;
}

// ---------------------------------------------------------------- criterion 6

Outcome validator_oracle() {
  const Stopwatch sw;
  std::vector<std::string> all_names;
  for (const auto& s : uavd::testing::fixtures())
    for (const auto& f : s.functions) all_names.push_back(f.name);
  std::size_t total = 0, agree = 0;
  std::string first_mismatch;
  for (const auto& path : uavd::testing::fixture_paths()) {
    const auto doc = nlohmann::json::parse(uavd::testing::read_text(path));
    const SdkSchema& schema = uavd::testing::fixture(doc["sdk_id"].get<std::string>());
    Rng rng = Rng::keyed(2024, path.filename().string(), 0);
    for (int i = 0; i < 1000; ++i) {
      Call call = uavd::testing::random_call(doc, all_names, rng);
      call.source_line = 2;
      CallSequence seq{schema.import_stmt, schema.handle, std::nullopt, {call}, std::nullopt};
      auto parsed = parse_program(render_program(seq));
      bool same = false;
      if (parsed.ok()) {
        const auto rep = check_calls(parsed.value(), schema);
        const auto want = uavd::testing::oracle_check(doc, call);
        std::set<std::string> got;
        for (const auto& d : rep.diagnostics) got.insert(d.code);
        same = rep.verdicts.size() == 1 && rep.verdicts.front().function_ok == want.function_ok &&
               rep.verdicts.front().params_ok == want.params_ok && got == want.codes;
      }
      ++total;
      agree += same;
      if (!same && first_mismatch.empty()) first_mismatch = render_program(seq);
    }
  }
  const double secs = sw.seconds();
  Outcome o;
  o.pass = agree == total && secs < 60.0;
  o.detail = fmt("%zu/%zu verdicts identical across %zu fixtures, %.1f s", agree, total,
                 uavd::testing::fixture_paths().size(), secs);
  if (!first_mismatch.empty()) o.detail += "; first mismatch: " + first_mismatch;
  return o;
}

// ---------------------------------------------------------------- criterion 7

Outcome generator_closure(const Workspace& w) {
  std::size_t feasible = 0, clean = 0, cf = 0, exact = 0;
  for (const auto& t : w.corpus.samples) {
    if (t.label == Label::kInfeasible) {
      ++cf;
      exact += t.code == kRefusalLine;
      continue;
    }
    ++feasible;
    auto parsed = parse_program(t.code);
    const SdkSchema* schema = find_schema(w.schemas, t.sdk_id);
    if (parsed.ok() && schema) {
      const auto rep = check_calls(parsed.value(), *schema);
      clean += rep.diagnostics.empty();
    }
  }
  Outcome o;
  o.pass = clean == feasible && exact == cf && feasible > 0 && cf > 0;
  o.detail = fmt("%zu/%zu feasible triplets validate clean; %zu/%zu counterfactual codes are the exact refusal line",
                 clean, feasible, exact, cf);
  return o;
}

// ---------------------------------------------------------------- criterion 8

int run(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

bool same_bytes(const fs::path& a, const fs::path& b) {
  if (!fs::exists(a) || !fs::exists(b)) return false;
  return uavd::testing::read_text(a) == uavd::testing::read_text(b);
}

Outcome cli_determinism(const Workspace& w) {
  const fs::path d = w.dir / "determinism";
  fs::create_directories(d);
  const std::string cli = std::string(UAVD_CLI_PATH) + " -q --config " + UAVD_CONFIGS_DIR "/default.json";
  const std::string fixtures = uavd::testing::fixtures_dir();
  // Reduced sizes keep two full pipeline passes short; the code paths are the
  // same as for the shipped configuration.
  std::vector<std::pair<std::string, bool>> checks;
  for (int pass : {1, 2}) {
    const std::string p = std::to_string(pass);
    run(cli + " data gen --schemas " + fixtures + " --per-sdk 20 --seed 7 --out " + (d / ("corpus" + p + ".jsonl")).string());
  }
  checks.emplace_back("data gen", same_bytes(d / "corpus1.jsonl", d / "corpus2.jsonl"));
  for (int pass : {1, 2}) {
    const std::string p = std::to_string(pass);
    run(cli + " train teacher --corpus " + (d / "corpus1.jsonl").string() + " --steps 30 --seed 7 --out " +
        (d / ("teacher" + p + ".ckpt")).string());
  }
  checks.emplace_back("train teacher", same_bytes(d / "teacher1.ckpt", d / "teacher2.ckpt"));
  for (int pass : {1, 2}) {
    const std::string p = std::to_string(pass);
    run(cli + " distill --teacher " + (d / "teacher1.ckpt").string() + " --corpus " + (d / "corpus1.jsonl").string() +
        " --schemas " + fixtures + " --steps 20 --seed 7 --out " + (d / ("student" + p + ".ckpt")).string());
  }
  checks.emplace_back("distill", same_bytes(d / "student1.ckpt", d / "student2.ckpt"));

  Outcome o;
  o.pass = true;
  for (const auto& [name, ok] : checks) {
    o.pass = o.pass && ok;
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += name + (ok ? " identical" : " DIFFERS or missing");
  }
  return o;
}

// ---------------------------------------------------------------- criterion 9

Outcome bench_structure(Workspace& w) {
  // Expected report columns, in order.
  const std::vector<std::string> columns{"Model", "Loading Time (s)", "Generation Speed (tokens/s)",
                                         "Param Memory (GB)", "Runtime Increase (GB)"};
  std::string header = "|";
  for (const auto& c : columns) header += " " + c + " |";

  const BenchRow fixture{"QLoRA-DeepSeek", 19.15, 9.85, 10.54, 2.20, 0};
  const std::string md_fixture = render_table({fixture}, TableFormat::kMarkdown);
  const bool fixture_ok = md_fixture.starts_with(header + "\n") &&
                          md_fixture.find("\n| QLoRA-DeepSeek | 19.15 | 9.85 | 10.54 | 2.20 |\n") != std::string::npos &&
                          render_table({fixture}, TableFormat::kCsv) ==
                              "Model,Loading Time (s),Generation Speed (tokens/s),Param Memory (GB),Runtime Increase "
                              "(GB)\nQLoRA-DeepSeek,19.15,9.85,10.54,2.20\n";

  ensure_teacher(w);
  if (!w.student) distillation_direction(w);
  std::vector<std::vector<TokenId>> prompts;
  for (std::size_t i : w.corpus.indices(Split::kTest)) {
    if (static_cast<int>(prompts.size()) == w.cfg.bench_prompts) break;
    const Triplet& t = w.corpus.samples[i];
    prompts.push_back(encode_prompt(w.tok, t.prompt_context, t.instruction));
  }
  const BenchRow teacher_row = bench_checkpoint(w.teacher_path.string(), "teacher", prompts, w.cfg.bench);
  const BenchRow student_row = bench_checkpoint(w.student_path.string(), "student (hybrid)", prompts, w.cfg.bench);
  const std::string report = render_table({teacher_row, student_row}, TableFormat::kMarkdown);
  {
    std::ofstream(w.dir / "bench_report.md") << report;
    std::ofstream(w.dir / "bench_report.csv") << render_table({teacher_row, student_row}, TableFormat::kCsv);
  }
  const bool report_ok = report.starts_with(header + "\n");
  const bool faster = student_row.generation_speed_tps > teacher_row.generation_speed_tps;

  Outcome o;
  o.pass = fixture_ok && report_ok && faster;
  o.detail = fmt("fixture row %s, report columns %s; tokens/s student %.1f vs teacher %.1f",
                 fixture_ok ? "verbatim" : "WRONG", report_ok ? "match" : "WRONG", student_row.generation_speed_tps,
                 teacher_row.generation_speed_tps);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"End-to-end acceptance checks"};
  std::string workdir = "acceptance_work";
  std::string config = UAVD_CONFIGS_DIR "/default.json";
  std::vector<int> only;
  std::string teacher;
  app.add_option("--workdir", workdir, "Directory for checkpoints and reports");
  app.add_option("--config", config, "Pipeline configuration")->check(CLI::ExistingFile);
  app.add_option("--only", only, "Run only these criteria (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--teacher", teacher, "Reuse this teacher checkpoint instead of training one (criterion 3 then fails)")
      ->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  Workspace w;
  w.dir = workdir;
  fs::create_directories(w.dir);
  w.cfg = load_pipeline_config(config);
  prepare_corpus(w);
  w.teacher_path = teacher;

  const std::vector<std::pair<int, std::string>> names{
      {1, "loss identities"},       {2, "gradient check"},    {3, "teacher training"},
      {4, "distillation direction"}, {5, "refusal behavior"}, {6, "validator oracle equivalence"},
      {7, "generator/validator closure"}, {8, "CLI determinism"}, {9, "bench structure"}};

  int failures = 0;
  std::ostringstream summary;
  for (const auto& [id, name] : names) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const Stopwatch sw;
    Outcome o;
    try {
      switch (id) {
        case 1: o = loss_identities(); break;
        case 2: o = gradient_check(); break;
        case 3: o = teacher_training(w); break;
        case 4: o = distillation_direction(w); break;
        case 5: o = refusal_behavior(w); break;
        case 6: o = validator_oracle(); break;
        case 7: o = generator_closure(w); break;
        case 8: o = cli_determinism(w); break;
        case 9: o = bench_structure(w); break;
      }
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    const std::string line =
        fmt("%s [%d] %s: ", o.pass ? "PASS" : "FAIL", id, name.c_str()) + o.detail + fmt(" (%.0f s)", sw.seconds());
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    summary << line << "\n";
  }
  std::ofstream(w.dir / "acceptance_report.txt") << summary.str();
  return failures ? 1 : 0;
}
