#include "uavd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "uavd/checkpoint.hpp"
#include "uavd/error.hpp"
#include "uavd/generate.hpp"

namespace uavd {

namespace {

// Bench operations never overlap in-process; nested calls reuse the lock.
std::recursive_mutex& bench_mutex() {
  static std::recursive_mutex m;
  return m;
}

constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

double median(std::vector<double> samples) {
  if (samples.empty()) throw InputError("median of no samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::optional<double> resident_gb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("VmRSS:")) continue;
    std::istringstream ss(line.substr(6));
    double kb = 0;
    if (ss >> kb) return kb * 1024.0 / kGiB;
  }
  return std::nullopt;
}

LoadMeasurement bench_load(const std::string& checkpoint_path, int repeats) {
  std::scoped_lock lock(bench_mutex());
  if (repeats < 3) throw InputError("bench_load needs at least 3 repeats");
  LoadMeasurement out;
  std::vector<double> samples;
  for (int r = 0; r < repeats; ++r) {
    const auto before = r == 0 ? resident_gb() : std::nullopt;
    const auto t0 = std::chrono::steady_clock::now();
    Checkpoint ck = load_checkpoint(checkpoint_path);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    if (r == 0) {
      const auto after = resident_gb();
      if (before && after) out.resident_delta_gb = std::max(0.0, *after - *before);
    }
  }
  out.seconds = median(samples);
  return out;
}

double bench_generate(const ModelState& model, const std::vector<std::vector<TokenId>>& prompts, int max_new,
                      int repeats) {
  std::scoped_lock lock(bench_mutex());
  if (prompts.empty()) throw InputError("bench_generate needs at least one prompt");
  if (repeats < 1) throw InputError("bench_generate needs at least one repeat");
  generate(model, prompts.front(), max_new);  // warmup, excluded
  std::vector<double> tps;
  for (int r = 0; r < repeats; ++r) {
    std::size_t tokens = 0;
    double seconds = 0;
    for (const auto& p : prompts) {
      const GenResult g = generate(model, p, max_new);
      tokens += g.timing.emitted_tokens;
      seconds += g.timing.elapsed_seconds;
    }
    if (tokens == 0 || !(seconds > 0)) throw GenerationError("benchmark decoding emitted no timed tokens");
    tps.push_back(static_cast<double>(tokens) / seconds);
  }
  return median(tps);
}

MemoryReport memory_report(const ModelState& model) {
  MemoryReport r;
  for (const auto& t : model.layout.tensors) r.parameter_count += t.size();
  r.param_memory_gb = static_cast<double>(r.parameter_count) * 4.0 / kGiB;
  return r;
}

std::string render_table(const std::vector<BenchRow>& rows, TableFormat format) {
  std::ostringstream out;
  auto runtime = [](const BenchRow& r) { return r.runtime_increase_gb ? fixed2(*r.runtime_increase_gb) : "n/a"; };
  if (format == TableFormat::kCsv) {
    out << kBenchCsvHeader << '\n';
    for (const auto& r : rows)
      out << r.model_name << ',' << fixed2(r.loading_time_s) << ',' << fixed2(r.generation_speed_tps) << ','
          << fixed2(r.param_memory_gb) << ',' << runtime(r) << '\n';
    return out.str();
  }
  out << "| Model | Loading Time (s) | Generation Speed (tokens/s) | Param Memory (GB) | Runtime Increase (GB) |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const auto& r : rows)
    out << "| " << r.model_name << " | " << fixed2(r.loading_time_s) << " | " << fixed2(r.generation_speed_tps)
        << " | " << fixed2(r.param_memory_gb) << " | " << runtime(r) << " |\n";
  out << "\nParam Memory is parameter count x 4 bytes / 2^30, computed rather than measured (CPU build, no GPU).\n";
  out << "Runtime Increase is the resident-set growth across the first checkpoint load; n/a where unavailable.\n";
  bool counts = false;
  for (const auto& r : rows) counts = counts || r.parameter_count > 0;
  if (counts) {
    out << "\nParameter counts:";
    for (const auto& r : rows)
      if (r.parameter_count > 0) out << ' ' << r.model_name << '=' << r.parameter_count;
    out << '\n';
  }
  return out.str();
}

BenchRow bench_checkpoint(const std::string& checkpoint_path, const std::string& model_name,
                          const std::vector<std::vector<TokenId>>& prompts, const BenchOptions& opts) {
  std::scoped_lock lock(bench_mutex());
  BenchRow row;
  row.model_name = model_name;
  const LoadMeasurement load = bench_load(checkpoint_path, opts.load_repeats);
  row.loading_time_s = load.seconds;
  row.runtime_increase_gb = load.resident_delta_gb;
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  row.generation_speed_tps = bench_generate(ck.model, prompts, opts.max_new, opts.gen_repeats);
  const MemoryReport mem = memory_report(ck.model);
  row.param_memory_gb = mem.param_memory_gb;
  row.parameter_count = mem.parameter_count;
  return row;
}

}  // namespace uavd
