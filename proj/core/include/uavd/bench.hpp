#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uavd/model.hpp"

namespace uavd {

/// One row of the resource-efficiency table.
struct BenchRow {
  std::string model_name;
  double loading_time_s = 0;
  double generation_speed_tps = 0;
  double param_memory_gb = 0;
  std::optional<double> runtime_increase_gb;  // absent when the platform does not expose RSS
  std::size_t parameter_count = 0;             // footnote only, not a table column
};

inline constexpr const char* kBenchCsvHeader =
    "Model,Loading Time (s),Generation Speed (tokens/s),Param Memory (GB),Runtime Increase (GB)";

double median(std::vector<double> samples);

/// Resident set size in GB from /proc/self/status, or nullopt.
std::optional<double> resident_gb();

struct LoadMeasurement {
  double seconds = 0;                  // median over repeats
  std::optional<double> resident_delta_gb;  // RSS after the first load minus RSS before it
};

/// Median wall-clock seconds to deserialize a checkpoint. Throws CheckpointError
/// on a corrupt file and InputError when repeats < 3.
LoadMeasurement bench_load(const std::string& checkpoint_path, int repeats = 3);

/// Greedy decoding over all prompts per repeat after one excluded warmup pass;
/// returns the median of (emitted tokens / decode seconds) across repeats.
/// Throws InputError on zero prompts or repeats < 1.
double bench_generate(const ModelState& model, const std::vector<std::vector<TokenId>>& prompts, int max_new,
                      int repeats = 3);

struct MemoryReport {
  std::size_t parameter_count = 0;
  double param_memory_gb = 0;  // count * 4 / 2^30
};
MemoryReport memory_report(const ModelState& model);

enum class TableFormat { kMarkdown, kCsv };

/// Columns in fixed order with 2-decimal numbers. Markdown output carries a
/// footnote on the CPU substitutions; CSV is header plus one line per row.
std::string render_table(const std::vector<BenchRow>& rows, TableFormat format);

struct BenchOptions {
  int load_repeats = 3;
  int gen_repeats = 3;
  int max_new = 64;
};

/// Full measurement of one checkpoint. `prompts` should come from the test split.
BenchRow bench_checkpoint(const std::string& checkpoint_path, const std::string& model_name,
                          const std::vector<std::vector<TokenId>>& prompts, const BenchOptions& opts = {});

}  // namespace uavd
