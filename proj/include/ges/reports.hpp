#pragma once

// Run artifacts: the per-update CSV log, the JSON run summary, and an
// optional SVG loss chart.  CSV numeric content is fully determined by
// (config, seed); wall-clock timing therefore lives in summary.json and the
// CSV wall_ms column is written as recorded (experiments store 0 there).

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ges/config.hpp"

namespace ges {

struct RunRecord {
  long step = 0;
  double loss = 0.0;
  std::optional<double> cos_es;
  std::optional<double> cos_ours;
  std::optional<double> ratio;      // cos_ours / cos_es, only when cos_es > 0
  std::optional<double> consec_cos;
  double update_norm = 0.0;
  double wall_ms = 0.0;
  std::uint64_t update_seed = 0;  // derived per-update seed, summary-only
};

inline const char* kRunCsvHeader =
    "step,loss,cos_es,cos_ours,ratio,consec_cos,update_norm,wall_ms";

// Shortest representation that round-trips a double ("%.17g").
std::string format_float(double value);

// Streaming writer: header on open, one flushed row per append, so an
// aborted run still leaves a valid partial log.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  void append(const RunRecord& record);
  long rows() const { return rows_; }

 private:
  std::ofstream out_;
  long rows_ = 0;
};

void write_run_csv(const std::vector<RunRecord>& records,
                   const std::string& path);
std::vector<RunRecord> parse_run_csv(const std::string& path);

// `git describe --always --dirty`, or "" when not in a git checkout.
std::string git_describe();

// Config echo + seed + lineage rule + caller metrics (+ git id if known).
void write_summary_json(const std::string& path, const ConfigMap& config,
                        std::uint64_t seed, const nlohmann::json& metrics);

void write_loss_svg(const std::vector<RunRecord>& records,
                    const std::string& path);

}  // namespace ges
