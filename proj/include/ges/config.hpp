#pragma once

// Experiment configuration: a flat key-value store parsed from sectioned
// config files ([section] blocks of key = value lines), plus command-line
// overrides, and the typed ExperimentConfig built from it with validation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ges {

class ConfigMap {
 public:
  static ConfigMap from_file(const std::string& path);
  static ConfigMap from_string(const std::string& text);

  // "key=value" with dotted keys; later calls win.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_long_list(const std::string& key,
                                  const std::vector<long>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
  std::string kind;  // train | gradient-alignment | noise | theory.<check>
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // multi-seed experiments (noise grid)
  int threads = 1;
  std::string out_dir;

  // Estimator.
  std::string estimator = "guided";  // "es" | "guided"
  double sigma = 0.02;
  int p_random = 15;
  int k_history = 1;
  std::string history_source = "estimate";  // "estimate" | "update"
  bool fitness_shaping = false;
  double noise_permute_prob = 0.0;

  // Optimizer.
  std::string optimizer = "adam";  // "sgd" | "adam"
  double learning_rate = 0.007;
  bool normalize_update = false;
  std::vector<double> lr_grid;  // train: sweep and report best per method

  // Objective and data.
  std::vector<int> hidden = {64, 64};
  std::string data_source = "blobs";  // "blobs" | "idx"
  long data_samples = 1000;
  int data_dim = 32;
  int data_classes = 10;
  double data_spread = 1.5;
  double data_noise = 1.0;
  long batch = 64;
  std::string idx_images;
  std::string idx_labels;

  // Run shape.
  long updates = 300;
  double threshold_fraction = 0.5;
  long proper_updates = 250;  // noise study target
  bool emit_svg = false;

  // Theory checks.
  int theory_n = 101;
  int theory_p = 10;
  double theory_delta = 0.1;
  double theory_alpha = 0.95;
  long trials = 500;
  long steps = 400;

  static ExperimentConfig from_map(const std::string& kind,
                                   const ConfigMap& map);
};

// Output root fallback when the config gives none: $GUIDED_ES_OUT or "runs".
std::string default_output_root();

}  // namespace ges
