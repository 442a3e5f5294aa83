#pragma once

// Experiment drivers: estimator-vs-estimator training runs, the gradient
// alignment study, the fitness-permutation noise study, and the Monte-Carlo
// theory checks, each returning a summary struct and optionally writing the
// standard run artifacts (run.csv, summary.json, loss.svg).

#include <cstdint>
#include <string>
#include <vector>

#include "ges/config.hpp"
#include "ges/parallel.hpp"
#include "ges/reports.hpp"

namespace ges {

struct TrainSummary {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double best_loss = 0.0;
  double threshold = 0.0;
  long steps_to_threshold = 0;  // total cap + 1 when never reached
  long evals_per_update = 0;
  long total_updates = 0;
  long proper_updates = 0;  // updates whose fitness values were not permuted
  double wall_ms_total = 0.0;
  std::vector<RunRecord> records;
};

// Trains the classifier with the configured estimator under a fixed
// per-update budget of 2 (k + p) objective evaluations. When
// noise_permute_prob > 0 the loop continues until cfg.updates proper
// (non-permuted) updates have happened, hard-capped at twice that.
TrainSummary run_train(const ExperimentConfig& cfg, WorkerPool* pool,
                       const std::string& run_dir = "");

struct AlignmentSummary {
  long dim = 0;
  double ratio_above_one_fraction = 0.0;  // over the first 200 updates
  double ratio_geomean = 0.0;
  double early_consecutive_cos = 0.0;  // mean over the first 50 transitions
  double random_cos_p99 = 0.0;         // |cos| of random pairs in this dim
  bool pass = false;
  double wall_ms_total = 0.0;
  std::vector<RunRecord> records;
};

// Parameters follow the raw-Gaussian estimate; every step also measures the
// guided estimate (fed by its own history), the exact batch gradient, both
// cosines, their ratio, and the consecutive exact-gradient cosine.
AlignmentSummary run_gradient_alignment(const ExperimentConfig& cfg,
                                        WorkerPool* pool,
                                        const std::string& run_dir = "");

struct NoiseCell {
  std::string arm;  // "es" | "ours-k1" | "ours-k4"
  bool noisy = false;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  long total_updates = 0;
  long proper_updates = 0;
};

struct NoiseArmStats {
  std::string arm;
  double clean_mean = 0.0;
  double clean_halfwidth = 0.0;  // 1.96 standard errors
  double noisy_mean = 0.0;
  double noisy_halfwidth = 0.0;
  int noisy_worse_seeds = 0;  // pairwise, same seed
  double relative_gap = 0.0;  // (noisy - clean) / clean
};

struct NoiseSummary {
  std::vector<NoiseCell> cells;
  std::vector<NoiseArmStats> arms;
  int seed_count = 0;
  bool es_overlap = false;          // clean/noisy intervals overlap
  bool k1_strictly_worse = false;   // noisy worse on every seed
  bool k4_within_gap = false;       // relative gap <= 0.2
  bool pass = false;
};

// {clean, permuted} x {raw ES, guided k=1, guided k=4} grid at one shared
// evaluation budget, compared at equal proper-update counts.
NoiseSummary run_noise_study(const ExperimentConfig& cfg, WorkerPool* pool,
                             const std::string& run_dir = "");

struct TheoryCheck {
  std::string name;
  double measured = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double standard_error = 0.0;
  bool pass = false;
};

struct TheoryReport {
  std::string kind;
  std::vector<TheoryCheck> checks;
  bool pass = true;
};

// Dispatches theory.drift / theory.hitting / theory.theorem2 / theory.prop1
// / theory.prop2 simulations and compares them against their bounds.
TheoryReport run_theory(const ExperimentConfig& cfg);

// CLI behavior behind the argument parsing: creates the run directory,
// dispatches the experiment, writes artifacts, prints a human summary.
// Returns 0 on pass and 2 on a failed statistical check.
int run_experiment(const ExperimentConfig& cfg);

}  // namespace ges
