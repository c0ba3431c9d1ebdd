#ifndef ANONAGG_EXPERIMENT_HPP
#define ANONAGG_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "anonagg/dataset.hpp"
#include "anonagg/rr.hpp"

namespace anonagg {

struct StationOutcome {
  std::string station_id;
  uint64_t true_count = 0;
  double estimated_count = 0.0;
  double signed_rel_error = 0.0;  // meaningless when excluded
  bool excluded = false;          // true count 0: relative error undefined
};

struct ExperimentResult {
  std::vector<StationOutcome> per_station;  // from the first trial
  double avg_signed_relative_error = 0.0;
  double avg_abs_relative_error = 0.0;
  double avg_rmse = 0.0;
  size_t excluded_stations = 0;
  PrivacyParams params;
  uint64_t seed = 0;
  unsigned trials = 0;
  std::string scenario_label;
};

// Simulates every vehicle answering the full station bit-vector with the
// two-coin mechanism (one true bit per vehicle), debiases per-station yes
// counts and averages the error metrics over stations, then over trials.
// Stations with a zero true count are excluded from the relative-error
// averages but kept in the RMSE.
ExperimentResult run_accuracy_experiment(const StationDataset& dataset,
                                         const PrivacyParams& params,
                                         unsigned trials, uint64_t seed);

// Replaces sampling with the exact expectation of each station's yes count;
// inverting the estimator must then return the true counts exactly.
std::vector<double> expectation_injected_estimates(
    const StationDataset& dataset, const PrivacyParams& params);

// Per-station CSV, byte-stable for a fixed seed.
std::string result_to_csv(const ExperimentResult& result);

// Summary CSV: scenario, stations, avg signed/abs relative error, avg RMSE.
std::string summary_csv(const std::vector<ExperimentResult>& results);

}  // namespace anonagg

#endif
