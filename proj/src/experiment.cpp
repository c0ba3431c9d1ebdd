#include "anonagg/experiment.hpp"

#include <cinttypes>
#include <cstdio>

#include "anonagg/client.hpp"

namespace anonagg {

ExperimentResult run_accuracy_experiment(const StationDataset& dataset,
                                         const PrivacyParams& params,
                                         unsigned trials, uint64_t seed) {
  if (dataset.stations.empty()) {
    throw std::invalid_argument("run_accuracy_experiment: empty dataset");
  }
  if (trials < 1) {
    throw std::invalid_argument("run_accuracy_experiment: trials must be >= 1");
  }
  const size_t station_count = dataset.stations.size();
  const uint64_t vehicles = dataset.total_vehicles;

  ExperimentResult result;
  result.params = params;
  result.seed = seed;
  result.trials = trials;
  result.scenario_label = dataset.scenario_label;

  double sum_signed = 0.0, sum_abs = 0.0, sum_rmse = 0.0;

  for (unsigned trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, trial));
    std::vector<uint64_t> yes_counts(station_count, 0);

    // Every vehicle answers the whole bit-vector; its truthful bit is the
    // station it is at.
    for (size_t s = 0; s < station_count; ++s) {
      for (uint64_t v = 0; v < dataset.stations[s].vehicle_count; ++v) {
        for (size_t i = 0; i < station_count; ++i) {
          yes_counts[i] += randomize_bit(i == s, params, rng) ? 1 : 0;
        }
      }
    }

    std::vector<double> estimates(station_count), actuals(station_count);
    double trial_signed = 0.0, trial_abs = 0.0;
    size_t included = 0;
    for (size_t i = 0; i < station_count; ++i) {
      auto est = estimate_population(yes_counts[i], vehicles, params);
      estimates[i] = est.estimate;
      actuals[i] = static_cast<double>(dataset.stations[i].vehicle_count);
      bool excluded = dataset.stations[i].vehicle_count == 0;
      if (!excluded) {
        trial_signed += signed_relative_error(estimates[i], actuals[i]);
        trial_abs += relative_error(estimates[i], actuals[i]);
        ++included;
      }
      if (trial == 0) {
        StationOutcome o;
        o.station_id = dataset.stations[i].station_id;
        o.true_count = dataset.stations[i].vehicle_count;
        o.estimated_count = estimates[i];
        o.excluded = excluded;
        o.signed_rel_error =
            excluded ? 0.0 : signed_relative_error(estimates[i], actuals[i]);
        result.per_station.push_back(std::move(o));
        if (excluded) result.excluded_stations++;
      }
    }
    if (included == 0) {
      throw std::invalid_argument(
          "run_accuracy_experiment: every station has a zero count");
    }
    sum_signed += trial_signed / static_cast<double>(included);
    sum_abs += trial_abs / static_cast<double>(included);
    sum_rmse += rmse(estimates, actuals);
  }

  result.avg_signed_relative_error = sum_signed / trials;
  result.avg_abs_relative_error = sum_abs / trials;
  result.avg_rmse = sum_rmse / trials;
  return result;
}

std::vector<double> expectation_injected_estimates(
    const StationDataset& dataset, const PrivacyParams& params) {
  std::vector<double> estimates;
  estimates.reserve(dataset.stations.size());
  const double n = static_cast<double>(dataset.total_vehicles);
  for (const auto& s : dataset.stations) {
    double y = static_cast<double>(s.vehicle_count);
    double expected_yes = params.p * y + (1.0 - params.p) * params.q * n;
    estimates.push_back(estimate_value(expected_yes, n, params));
  }
  return estimates;
}

std::string result_to_csv(const ExperimentResult& result) {
  std::string out = "station_id,true_count,estimated_count,signed_rel_error\n";
  char buf[160];
  for (const auto& s : result.per_station) {
    if (s.excluded) {
      std::snprintf(buf, sizeof(buf), "%s,%" PRIu64 ",%.6f,excluded\n",
                    s.station_id.c_str(), s.true_count, s.estimated_count);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%" PRIu64 ",%.6f,%.6f\n",
                    s.station_id.c_str(), s.true_count, s.estimated_count,
                    s.signed_rel_error);
    }
    out += buf;
  }
  return out;
}

std::string summary_csv(const std::vector<ExperimentResult>& results) {
  std::string out =
      "scenario,stations,avg_signed_relative_error,avg_abs_relative_error,"
      "avg_rmse\n";
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f,%.6f,%.6f\n",
                  r.scenario_label.c_str(), r.per_station.size(),
                  r.avg_signed_relative_error, r.avg_abs_relative_error,
                  r.avg_rmse);
    out += buf;
  }
  return out;
}

}  // namespace anonagg
