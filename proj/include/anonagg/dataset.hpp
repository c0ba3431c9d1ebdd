#ifndef ANONAGG_DATASET_HPP
#define ANONAGG_DATASET_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "anonagg/rng.hpp"

namespace anonagg {

struct Station {
  std::string station_id;
  uint64_t vehicle_count = 0;
};

struct StationDataset {
  std::vector<Station> stations;
  uint64_t total_vehicles = 0;
  std::string scenario_label;

  void recompute_total();
};

// Synthetic traffic counts: a truncated power-law draw per station
// (exponent `skew`, mass toward small stations), rescaled and adjusted so
// the counts sum to `total` exactly with every station in [min_per, max_per].
// Only these four moments are matched to real traffic extracts; the skew is
// a free shape parameter.
StationDataset synth_dataset(uint32_t stations, uint64_t total,
                             uint64_t max_per, uint64_t min_per, Rng& rng,
                             const std::string& scenario_label = "synthetic",
                             double skew = 0.35);

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CSV with header "station_id,count"; malformed rows are reported with
// their line number.
StationDataset ingest_csv(const std::string& path);
void write_csv(const StationDataset& dataset, const std::string& path);
std::string dataset_to_csv(const StationDataset& dataset);
StationDataset dataset_from_csv_text(const std::string& text);

}  // namespace anonagg

#endif
