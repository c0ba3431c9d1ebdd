#include "anonagg/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace anonagg {

void StationDataset::recompute_total() {
  total_vehicles = 0;
  for (const auto& s : stations) total_vehicles += s.vehicle_count;
}

StationDataset synth_dataset(uint32_t stations, uint64_t total,
                             uint64_t max_per, uint64_t min_per, Rng& rng,
                             const std::string& scenario_label, double skew) {
  if (stations < 1) {
    throw std::invalid_argument("synth_dataset: need at least one station");
  }
  if (min_per > max_per) {
    throw std::invalid_argument("synth_dataset: min exceeds max");
  }
  if (total < stations * min_per || total > stations * max_per) {
    throw std::invalid_argument(
        "synth_dataset: total infeasible for the given per-station bounds");
  }

  // Truncated power-law draw on [min,max] via inverse CDF of x^-skew.
  const double lo = static_cast<double>(std::max<uint64_t>(min_per, 1));
  const double hi = static_cast<double>(max_per);
  const double one_minus_a = 1.0 - skew;
  std::vector<double> weights(stations);
  double weight_sum = 0.0;
  for (auto& w : weights) {
    double u = rng.u01();
    double lo_pow = std::pow(lo, one_minus_a);
    double hi_pow = std::pow(hi, one_minus_a);
    w = std::pow(lo_pow + u * (hi_pow - lo_pow), 1.0 / one_minus_a);
    weight_sum += w;
  }

  std::vector<uint64_t> counts(stations);
  uint64_t running = 0;
  for (uint32_t i = 0; i < stations; ++i) {
    double scaled = weights[i] * static_cast<double>(total) / weight_sum;
    double clamped = std::min(static_cast<double>(max_per),
                              std::max(static_cast<double>(min_per), scaled));
    counts[i] = static_cast<uint64_t>(std::llround(clamped));
    counts[i] = std::min(max_per, std::max(min_per, counts[i]));
    running += counts[i];
  }

  // Rounding and clamping leave a residual; spread it one vehicle at a time
  // over stations with slack.
  while (running != total) {
    uint32_t i = static_cast<uint32_t>(rng.below(stations));
    if (running < total && counts[i] < max_per) {
      counts[i]++;
      running++;
    } else if (running > total && counts[i] > min_per) {
      counts[i]--;
      running--;
    }
  }

  StationDataset ds;
  ds.scenario_label = scenario_label;
  ds.stations.reserve(stations);
  for (uint32_t i = 0; i < stations; ++i) {
    ds.stations.push_back({"station-" + std::to_string(i), counts[i]});
  }
  ds.total_vehicles = total;
  return ds;
}

std::string dataset_to_csv(const StationDataset& dataset) {
  std::ostringstream out;
  out << "station_id,count\n";
  for (const auto& s : dataset.stations) {
    out << s.station_id << "," << s.vehicle_count << "\n";
  }
  return out.str();
}

StationDataset dataset_from_csv_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw CsvError("empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "station_id,count") {
    throw CsvError("missing header \"station_id,count\"");
  }
  StationDataset ds;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size()) {
      throw CsvError("line " + std::to_string(line_no) +
                     ": expected station_id,count");
    }
    std::string id = line.substr(0, comma);
    std::string count_str = line.substr(comma + 1);
    if (count_str[0] == '-') {
      throw CsvError("line " + std::to_string(line_no) +
                     ": negative count not allowed");
    }
    uint64_t count = 0;
    for (char c : count_str) {
      if (c < '0' || c > '9') {
        throw CsvError("line " + std::to_string(line_no) +
                       ": count is not a nonnegative integer");
      }
      count = count * 10 + static_cast<uint64_t>(c - '0');
    }
    ds.stations.push_back({std::move(id), count});
  }
  if (ds.stations.empty()) {
    throw CsvError("no station rows");
  }
  ds.recompute_total();
  return ds;
}

StationDataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CsvError("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_csv_text(buffer.str());
}

void write_csv(const StationDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw CsvError("cannot write " + path);
  }
  out << dataset_to_csv(dataset);
}

}  // namespace anonagg
