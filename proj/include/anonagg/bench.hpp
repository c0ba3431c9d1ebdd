#ifndef ANONAGG_BENCH_HPP
#define ANONAGG_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "anonagg/dpf.hpp"

namespace anonagg {

struct BenchPoint {
  uint32_t rows = 0;
  uint16_t message_bytes = 0;
  unsigned parties = 0;
  uint64_t writes = 0;
  double writes_per_sec = 0.0;
  double ns_per_write = 0.0;
  double ns_per_row = 0.0;  // per-write cost divided by rows
};

struct BenchReport {
  std::vector<BenchPoint> points;

  // Largest relative deviation of ns_per_row from the mean across points.
  double max_row_cost_deviation() const;

  // Linear-scaling check: when rows double, per-write cost should double.
  // Returns the largest |cost_ratio/2 - 1| over adjacent doubling pairs.
  double max_doubling_deviation() const;

  std::string to_csv() const;
};

// Measures the server-side write pipeline (deserialize, evaluate,
// accumulate) per accepted write at one server, across table sizes. The
// writes count is auto-scaled per point when `writes` is 0.
BenchReport run_throughput_bench(const std::vector<uint32_t>& rows_list,
                                 uint16_t message_bytes, unsigned parties,
                                 uint64_t writes, uint64_t seed);

}  // namespace anonagg

#endif
