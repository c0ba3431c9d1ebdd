#include "anonagg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "anonagg/epoch.hpp"

namespace anonagg {

namespace {

OwnerId counter_owner(uint64_t i) {
  OwnerId id{};
  std::memcpy(id.data(), &i, sizeof(i));
  return id;
}

}  // namespace

double BenchReport::max_row_cost_deviation() const {
  if (points.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& p : points) mean += p.ns_per_row;
  mean /= static_cast<double>(points.size());
  double worst = 0.0;
  for (const auto& p : points) {
    worst = std::max(worst, std::fabs(p.ns_per_row - mean) / mean);
  }
  return worst;
}

double BenchReport::max_doubling_deviation() const {
  double worst = 0.0;
  for (size_t i = 0; i + 1 < points.size(); ++i) {
    if (points[i + 1].rows != 2 * points[i].rows) continue;
    double ratio = points[i + 1].ns_per_write / points[i].ns_per_write;
    worst = std::max(worst, std::fabs(ratio / 2.0 - 1.0));
  }
  return worst;
}

std::string BenchReport::to_csv() const {
  std::string out =
      "rows,message_bytes,parties,writes,writes_per_sec,ns_per_write,"
      "ns_per_row\n";
  char buf[200];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%u,%u,%u,%llu,%.1f,%.1f,%.3f\n", p.rows,
                  p.message_bytes, p.parties,
                  static_cast<unsigned long long>(p.writes), p.writes_per_sec,
                  p.ns_per_write, p.ns_per_row);
    out += buf;
  }
  return out;
}

BenchReport run_throughput_bench(const std::vector<uint32_t>& rows_list,
                                 uint16_t message_bytes, unsigned parties,
                                 uint64_t writes, uint64_t seed) {
  BenchReport report;
  Rng rng(seed);

  for (uint32_t rows : rows_list) {
    auto geometry = TableGeometry::create(rows, message_bytes);

    // Keys are prepared up front; the timed section is the server-side
    // pipeline per accepted write: deserialize, evaluate, accumulate.
    const uint64_t batch = std::max<uint64_t>(
        16, std::min<uint64_t>(256, (16u << 20) / geometry.table_bytes()));
    uint64_t target = writes;
    if (target == 0) {
      // Aim for roughly 10^8 table bytes of work per point.
      target = std::max<uint64_t>(
          batch, 100'000'000ull / std::max<uint64_t>(1, geometry.table_bytes()));
    }
    const uint64_t passes = (target + batch - 1) / batch;

    std::vector<std::vector<uint8_t>> wire_keys;
    wire_keys.reserve(batch);
    std::vector<uint8_t> msg(message_bytes);
    for (uint64_t k = 0; k < batch; ++k) {
      rng.fill(msg);
      auto set = keygen(geometry, static_cast<uint32_t>(rng.below(rows)), msg,
                        parties, rng);
      wire_keys.push_back(set.keys[0].to_expanded().serialize());
    }

    double best_ns_per_write = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      auto begin = std::chrono::steady_clock::now();
      uint64_t done = 0;
      for (uint64_t pass = 0; pass < passes; ++pass) {
        EpochState state(pass, geometry);
        for (uint64_t k = 0; k < batch; ++k) {
          DpfKey key = DpfKey::deserialize(wire_keys[k]);
          state.submit(counter_owner(k), std::move(key));
          ++done;
        }
      }
      auto end = std::chrono::steady_clock::now();
      double ns =
          static_cast<double>(
              std::chrono::duration_cast<std::chrono::nanoseconds>(end - begin)
                  .count()) /
          static_cast<double>(done);
      if (rep == 0 || ns < best_ns_per_write) best_ns_per_write = ns;
    }

    BenchPoint point;
    point.rows = rows;
    point.message_bytes = message_bytes;
    point.parties = parties;
    point.writes = passes * batch;
    point.ns_per_write = best_ns_per_write;
    point.writes_per_sec = 1e9 / best_ns_per_write;
    point.ns_per_row = best_ns_per_write / static_cast<double>(rows);
    report.points.push_back(point);
  }
  return report;
}

}  // namespace anonagg
