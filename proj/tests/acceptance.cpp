// Acceptance suite: one line per criterion, nonzero exit when any fails.
// argv[1] is the path to the anonagg CLI binary (used by the live
// end-to-end criterion).

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "anonagg/audit.hpp"
#include "anonagg/bench.hpp"
#include "anonagg/client.hpp"
#include "anonagg/experiment.hpp"
#include "anonagg/sim.hpp"

using namespace anonagg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::string g_cli_path;

// --- 1. leakage exactness ---------------------------------------------

Outcome criterion_leakage() {
  auto params = PrivacyParams::create(0.995, 0.999);
  auto start = Clock::now();
  LeakageReport report = leakage(params, 0.005);
  double elapsed = ms_since(start);

  bool values_ok = std::fabs(report.p_a_given_yes - 0.501502) <= 1e-6 &&
                   std::fabs(report.p_not_a_given_yes - 0.498498) <= 1e-6 &&
                   std::fabs(report.epsilon - 5.299313) <= 1e-6;
  bool time_ok = elapsed < 1.0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "P(A|Y)=%.6f P(!A|Y)=%.6f eps=%.6f in %.4f ms",
                report.p_a_given_yes, report.p_not_a_given_yes, report.epsilon,
                elapsed);
  return {values_ok && time_ok, buf};
}

// --- 2. estimator inversion -------------------------------------------

Outcome criterion_inversion() {
  auto start = Clock::now();
  Rng rng(20240202);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double n = 1.0 + static_cast<double>(rng.below(100000));
    double y = static_cast<double>(rng.below(static_cast<uint64_t>(n) + 1));
    auto params = PrivacyParams::create(0.1 + 0.9 * rng.u01(), rng.u01());
    double y_hat = params.p * y + (1.0 - params.p) * params.q * n;
    double err = std::fabs(estimate_value(y_hat, n, params) - y);
    worst = std::max(worst, err);
  }
  double elapsed = ms_since(start);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "1000 fuzzed inversions, worst |error|=%.3g in %.1f ms", worst,
                elapsed);
  return {worst <= 1e-9 && elapsed < 1000.0, buf};
}

// --- 3. accuracy at city scale ----------------------------------------

Outcome criterion_accuracy() {
  auto start = Clock::now();
  auto params = PrivacyParams::create(0.995, 0.999);

  // Fixed-seed gate on the rush-hour-shaped synthetic dataset.
  Rng rush_rng(derive_seed(1, 0xda7a));
  auto rush = synth_dataset(1157, 222704, 860, 1, rush_rng, "rush-hour");
  auto rush_result = run_accuracy_experiment(rush, params, 1, 1);
  bool signed_ok = std::fabs(rush_result.avg_signed_relative_error) <= 0.1;

  // RMSE ordering across five seeds; exact table values are not
  // reproducible without the original extract, ordering is.
  bool ordering_ok = true;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng r1(derive_seed(seed, 0xda7a));
    auto rush_s = synth_dataset(1157, 222704, 860, 1, r1, "rush-hour");
    Rng r2(derive_seed(seed, 0x0ffb));
    auto off_s = synth_dataset(1017, 22270, 860, 1, r2, "off-peak");
    auto rm = run_accuracy_experiment(rush_s, params, 1, seed);
    auto om = run_accuracy_experiment(off_s, params, 1, seed);
    if (!(rm.avg_rmse > om.avg_rmse)) ordering_ok = false;
  }

  double elapsed = ms_since(start);
  char buf[240];
  std::snprintf(buf, sizeof(buf),
                "avg signed rel err %.6f (|.| <= 0.1), RMSE rush>off-peak "
                "across 5 seeds: %s, %.0f ms",
                rush_result.avg_signed_relative_error,
                ordering_ok ? "yes" : "NO", elapsed);
  return {signed_ok && ordering_ok && elapsed < 600000.0, buf};
}

// --- 4. DPF exhaustive correctness --------------------------------------

Outcome criterion_dpf() {
  auto start = Clock::now();
  Rng rng(4);
  const uint32_t row_counts[] = {2, 3, 4, 8, 64, 1024};
  const unsigned party_counts[] = {2, 3, 8};
  uint64_t checked = 0;
  for (uint32_t rows : row_counts) {
    for (unsigned parties : party_counts) {
      for (int iter = 0; iter < 100; ++iter) {
        uint16_t mb = static_cast<uint16_t>(1 + (iter % 16));
        auto g = TableGeometry::create(rows, mb);
        uint32_t target = static_cast<uint32_t>(rng.below(rows));
        std::vector<uint8_t> msg(mb);
        rng.fill(msg);
        auto set = keygen(g, target, msg, parties, rng);
        auto combined = combine_evaluations(set);
        for (uint32_t r = 0; r < rows; ++r) {
          for (uint16_t b = 0; b < mb; ++b) {
            uint8_t want = r == target ? msg[b] : 0;
            if (combined[static_cast<size_t>(r) * mb + b] != want) {
              return {false, "combined evaluation mismatch at row " +
                                 std::to_string(r)};
            }
          }
        }
        ++checked;
      }
    }
  }
  double elapsed = ms_since(start);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%llu keysets over R={2,3,4,8,64,1024} x p={2,3,8}, %.0f ms",
                static_cast<unsigned long long>(checked), elapsed);
  return {elapsed < 60000.0, buf};
}

// --- 5. end-to-end epoch equivalence -------------------------------------

Outcome criterion_e2e() {
  auto start = Clock::now();
  std::string cmd = g_cli_path +
                    " e2e --backend live --clients 100 --rows 512 "
                    "--message-bytes 2 --attributes 16 --servers 2 --seed 42 "
                    "--base-port 29710 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {false, "cannot run CLI"};
  std::string output;
  char chunk[512];
  while (fgets(chunk, sizeof(chunk), pipe)) output += chunk;
  int status = pclose(pipe);
  double elapsed = ms_since(start);

  bool exec_ok = status == 0;
  bool match = output.find("servers_output_match,yes") != std::string::npos;
  bool multiset =
      output.find("multiset_equals_inprocess,yes") != std::string::npos;
  bool byte_eq = output.find("tables_byte_equal,yes") != std::string::npos;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "100 clients, 512 rows, 2 live servers: exit=%d match=%d "
                "multiset=%d byte=%d, %.0f ms",
                status, match, multiset, byte_eq, elapsed);
  return {exec_ok && match && multiset && byte_eq && elapsed < 30000.0, buf};
}

// --- 6. audit soundness and completeness ---------------------------------

size_t oracle_nonzero_rows(std::span<const DpfKey> shares,
                           const TableGeometry& g) {
  std::vector<uint8_t> combined(g.table_bytes(), 0);
  for (const auto& s : shares) xor_accumulate(combined, s.eval_full());
  size_t nonzero = 0;
  for (uint32_t r = 0; r < g.rows; ++r) {
    const uint8_t* cell = combined.data() + size_t(r) * g.message_bytes;
    for (uint16_t b = 0; b < g.message_bytes; ++b) {
      if (cell[b]) {
        ++nonzero;
        break;
      }
    }
  }
  return nonzero;
}

Outcome criterion_audit() {
  auto start = Clock::now();
  Rng rng(6);

  // 500 honest keysets must be accepted.
  for (int i = 0; i < 500; ++i) {
    uint32_t rows = 8 + static_cast<uint32_t>(rng.below(120));
    uint16_t mb = static_cast<uint16_t>(1 + rng.below(4));
    unsigned parties = 2 + static_cast<unsigned>(rng.below(2));
    auto g = TableGeometry::create(rows, mb);
    std::vector<uint8_t> msg(mb);
    rng.fill(msg);
    bool zero = true;
    for (uint8_t b : msg) zero = zero && b == 0;
    if (zero) msg[0] = 1;
    auto set = keygen(g, static_cast<uint32_t>(rng.below(rows)), msg, parties,
                      rng);
    std::vector<Rng> rngs;
    for (unsigned s = 0; s < parties; ++s) {
      rngs.emplace_back(derive_seed(600 + i, s));
    }
    auto t = audit_keyset(set.keys, g, rngs, i, owner_from_label("h" + std::to_string(i)));
    if (t.verdict != AuditVerdict::kAccept) {
      return {false, "honest keyset " + std::to_string(i) + " not accepted"};
    }
  }

  // 500 malformed keysets must be rejected; the expected verdict comes from
  // the brute-force combine oracle.
  for (int i = 0; i < 500; ++i) {
    uint32_t rows = 8 + static_cast<uint32_t>(rng.below(120));
    uint16_t mb = static_cast<uint16_t>(1 + rng.below(4));
    unsigned parties = 2 + static_cast<unsigned>(rng.below(2));
    auto g = TableGeometry::create(rows, mb);
    std::vector<uint8_t> msg(mb);
    rng.fill(msg);
    bool zero = true;
    for (uint8_t b : msg) zero = zero && b == 0;
    if (zero) msg[0] = 1;
    uint32_t target = static_cast<uint32_t>(rng.below(rows));
    auto set = keygen(g, target, msg, parties, rng);
    auto shares = set.keys;

    unsigned victim = static_cast<unsigned>(rng.below(parties));
    auto expanded = shares[victim].eval_full();
    if (i % 2 == 0) {
      // a full second point function XORed into one share
      uint32_t second = (target + 1 + static_cast<uint32_t>(
                                          rng.below(rows - 1))) %
                        rows;
      std::vector<uint8_t> extra(mb);
      rng.fill(extra);
      bool z2 = true;
      for (uint8_t b : extra) z2 = z2 && b == 0;
      if (z2) extra[0] = 0xFF;
      for (uint16_t b = 0; b < mb; ++b) {
        expanded[size_t(second) * mb + b] ^= extra[b];
      }
    } else {
      // corrupted bytes at a non-target row
      uint32_t row = (target + 1 + static_cast<uint32_t>(
                                       rng.below(rows - 1))) %
                     rows;
      expanded[size_t(row) * mb + rng.below(mb)] ^=
          static_cast<uint8_t>(1 + rng.below(255));
    }
    shares[victim].variant = KeyVariant::kExpanded;
    shares[victim].material = expanded;

    size_t nonzero = oracle_nonzero_rows(shares, g);
    if (nonzero < 2) {
      return {false, "malformed construction degenerate at " +
                         std::to_string(i)};
    }
    std::vector<Rng> rngs;
    for (unsigned s = 0; s < parties; ++s) {
      rngs.emplace_back(derive_seed(700 + i, s));
    }
    auto t = audit_keyset(shares, g, rngs, i,
                          owner_from_label("m" + std::to_string(i)));
    if (t.verdict != AuditVerdict::kReject ||
        t.zero_rows != g.rows - nonzero) {
      return {false, "malformed keyset " + std::to_string(i) +
                         " not rejected consistently with the oracle"};
    }
  }

  // Lazy flow: accumulate everything, audit, excise rejects; the table must
  // equal the honest-only table byte for byte.
  auto g = TableGeometry::create(256, 2);
  const unsigned parties = 2;
  std::vector<std::unique_ptr<EpochState>> servers;
  for (unsigned s = 0; s < parties; ++s) {
    servers.push_back(std::make_unique<EpochState>(0, g));
  }
  EpochState honest_only(0, g);
  for (int w = 0; w < 40; ++w) {
    std::vector<uint8_t> msg{static_cast<uint8_t>(w + 1),
                             static_cast<uint8_t>(w * 3 + 1)};
    uint32_t target = static_cast<uint32_t>(rng.below(g.rows));
    auto set = keygen(g, target, msg, parties, rng);
    auto shares = set.keys;
    bool malformed = w % 5 == 2;
    if (malformed) {
      auto expanded = shares[1].eval_full();
      uint32_t row = (target + 1) % g.rows;
      expanded[size_t(row) * g.message_bytes] ^= 0x7F;
      shares[1].variant = KeyVariant::kExpanded;
      shares[1].material = expanded;
    }
    OwnerId owner = owner_from_label("lazy" + std::to_string(w));
    for (unsigned s = 0; s < parties; ++s) servers[s]->submit(owner, shares[s]);
    if (!malformed) honest_only.submit(owner, shares[0]);
    std::vector<Rng> rngs;
    for (unsigned s = 0; s < parties; ++s) {
      rngs.emplace_back(derive_seed(800 + w, s));
    }
    auto t = audit_keyset(shares, g, rngs, 0, owner);
    if (!t.accepted()) {
      for (unsigned s = 0; s < parties; ++s) servers[s]->excise(owner);
    }
  }
  bool excise_ok = servers[0]->accumulator() == honest_only.accumulator();

  double elapsed = ms_since(start);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "500 honest accepted, 500 malformed rejected vs oracle, "
                "lazy excision exact: %s, %.0f ms",
                excise_ok ? "yes" : "NO", elapsed);
  return {excise_ok && elapsed < 120000.0, buf};
}

// --- 7. pollution bounds --------------------------------------------------

Outcome criterion_pollution() {
  auto start = Clock::now();
  auto g = TableGeometry::create(64, 2);
  Rng rng(7);
  EpochManager mgr(g);
  auto set = keygen(g, 5, std::vector<uint8_t>{1, 2}, 2, rng);
  OwnerId dup = owner_from_label("concurrent-dup");

  std::atomic<int> accepted{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 100; ++t) {
    threads.emplace_back([&] {
      try {
        mgr.submit(dup, set.keys[0]);
        accepted.fetch_add(1);
      } catch (const DuplicateOwnerError&) {
      }
    });
  }
  for (auto& t : threads) t.join();

  // Out-of-range answers are unrepresentable: the vector type only admits
  // bools, checked at compile time.
  static_assert(!std::is_constructible_v<BitVector, std::vector<int>>);
  static_assert(!std::is_constructible_v<BitVector, std::vector<uint8_t>>);
  static_assert(!std::is_constructible_v<BitVector, std::vector<double>>);
  static_assert(std::is_constructible_v<BitVector, const std::vector<bool>&>);

  double elapsed = ms_since(start);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "100-way concurrent duplicate: %d accepted (want 1); "
                "bit-vector bool-only by construction, %.0f ms",
                accepted.load(), elapsed);
  return {accepted.load() == 1, buf};
}

// --- 8. throughput shape --------------------------------------------------

Outcome criterion_throughput() {
  auto start = Clock::now();
  auto report =
      run_throughput_bench({256, 512, 1024, 2048}, 160, 8, 0, 20240808);
  double deviation = report.max_doubling_deviation();
  double elapsed = ms_since(start);

  std::string rates;
  for (const auto& p : report.points) {
    char item[64];
    std::snprintf(item, sizeof(item), "R=%u:%.0f/s ", p.rows,
                  p.writes_per_sec);
    rates += item;
  }
  char buf[300];
  std::snprintf(buf, sizeof(buf),
                "cost-doubling deviation %.3f (<= 0.35); absolute rates "
                "(not gated): %s, %.0f ms",
                deviation, rates.c_str(), elapsed);
  return {deviation <= 0.35, buf};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_path = argv[1];

  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria = {
      {1, "leakage exactness", criterion_leakage},
      {2, "estimator inversion", criterion_inversion},
      {3, "accuracy at city scale", criterion_accuracy},
      {4, "DPF exhaustive correctness", criterion_dpf},
      {5, "end-to-end epoch equivalence", criterion_e2e},
      {6, "audit soundness/completeness", criterion_audit},
      {7, "pollution bounds", criterion_pollution},
      {8, "throughput shape", criterion_throughput},
  };

  int failures = 0;
  for (auto& c : criteria) {
    if (c.number == 5 && g_cli_path.empty()) {
      std::printf("FAIL criterion %d (%s): CLI path argument missing\n",
                  c.number, c.name);
      ++failures;
      continue;
    }
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", outcome.pass ? "PASS" : "FAIL",
                c.number, c.name, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
