#include "anonagg/sim.hpp"

namespace anonagg {

std::vector<BitVector> make_one_hot_truths(unsigned clients, size_t attributes,
                                           uint64_t seed) {
  Rng rng(derive_seed(seed, 0x7472757468ull));  // independent truth stream
  std::vector<BitVector> truths;
  truths.reserve(clients);
  for (unsigned i = 0; i < clients; ++i) {
    BitVector v(attributes);
    v.set(rng.below(attributes), true);
    truths.push_back(std::move(v));
  }
  return truths;
}

OwnerId sim_owner(unsigned index, bool dummy) {
  return owner_from_label((dummy ? "dummy-" : "client-") +
                          std::to_string(index));
}

SimOutcome run_inprocess(const SimSpec& spec,
                         const std::vector<BitVector>& truths,
                         const Prg& prg) {
  if (truths.size() != spec.clients) {
    throw std::invalid_argument("run_inprocess: one truth per client");
  }
  const unsigned p = spec.params.parties;
  if (p < 2) throw std::invalid_argument("run_inprocess: need >= 2 servers");

  SimOutcome outcome;

  // Same per-client seed schedule as the live driver.
  for (unsigned i = 0; i < spec.clients; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    outcome.submissions.push_back(
        prepare_submission(spec.params, truths[i], rng, prg));
    outcome.owners.push_back(sim_owner(i, false));
  }
  for (unsigned j = 0; j < spec.dummies; ++j) {
    Rng rng(derive_seed(spec.seed, spec.clients + j));
    outcome.submissions.push_back(prepare_dummy(spec.params, rng, prg));
    outcome.owners.push_back(sim_owner(j, true));
  }

  std::vector<std::unique_ptr<EpochManager>> server_ptrs;
  server_ptrs.reserve(p);
  for (unsigned s = 0; s < p; ++s) {
    server_ptrs.push_back(std::make_unique<EpochManager>(spec.params.geometry));
  }
  auto servers = [&](unsigned s) -> EpochManager& { return *server_ptrs[s]; };
  std::vector<Rng> audit_rngs;
  for (unsigned s = 0; s < p; ++s) {
    audit_rngs.emplace_back(derive_seed(spec.seed ^ 0x5e72'76657273ull, s));
  }

  auto run_audit = [&](size_t idx) {
    return audit_keyset(outcome.submissions[idx].keyset.keys,
                        spec.params.geometry, audit_rngs, 0,
                        outcome.owners[idx], spec.policy, prg);
  };

  if (spec.audit_mode == AuditMode::kEager) {
    for (size_t i = 0; i < outcome.submissions.size(); ++i) {
      auto transcript = run_audit(i);
      if (!transcript.accepted()) {
        outcome.rejected++;
        continue;
      }
      for (unsigned s = 0; s < p; ++s) {
        servers(s).submit(outcome.owners[i],
                          outcome.submissions[i].keyset.keys[s], 0, prg);
      }
    }
    for (unsigned s = 0; s < p; ++s) servers(s).close(0);
  } else {
    for (size_t i = 0; i < outcome.submissions.size(); ++i) {
      for (unsigned s = 0; s < p; ++s) {
        servers(s).submit(outcome.owners[i],
                          outcome.submissions[i].keyset.keys[s], 0, prg);
      }
    }
    for (unsigned s = 0; s < p; ++s) servers(s).close(0);
    for (size_t i = 0; i < outcome.submissions.size(); ++i) {
      auto transcript = run_audit(i);
      if (!transcript.accepted()) {
        outcome.rejected++;
        for (unsigned s = 0; s < p; ++s) {
          servers(s).excise(0, outcome.owners[i], prg);
        }
      }
    }
  }

  // All-to-all intermediate exchange; every server finalizes.
  std::vector<std::vector<uint8_t>> snapshots;
  snapshots.reserve(p);
  for (unsigned s = 0; s < p; ++s) snapshots.push_back(*servers(s).snapshot(0));
  for (unsigned s = 0; s < p; ++s) {
    std::vector<std::vector<uint8_t>> peers;
    for (unsigned t = 0; t < p; ++t) {
      if (t != s) peers.push_back(snapshots[t]);
    }
    outcome.tables.push_back(servers(s).finalize(0, peers));
  }
  return outcome;
}

std::multiset<std::vector<uint8_t>> write_multiset(const WriteTable& table) {
  std::multiset<std::vector<uint8_t>> out;
  for (auto& [row, bytes] : table.nonzero_rows()) {
    out.insert(bytes);
  }
  return out;
}

}  // namespace anonagg
