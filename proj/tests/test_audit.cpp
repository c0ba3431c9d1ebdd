#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <vector>

#include "anonagg/audit.hpp"
#include "doctest.h"

using namespace anonagg;

namespace {

OwnerId owner(int i) { return owner_from_label("audit-" + std::to_string(i)); }

std::vector<Rng> make_rngs(unsigned parties, uint64_t base) {
  std::vector<Rng> rngs;
  for (unsigned i = 0; i < parties; ++i) rngs.emplace_back(base + i);
  return rngs;
}

std::vector<uint8_t> random_message(size_t n, Rng& rng, bool nonzero = true) {
  std::vector<uint8_t> m(n);
  rng.fill(m);
  if (nonzero && std::all_of(m.begin(), m.end(), [](uint8_t b) { return !b; })) {
    m[0] = 1;
  }
  return m;
}

// Brute-force oracle: XOR-combine all shares and count nonzero rows.
size_t oracle_nonzero_rows(std::span<const DpfKey> shares,
                           const TableGeometry& g) {
  std::vector<uint8_t> combined(g.table_bytes(), 0);
  for (const auto& s : shares) xor_accumulate(combined, s.eval_full());
  size_t nonzero = 0;
  for (uint32_t r = 0; r < g.rows; ++r) {
    auto* cell = combined.data() + static_cast<size_t>(r) * g.message_bytes;
    if (std::any_of(cell, cell + g.message_bytes,
                    [](uint8_t b) { return b; })) {
      ++nonzero;
    }
  }
  return nonzero;
}

}  // namespace

TEST_CASE("honest keysets are accepted") {
  auto g = TableGeometry::create(64, 4);
  Rng key_rng(1);
  for (int iter = 0; iter < 100; ++iter) {
    uint32_t target = static_cast<uint32_t>(key_rng.below(g.rows));
    auto msg = random_message(g.message_bytes, key_rng);
    auto set = keygen(g, target, msg, 3, key_rng);
    auto rngs = make_rngs(3, 1000 + iter);
    auto t = audit_keyset(set.keys, g, rngs, 5, owner(iter));
    CHECK(t.verdict == AuditVerdict::kAccept);
    CHECK(t.zero_rows == g.rows - 1);
    CHECK(t.nxor_results.size() == g.rows);
  }
}

TEST_CASE("a second nonzero row is rejected with sum rows-2") {
  auto g = TableGeometry::create(64, 2);
  Rng key_rng(2);
  auto set = keygen(g, 10, std::vector<uint8_t>{0xAB, 0xCD}, 3, key_rng);

  // Adversarial share: XOR a second point function into one share.
  auto extra = keygen(g, 20, std::vector<uint8_t>{0x11, 0x22}, 2, key_rng);
  auto shares = set.keys;
  auto poisoned = shares[1].eval_full();
  xor_accumulate(poisoned, combine_evaluations(extra));
  shares[1].variant = KeyVariant::kExpanded;
  shares[1].material = poisoned;

  CHECK(oracle_nonzero_rows(shares, g) == 2);
  auto rngs = make_rngs(3, 50);
  auto t = audit_keyset(shares, g, rngs, 0, owner(0));
  CHECK(t.verdict == AuditVerdict::kReject);
  CHECK(t.zero_rows == g.rows - 2);
}

TEST_CASE("all-zero tables follow the dummy policy") {
  auto g = TableGeometry::create(32, 2);
  Rng key_rng(3);
  auto set = keygen(g, 4, std::vector<uint8_t>{0, 0}, 2, key_rng);

  auto rngs = make_rngs(2, 60);
  auto t = audit_keyset(set.keys, g, rngs, 0, owner(1),
                        AuditPolicy::kAcceptDummies);
  CHECK(t.verdict == AuditVerdict::kAcceptDummy);
  CHECK(t.zero_rows == g.rows);

  auto rngs2 = make_rngs(2, 61);
  auto strict = audit_keyset(set.keys, g, rngs2, 0, owner(1),
                             AuditPolicy::kStrict);
  CHECK(strict.verdict == AuditVerdict::kReject);
}

TEST_CASE("completeness over random geometries") {
  Rng meta(4);
  for (int iter = 0; iter < 50; ++iter) {
    uint32_t rows = 2 + static_cast<uint32_t>(meta.below(255));
    uint16_t mb = 1 + static_cast<uint16_t>(meta.below(8));
    unsigned parties = 2 + static_cast<unsigned>(meta.below(4));
    auto g = TableGeometry::create(rows, mb);
    auto msg = random_message(mb, meta);
    auto set =
        keygen(g, static_cast<uint32_t>(meta.below(rows)), msg, parties, meta);
    auto rngs = make_rngs(parties, 200 + iter);
    auto t = audit_keyset(set.keys, g, rngs, iter, owner(iter));
    CHECK(t.accepted());
    CHECK(t.verdict == AuditVerdict::kAccept);
  }
}

TEST_CASE("soundness fuzz against the brute-force oracle") {
  Rng meta(5);
  for (int iter = 0; iter < 200; ++iter) {
    uint32_t rows = 2 + static_cast<uint32_t>(meta.below(63));
    uint16_t mb = 1 + static_cast<uint16_t>(meta.below(4));
    unsigned parties = 2 + static_cast<unsigned>(meta.below(3));
    auto g = TableGeometry::create(rows, mb);
    auto msg = random_message(mb, meta);
    auto set =
        keygen(g, static_cast<uint32_t>(meta.below(rows)), msg, parties, meta);
    auto shares = set.keys;

    // Corrupt one share with a random nonzero delta at a random row.
    unsigned victim = static_cast<unsigned>(meta.below(parties));
    uint32_t row = static_cast<uint32_t>(meta.below(rows));
    auto expanded = shares[victim].eval_full();
    auto delta = random_message(mb, meta);
    for (uint16_t b = 0; b < mb; ++b) {
      expanded[static_cast<size_t>(row) * mb + b] ^= delta[b];
    }
    shares[victim].variant = KeyVariant::kExpanded;
    shares[victim].material = expanded;

    size_t nonzero = oracle_nonzero_rows(shares, g);
    auto rngs = make_rngs(parties, 300 + iter);
    auto t = audit_keyset(shares, g, rngs, iter, owner(iter));
    if (nonzero == 1) {
      CHECK(t.verdict == AuditVerdict::kAccept);
    } else if (nonzero == 0) {
      CHECK(t.verdict == AuditVerdict::kAcceptDummy);
    } else {
      CHECK(t.verdict == AuditVerdict::kReject);
      CHECK(t.zero_rows == g.rows - nonzero);
    }
  }
}

TEST_CASE("pads are drawn independently of the shares") {
  auto g = TableGeometry::create(16, 2);
  Rng key_rng(6);
  auto set_a = keygen(g, 1, std::vector<uint8_t>{1, 1}, 3, key_rng);
  auto set_b = keygen(g, 9, std::vector<uint8_t>{7, 7}, 3, key_rng);

  auto rngs_a = make_rngs(3, 77);
  auto rngs_b = make_rngs(3, 77);
  auto seeds_a = draw_pair_seeds(3, rngs_a);
  auto seeds_b = draw_pair_seeds(3, rngs_b);
  // Same server randomness, different shares: identical pad seeds.
  CHECK(seeds_a == seeds_b);

  // And the masked vector really is evaluation XOR pads.
  std::vector<PrgSeed> pads{seeds_a[0][1], seeds_a[0][2]};
  auto masked = masked_evaluation(set_a.keys[0], pads, g, default_prg());
  auto manual = set_a.keys[0].eval_full();
  xor_accumulate(manual, expand_pad(pads[0], g, default_prg()));
  xor_accumulate(manual, expand_pad(pads[1], g, default_prg()));
  CHECK(masked == manual);
  // Different share, same pads: masked output differs only by the shares.
  auto masked_b = masked_evaluation(set_b.keys[0], pads, g, default_prg());
  xor_accumulate(masked, masked_b);
  auto share_delta = set_a.keys[0].eval_full();
  xor_accumulate(share_delta, set_b.keys[0].eval_full());
  CHECK(masked == share_delta);
}

TEST_CASE("audit errors") {
  auto g = TableGeometry::create(8, 1);
  Rng key_rng(7);
  auto set = keygen(g, 2, std::vector<uint8_t>{0x33}, 3, key_rng);

  // missing participant
  auto rngs = make_rngs(2, 88);
  CHECK_THROWS_AS(audit_keyset(set.keys, g, rngs, 0, owner(0)),
                  std::invalid_argument);

  // geometry mismatch
  auto other = TableGeometry::create(16, 1);
  auto rngs3 = make_rngs(3, 89);
  CHECK_THROWS_AS(audit_keyset(set.keys, other, rngs3, 0, owner(0)),
                  GeometryMismatchError);
}

TEST_CASE("audit log refuses replays") {
  AuditLog log;
  log.begin(3, owner(1));
  CHECK(log.seen(3, owner(1)));
  CHECK(!log.seen(4, owner(1)));
  CHECK_THROWS_AS(log.begin(3, owner(1)), std::logic_error);
  log.begin(4, owner(1));
}

TEST_CASE("lazy audit plus excision restores the honest table") {
  auto g = TableGeometry::create(128, 2);
  Rng key_rng(8);
  const unsigned parties = 2;
  std::vector<EpochState> servers{{0, g}, {0, g}};
  EpochState honest_only_0(0, g);

  std::vector<std::vector<DpfKey>> all_shares;
  std::vector<OwnerId> owners;
  for (int w = 0; w < 12; ++w) {
    auto msg = random_message(2, key_rng);
    auto set = keygen(g, static_cast<uint32_t>(key_rng.below(g.rows)), msg,
                      parties, key_rng);
    auto shares = set.keys;
    bool malformed = w % 4 == 3;
    if (malformed) {
      auto expanded = shares[0].eval_full();
      uint32_t row = set.target_row == 0 ? 1 : 0;
      expanded[static_cast<size_t>(row) * g.message_bytes] ^= 0xFF;
      shares[0].variant = KeyVariant::kExpanded;
      shares[0].material = expanded;
    }
    OwnerId id = owner(w);
    owners.push_back(id);
    all_shares.push_back(shares);
    for (unsigned s = 0; s < parties; ++s) servers[s].submit(id, shares[s]);
    if (!malformed) honest_only_0.submit(id, shares[0]);
  }

  // Batched post-epoch audit, then excision of every reject.
  for (size_t w = 0; w < owners.size(); ++w) {
    auto rngs = make_rngs(parties, 500 + w);
    auto t = audit_keyset(all_shares[w], g, rngs, 0, owners[w]);
    if (!t.accepted()) {
      for (unsigned s = 0; s < parties; ++s) servers[s].excise(owners[w]);
    }
  }
  CHECK(servers[0].accumulator() == honest_only_0.accumulator());
}
