#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "anonagg/wire.hpp"
#include "doctest.h"

using namespace anonagg;

TEST_CASE("header-only frame has the documented layout") {
  Frame f;
  f.type = MsgType::kEpochClose;
  f.epoch_id = 7;
  auto bytes = encode_frame(f);
  std::vector<uint8_t> expected{0x03, 0x07, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(bytes == expected);
  CHECK(bytes.size() == kFrameHeaderBytes);
  CHECK(decode_frame(bytes) == f);
}

TEST_CASE("frame round trip over fuzzed inputs") {
  Rng rng(1);
  const MsgType types[] = {
      MsgType::kQueryAnnounce, MsgType::kWriteShare,  MsgType::kEpochClose,
      MsgType::kIntermediate,  MsgType::kResult,      MsgType::kAuditMaskedRows,
      MsgType::kAuditZeroCheck, MsgType::kAuditVerdict, MsgType::kError};
  for (int i = 0; i < 200; ++i) {
    Frame f;
    f.type = types[rng.below(9)];
    f.epoch_id = rng.u64();
    f.payload.resize(rng.below(2048));
    rng.fill(f.payload);
    CHECK(decode_frame(encode_frame(f)) == f);
  }
}

TEST_CASE("decode rejects malformed frames") {
  Frame f;
  f.type = MsgType::kResult;
  f.epoch_id = 1;
  f.payload = {1, 2, 3};
  auto bytes = encode_frame(f);

  SUBCASE("unknown type") {
    auto bad = bytes;
    bad[0] = 9;  // unregistered
    CHECK_THROWS_AS(decode_frame(bad), WireError);
    bad[0] = 0;
    CHECK_THROWS_AS(decode_frame(bad), WireError);
  }
  SUBCASE("lying payload length") {
    auto bad = bytes;
    bad[9] = 200;  // claims more than present
    CHECK_THROWS_AS(decode_frame(bad), WireError);
  }
  SUBCASE("truncated buffer") {
    auto bad = bytes;
    bad.pop_back();
    CHECK_THROWS_AS(decode_frame(bad), WireError);
    std::vector<uint8_t> tiny{0x03, 0x00};
    CHECK_THROWS_AS(decode_frame(tiny), WireError);
  }
  SUBCASE("oversize payload cap") {
    auto bad = bytes;
    // payload_len = 129 MiB
    uint32_t len = 129u << 20;
    for (int i = 0; i < 4; ++i) bad[9 + i] = static_cast<uint8_t>(len >> (8 * i));
    CHECK_THROWS_AS(decode_frame_header(bad), WireError);
  }
}

TEST_CASE("query announce round trip and validation") {
  QueryAnnounce q;
  q.query_id = 42;
  q.attribute_labels = {"station-a", "station-b", "station-c"};
  q.rows = 512;
  q.message_bytes = 2;
  q.p = 0.995;
  q.q = 0.999;
  q.epoch_ms = 2000;
  q.analyst_signature = {0xDE, 0xAD, 0xBE, 0xEF};

  auto bytes = encode_query(q);
  CHECK(decode_query(bytes) == q);
  CHECK_NOTHROW(validate_query(q));

  SUBCASE("more labels than rows") {
    q.rows = 2;
    CHECK_THROWS_AS(validate_query(q), WireError);
  }
  SUBCASE("bias out of range") {
    q.p = 1.5;
    CHECK_THROWS_AS(validate_query(q), WireError);
  }
  SUBCASE("message bytes too small for the label vector") {
    q.attribute_labels.assign(17, "s");
    q.rows = 64;
    q.message_bytes = 2;  // need ceil(17/8) = 3
    CHECK_THROWS_AS(validate_query(q), WireError);
  }
  SUBCASE("missing signature") {
    q.analyst_signature.clear();
    CHECK_THROWS_AS(validate_query(q), WireError);
  }
  SUBCASE("truncated payload") {
    bytes.pop_back();
    CHECK_THROWS_AS(decode_query(bytes), WireError);
  }
}

TEST_CASE("payload codecs round trip") {
  Rng rng(2);

  ErrorBody err{ErrorCode::kEpochClosed, 9, "epoch closed, retry 9"};
  CHECK(decode_error(encode_error(err)) == err);

  WriteShareBody ws;
  ws.owner = owner_from_label("client-1");
  ws.key_bytes.resize(100);
  rng.fill(ws.key_bytes);
  CHECK(decode_write_share(encode_write_share(ws)) == ws);

  IntermediateBody inter;
  inter.server_id = 1;
  inter.table.resize(64);
  rng.fill(inter.table);
  CHECK(decode_intermediate(encode_intermediate(inter)) == inter);

  ResultBody res;
  res.rows = 16;
  res.message_bytes = 4;
  res.table.resize(64);
  rng.fill(res.table);
  CHECK(decode_result(encode_result(res)) == res);

  AuditChannelBody hello;
  hello.sub = AuditSubType::kHello;
  hello.from_server = 2;
  CHECK(decode_audit_channel(encode_audit_channel(hello)) == hello);

  AuditChannelBody seed;
  seed.sub = AuditSubType::kPairSeed;
  seed.from_server = 0;
  seed.owner = owner_from_label("client-2");
  rng.fill(seed.seed);
  CHECK(decode_audit_channel(encode_audit_channel(seed)) == seed);

  AuditChannelBody masked;
  masked.sub = AuditSubType::kMaskedRows;
  masked.from_server = 1;
  masked.owner = seed.owner;
  masked.masked.resize(128);
  rng.fill(masked.masked);
  CHECK(decode_audit_channel(encode_audit_channel(masked)) == masked);

  AuditZeroCheckBody zc;
  zc.from_server = 1;
  zc.owner = seed.owner;
  zc.digests.resize(16);
  for (auto& d : zc.digests) rng.fill(d);
  CHECK(decode_audit_zerocheck(encode_audit_zerocheck(zc)) == zc);

  AuditVerdictBody verdict;
  verdict.owner = seed.owner;
  verdict.verdict = AuditVerdict::kAcceptDummy;
  CHECK(decode_audit_verdict(encode_audit_verdict(verdict)) == verdict);
}

TEST_CASE("owner id hex round trip") {
  auto id = owner_from_label("someone");
  CHECK(owner_from_hex(owner_hex(id)) == id);
  CHECK_THROWS_AS(owner_from_hex("zz"), std::invalid_argument);
}
