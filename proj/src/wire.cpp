#include "anonagg/wire.hpp"

#include <cmath>
#include <cstring>

namespace anonagg {

namespace {

class Writer {
 public:
  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    out_.push_back(static_cast<uint8_t>(v));
    out_.push_back(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
  }
  void bytes(std::span<const uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void str16(const std::string& s) {
    if (s.size() > UINT16_MAX) throw WireError("string too long");
    u16(static_cast<uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<uint8_t> take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    auto b = take(2);
    return static_cast<uint16_t>(b[0] | b[1] << 8);
  }
  uint32_t u32() {
    auto b = take(4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 |
           static_cast<uint32_t>(b[3]) << 24;
  }
  uint64_t u64() {
    uint64_t v = 0;
    auto b = take(8);
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::span<const uint8_t> take(size_t n) {
    if (in_.size() - off_ < n) throw WireError("truncated payload");
    auto s = in_.subspan(off_, n);
    off_ += n;
    return s;
  }
  std::string str16() {
    uint16_t n = u16();
    auto b = take(n);
    return std::string(b.begin(), b.end());
  }
  void expect_end() const {
    if (off_ != in_.size()) throw WireError("trailing bytes in payload");
  }
  size_t remaining() const { return in_.size() - off_; }

 private:
  std::span<const uint8_t> in_;
  size_t off_ = 0;
};

OwnerId read_owner(Reader& r) {
  OwnerId id;
  auto b = r.take(id.size());
  std::memcpy(id.data(), b.data(), id.size());
  return id;
}

}  // namespace

bool msg_type_registered(uint8_t t) {
  switch (static_cast<MsgType>(t)) {
    case MsgType::kQueryAnnounce:
    case MsgType::kWriteShare:
    case MsgType::kEpochClose:
    case MsgType::kIntermediate:
    case MsgType::kResult:
    case MsgType::kAuditMaskedRows:
    case MsgType::kAuditZeroCheck:
    case MsgType::kAuditVerdict:
    case MsgType::kError:
      return true;
    default:
      return false;
  }
}

std::vector<uint8_t> encode_frame(const Frame& frame) {
  if (!msg_type_registered(static_cast<uint8_t>(frame.type))) {
    throw WireError("encode_frame: unregistered msg_type");
  }
  if (frame.payload.size() > kMaxPayloadBytes) {
    throw WireError("encode_frame: payload exceeds cap");
  }
  Writer w;
  w.u8(static_cast<uint8_t>(frame.type));
  w.u64(frame.epoch_id);
  w.u32(static_cast<uint32_t>(frame.payload.size()));
  w.bytes(frame.payload);
  return w.take();
}

FrameHeader decode_frame_header(std::span<const uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) {
    throw WireError("decode_frame_header: truncated header");
  }
  Reader r(bytes.subspan(0, kFrameHeaderBytes));
  uint8_t type = r.u8();
  if (!msg_type_registered(type)) {
    throw WireError("decode_frame_header: unknown msg_type");
  }
  FrameHeader h{static_cast<MsgType>(type), r.u64(), r.u32()};
  if (h.payload_len > kMaxPayloadBytes) {
    throw WireError("decode_frame_header: payload exceeds cap");
  }
  return h;
}

Frame decode_frame(std::span<const uint8_t> bytes) {
  FrameHeader h = decode_frame_header(bytes);
  if (bytes.size() - kFrameHeaderBytes != h.payload_len) {
    throw WireError("decode_frame: payload length mismatch");
  }
  Frame f;
  f.type = h.type;
  f.epoch_id = h.epoch_id;
  f.payload.assign(bytes.begin() + kFrameHeaderBytes, bytes.end());
  return f;
}

std::vector<uint8_t> encode_query(const QueryAnnounce& query) {
  Writer w;
  w.u64(query.query_id);
  w.u32(query.rows);
  w.u16(query.message_bytes);
  w.f64(query.p);
  w.f64(query.q);
  w.u32(query.epoch_ms);
  if (query.attribute_labels.size() > UINT32_MAX) {
    throw WireError("encode_query: too many labels");
  }
  w.u32(static_cast<uint32_t>(query.attribute_labels.size()));
  for (const auto& label : query.attribute_labels) w.str16(label);
  w.u32(static_cast<uint32_t>(query.analyst_signature.size()));
  w.bytes(query.analyst_signature);
  return w.take();
}

QueryAnnounce decode_query(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  QueryAnnounce q;
  q.query_id = r.u64();
  q.rows = r.u32();
  q.message_bytes = r.u16();
  q.p = r.f64();
  q.q = r.f64();
  q.epoch_ms = r.u32();
  uint32_t labels = r.u32();
  q.attribute_labels.reserve(labels);
  for (uint32_t i = 0; i < labels; ++i) q.attribute_labels.push_back(r.str16());
  uint32_t sig_len = r.u32();
  auto sig = r.take(sig_len);
  q.analyst_signature.assign(sig.begin(), sig.end());
  r.expect_end();
  return q;
}

void validate_query(const QueryAnnounce& query) {
  if (query.rows < 2) throw WireError("query: rows must be >= 2");
  if (query.message_bytes < 1) {
    throw WireError("query: message_bytes must be >= 1");
  }
  if (query.attribute_labels.empty()) {
    throw WireError("query: need at least one attribute label");
  }
  if (query.attribute_labels.size() > query.rows) {
    throw WireError("query: more labels than rows");
  }
  if (!(query.p >= 0.0 && query.p <= 1.0) || std::isnan(query.p)) {
    throw WireError("query: p out of range");
  }
  if (!(query.q >= 0.0 && query.q <= 1.0) || std::isnan(query.q)) {
    throw WireError("query: q out of range");
  }
  size_t need = (query.attribute_labels.size() + 7) / 8;
  if (query.message_bytes < need) {
    throw WireError(
        "query: message_bytes cannot carry one bit per label; privatized "
        "vectors are never chunked across epochs");
  }
  if (query.analyst_signature.empty()) {
    throw WireError("query: analyst_signature is mandatory");
  }
}

std::vector<uint8_t> encode_error(const ErrorBody& body) {
  Writer w;
  w.u16(static_cast<uint16_t>(body.code));
  w.u64(body.detail);
  w.str16(body.message);
  return w.take();
}

ErrorBody decode_error(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  ErrorBody b;
  b.code = static_cast<ErrorCode>(r.u16());
  b.detail = r.u64();
  b.message = r.str16();
  r.expect_end();
  return b;
}

std::vector<uint8_t> encode_write_share(const WriteShareBody& body) {
  Writer w;
  w.bytes(body.owner);
  w.bytes(body.key_bytes);
  return w.take();
}

WriteShareBody decode_write_share(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  WriteShareBody b;
  b.owner = read_owner(r);
  auto rest = r.take(r.remaining());
  b.key_bytes.assign(rest.begin(), rest.end());
  return b;
}

std::vector<uint8_t> encode_intermediate(const IntermediateBody& body) {
  Writer w;
  w.u8(body.server_id);
  w.bytes(body.table);
  return w.take();
}

IntermediateBody decode_intermediate(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  IntermediateBody b;
  b.server_id = r.u8();
  auto rest = r.take(r.remaining());
  b.table.assign(rest.begin(), rest.end());
  return b;
}

std::vector<uint8_t> encode_result(const ResultBody& body) {
  Writer w;
  w.u32(body.rows);
  w.u16(body.message_bytes);
  w.bytes(body.table);
  return w.take();
}

ResultBody decode_result(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  ResultBody b;
  b.rows = r.u32();
  b.message_bytes = r.u16();
  auto rest = r.take(r.remaining());
  b.table.assign(rest.begin(), rest.end());
  return b;
}

std::vector<uint8_t> encode_audit_channel(const AuditChannelBody& body) {
  Writer w;
  w.u8(static_cast<uint8_t>(body.sub));
  w.u8(body.from_server);
  switch (body.sub) {
    case AuditSubType::kHello:
      break;
    case AuditSubType::kPairSeed:
      w.bytes(body.owner);
      w.bytes(body.seed);
      break;
    case AuditSubType::kMaskedRows:
      w.bytes(body.owner);
      w.bytes(body.masked);
      break;
  }
  return w.take();
}

AuditChannelBody decode_audit_channel(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  AuditChannelBody b;
  uint8_t sub = r.u8();
  if (sub > static_cast<uint8_t>(AuditSubType::kMaskedRows)) {
    throw WireError("audit channel: unknown sub type");
  }
  b.sub = static_cast<AuditSubType>(sub);
  b.from_server = r.u8();
  switch (b.sub) {
    case AuditSubType::kHello:
      r.expect_end();
      break;
    case AuditSubType::kPairSeed: {
      b.owner = read_owner(r);
      auto s = r.take(b.seed.size());
      std::memcpy(b.seed.data(), s.data(), b.seed.size());
      r.expect_end();
      break;
    }
    case AuditSubType::kMaskedRows: {
      b.owner = read_owner(r);
      auto rest = r.take(r.remaining());
      b.masked.assign(rest.begin(), rest.end());
      break;
    }
  }
  return b;
}

std::vector<uint8_t> encode_audit_zerocheck(const AuditZeroCheckBody& body) {
  Writer w;
  w.u8(body.from_server);
  w.bytes(body.owner);
  w.u32(static_cast<uint32_t>(body.digests.size()));
  for (const RowDigest& d : body.digests) w.bytes(d);
  return w.take();
}

AuditZeroCheckBody decode_audit_zerocheck(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  AuditZeroCheckBody b;
  b.from_server = r.u8();
  b.owner = read_owner(r);
  uint32_t count = r.u32();
  b.digests.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    auto d = r.take(kAuditDigestBytes);
    std::memcpy(b.digests[i].data(), d.data(), kAuditDigestBytes);
  }
  r.expect_end();
  return b;
}

std::vector<uint8_t> encode_audit_verdict(const AuditVerdictBody& body) {
  Writer w;
  w.bytes(body.owner);
  w.u8(static_cast<uint8_t>(body.verdict));
  return w.take();
}

AuditVerdictBody decode_audit_verdict(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  AuditVerdictBody b;
  b.owner = read_owner(r);
  uint8_t v = r.u8();
  if (v > static_cast<uint8_t>(AuditVerdict::kReject)) {
    throw WireError("audit verdict: unknown verdict");
  }
  b.verdict = static_cast<AuditVerdict>(v);
  r.expect_end();
  return b;
}

}  // namespace anonagg
