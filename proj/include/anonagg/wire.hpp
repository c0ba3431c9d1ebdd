#ifndef ANONAGG_WIRE_HPP
#define ANONAGG_WIRE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anonagg/audit.hpp"
#include "anonagg/epoch.hpp"

namespace anonagg {

// Normative wire contract. Every message is one frame:
//   msg_type u8 | epoch_id u64 LE | payload_len u32 LE | payload
// All integers little-endian, unsigned, fixed width.

enum class MsgType : uint8_t {
  kQueryAnnounce = 1,
  kWriteShare = 2,
  kEpochClose = 3,
  kIntermediate = 4,
  kResult = 5,
  kAuditMaskedRows = 6,
  kAuditZeroCheck = 7,
  kAuditVerdict = 8,
  kError = 15,
};

bool msg_type_registered(uint8_t t);

constexpr size_t kFrameHeaderBytes = 13;
constexpr uint32_t kMaxPayloadBytes = 128u << 20;

struct Frame {
  MsgType type = MsgType::kError;
  uint64_t epoch_id = 0;
  std::vector<uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

struct WireError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<uint8_t> encode_frame(const Frame& frame);

// Whole-buffer decode; rejects unknown types, oversize or lying lengths,
// trailing garbage.
Frame decode_frame(std::span<const uint8_t> bytes);

struct FrameHeader {
  MsgType type;
  uint64_t epoch_id;
  uint32_t payload_len;
};

// Header-only decode for incremental stream reads.
FrameHeader decode_frame_header(std::span<const uint8_t> bytes);

// Analyst's long-standing query. The signature is carried opaque and
// unchecked (no PKI here) but mandatory, so the format stays
// forward-compatible with signed deployments.
struct QueryAnnounce {
  uint64_t query_id = 0;
  std::vector<std::string> attribute_labels;
  uint32_t rows = 0;
  uint16_t message_bytes = 0;
  double p = 0.0;
  double q = 0.0;
  uint32_t epoch_ms = 0;
  std::vector<uint8_t> analyst_signature;

  bool operator==(const QueryAnnounce&) const = default;
};

std::vector<uint8_t> encode_query(const QueryAnnounce& query);
QueryAnnounce decode_query(std::span<const uint8_t> bytes);

// labels <= rows; biases in [0,1]; message_bytes large enough to carry one
// privatized bit per label (vectors are never chunked across epochs);
// signature present.
void validate_query(const QueryAnnounce& query);

enum class ErrorCode : uint16_t {
  kDuplicate = 1,
  kEpochClosed = 2,
  kBadGeometry = 3,
  kAuditReject = 4,
  kNotFinalized = 5,
  kWithdraw = 6,
  kProtocol = 7,
  kBadQuery = 8,
};

struct ErrorBody {
  ErrorCode code = ErrorCode::kProtocol;
  uint64_t detail = 0;  // e.g. epoch to retry
  std::string message;

  bool operator==(const ErrorBody&) const = default;
};

std::vector<uint8_t> encode_error(const ErrorBody& body);
ErrorBody decode_error(std::span<const uint8_t> bytes);

struct WriteShareBody {
  OwnerId owner{};
  std::vector<uint8_t> key_bytes;  // serialized DpfKey, always expanded

  bool operator==(const WriteShareBody&) const = default;
};

std::vector<uint8_t> encode_write_share(const WriteShareBody& body);
WriteShareBody decode_write_share(std::span<const uint8_t> bytes);

struct IntermediateBody {
  uint8_t server_id = 0;
  std::vector<uint8_t> table;

  bool operator==(const IntermediateBody&) const = default;
};

std::vector<uint8_t> encode_intermediate(const IntermediateBody& body);
IntermediateBody decode_intermediate(std::span<const uint8_t> bytes);

struct ResultBody {
  uint32_t rows = 0;
  uint16_t message_bytes = 0;
  std::vector<uint8_t> table;  // empty in requests and acks

  bool operator==(const ResultBody&) const = default;
};

std::vector<uint8_t> encode_result(const ResultBody& body);
ResultBody decode_result(std::span<const uint8_t> bytes);

// Peer-channel traffic multiplexed on kAuditMaskedRows. The hello
// identifies a dialing peer; pair seeds establish per-audit pads; masked
// rows are the protocol's step-2 output.
enum class AuditSubType : uint8_t {
  kHello = 0,
  kPairSeed = 1,
  kMaskedRows = 2,
};

struct AuditChannelBody {
  AuditSubType sub = AuditSubType::kHello;
  uint8_t from_server = 0;
  OwnerId owner{};               // unused for hello
  PrgSeed seed{};                // pair seed, kPairSeed only
  std::vector<uint8_t> masked;   // kMaskedRows only

  bool operator==(const AuditChannelBody&) const = default;
};

std::vector<uint8_t> encode_audit_channel(const AuditChannelBody& body);
AuditChannelBody decode_audit_channel(std::span<const uint8_t> bytes);

struct AuditZeroCheckBody {
  uint8_t from_server = 0;
  OwnerId owner{};
  std::vector<RowDigest> digests;

  bool operator==(const AuditZeroCheckBody&) const = default;
};

std::vector<uint8_t> encode_audit_zerocheck(const AuditZeroCheckBody& body);
AuditZeroCheckBody decode_audit_zerocheck(std::span<const uint8_t> bytes);

struct AuditVerdictBody {
  OwnerId owner{};
  AuditVerdict verdict = AuditVerdict::kReject;

  bool operator==(const AuditVerdictBody&) const = default;
};

std::vector<uint8_t> encode_audit_verdict(const AuditVerdictBody& body);
AuditVerdictBody decode_audit_verdict(std::span<const uint8_t> bytes);

}  // namespace anonagg

#endif
