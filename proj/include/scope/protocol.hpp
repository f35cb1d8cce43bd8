#pragma once

#include <cstdint>
#include <vector>

#include "scope/vec.hpp"

namespace scope {

// Wire tags. The two-byte magic 0x5C 0x0E opens every frame after the length
// prefix.
enum class MsgType : std::uint8_t {
  Hello = 0x00,           // worker -> master: announce worker_id
  Params = 0x01,          // master -> worker: w_t for a new round
  LocalGradSum = 0x02,    // worker -> master: sum of local gradients at w_t
  FullGrad = 0x03,        // master -> worker: averaged full gradient z
  LocalUpdate = 0x04,     // worker -> master: combined local iterate
  MiniBatchStats = 0x05,  // worker -> master: batch size + two gradient sums
  InnerParams = 0x06,     // master -> worker: inner iterate u_m
  Shutdown = 0x07,        // master -> worker: session over
};

const char* to_string(MsgType t);

// In-memory form of one frame. Only the fields a given type carries are
// meaningful; constructors zero the rest so equality is plain field-wise.
struct Message {
  MsgType type = MsgType::Shutdown;
  std::uint32_t round = 0;
  std::uint32_t inner_step = 0;
  std::uint32_t worker_id = 0;
  std::uint32_t batch_size = 0;
  ModelVector vec;   // primary payload vector
  ModelVector vec2;  // second vector (MiniBatchStats only)

  static Message hello(std::uint32_t worker_id);
  static Message params(std::uint32_t round, ModelVector w);
  static Message local_grad_sum(std::uint32_t round, std::uint32_t worker_id, ModelVector z_k);
  static Message full_grad(std::uint32_t round, ModelVector z);
  static Message local_update(std::uint32_t round, std::uint32_t worker_id, ModelVector u);
  static Message mini_batch_stats(std::uint32_t round, std::uint32_t inner_step,
                                  std::uint32_t worker_id, std::uint32_t batch_size,
                                  ModelVector grad_at_u, ModelVector grad_at_w);
  static Message inner_params(std::uint32_t round, std::uint32_t inner_step, ModelVector u);
  static Message shutdown();

  // Hello and Shutdown are bookkeeping; everything else counts as payload
  // traffic.
  bool is_payload() const { return type != MsgType::Hello && type != MsgType::Shutdown; }
};

// Bitwise on the doubles, so round-trips are checkable without tolerances.
bool operator==(const Message& a, const Message& b);
inline bool operator!=(const Message& a, const Message& b) { return !(a == b); }

// Complete frame: u32 little-endian length of everything that follows, then
// magic, tag, the type's header u32s, and each vector as u32 length + f64s,
// all little-endian. A Shutdown frame is exactly 7 bytes.
std::vector<std::uint8_t> encode(const Message& m);

// Expects exactly one complete frame (including the length prefix); throws
// ProtocolError on bad magic, unknown tag, truncation, or trailing bytes.
Message decode(const std::uint8_t* data, std::size_t size);
Message decode(const std::vector<std::uint8_t>& frame);

// Message counters as seen from one endpoint. Hello/Shutdown are excluded
// everywhere; sync_rounds counts completed gather barriers.
struct CommStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t payload_bytes = 0;  // encoded frame bytes, both directions
  std::uint64_t sync_rounds = 0;

  std::uint64_t total_messages() const { return messages_sent + messages_received; }
};

}  // namespace scope
