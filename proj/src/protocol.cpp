#include "scope/protocol.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <string>

#include "scope/errors.hpp"

namespace scope {
namespace {

constexpr std::uint8_t kMagic0 = 0x5C;
constexpr std::uint8_t kMagic1 = 0x0E;
constexpr std::uint8_t kMaxTag = 0x07;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v >> 16));
    buf_.push_back(static_cast<std::uint8_t>(v >> 24));
  }

  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }

  void vec(const ModelVector& v) {
    if (v.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw ProtocolError(ProtocolErrc::FrameTooLarge, "vector length exceeds u32");
    }
    u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) f64(x);
  }

  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() {
    need(1);
    return data_[off_++];
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[off_ + i]) << (8 * i);
    off_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(data_[off_ + i]) << (8 * i);
    off_ += 8;
    return std::bit_cast<double>(bits);
  }

  ModelVector vec() {
    const std::uint32_t len = u32();
    if (remaining() / 8 < len) throw ProtocolError(ProtocolErrc::Truncated, "short vector");
    ModelVector v(len);
    for (std::uint32_t i = 0; i < len; ++i) v[i] = f64();
    return v;
  }

  std::size_t remaining() const { return size_ - off_; }

 private:
  void need(std::size_t bytes) const {
    if (size_ - off_ < bytes) throw ProtocolError(ProtocolErrc::Truncated);
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t off_ = 0;
};

}  // namespace

const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::Hello: return "Hello";
    case MsgType::Params: return "Params";
    case MsgType::LocalGradSum: return "LocalGradSum";
    case MsgType::FullGrad: return "FullGrad";
    case MsgType::LocalUpdate: return "LocalUpdate";
    case MsgType::MiniBatchStats: return "MiniBatchStats";
    case MsgType::InnerParams: return "InnerParams";
    case MsgType::Shutdown: return "Shutdown";
  }
  return "?";
}

Message Message::hello(std::uint32_t worker_id) {
  Message m;
  m.type = MsgType::Hello;
  m.worker_id = worker_id;
  return m;
}

Message Message::params(std::uint32_t round, ModelVector w) {
  Message m;
  m.type = MsgType::Params;
  m.round = round;
  m.vec = std::move(w);
  return m;
}

Message Message::local_grad_sum(std::uint32_t round, std::uint32_t worker_id, ModelVector z_k) {
  Message m;
  m.type = MsgType::LocalGradSum;
  m.round = round;
  m.worker_id = worker_id;
  m.vec = std::move(z_k);
  return m;
}

Message Message::full_grad(std::uint32_t round, ModelVector z) {
  Message m;
  m.type = MsgType::FullGrad;
  m.round = round;
  m.vec = std::move(z);
  return m;
}

Message Message::local_update(std::uint32_t round, std::uint32_t worker_id, ModelVector u) {
  Message m;
  m.type = MsgType::LocalUpdate;
  m.round = round;
  m.worker_id = worker_id;
  m.vec = std::move(u);
  return m;
}

Message Message::mini_batch_stats(std::uint32_t round, std::uint32_t inner_step,
                                  std::uint32_t worker_id, std::uint32_t batch_size,
                                  ModelVector grad_at_u, ModelVector grad_at_w) {
  Message m;
  m.type = MsgType::MiniBatchStats;
  m.round = round;
  m.inner_step = inner_step;
  m.worker_id = worker_id;
  m.batch_size = batch_size;
  m.vec = std::move(grad_at_u);
  m.vec2 = std::move(grad_at_w);
  return m;
}

Message Message::inner_params(std::uint32_t round, std::uint32_t inner_step, ModelVector u) {
  Message m;
  m.type = MsgType::InnerParams;
  m.round = round;
  m.inner_step = inner_step;
  m.vec = std::move(u);
  return m;
}

Message Message::shutdown() { return Message{}; }

namespace {

bool bits_equal(const ModelVector& a, const ModelVector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace

bool operator==(const Message& a, const Message& b) {
  return a.type == b.type && a.round == b.round && a.inner_step == b.inner_step &&
         a.worker_id == b.worker_id && a.batch_size == b.batch_size && bits_equal(a.vec, b.vec) &&
         bits_equal(a.vec2, b.vec2);
}

std::vector<std::uint8_t> encode(const Message& m) {
  ByteWriter body;
  body.u8(kMagic0);
  body.u8(kMagic1);
  body.u8(static_cast<std::uint8_t>(m.type));
  switch (m.type) {
    case MsgType::Hello:
      body.u32(m.worker_id);
      break;
    case MsgType::Params:
      body.u32(m.round);
      body.vec(m.vec);
      break;
    case MsgType::LocalGradSum:
      body.u32(m.round);
      body.u32(m.worker_id);
      body.vec(m.vec);
      break;
    case MsgType::FullGrad:
      body.u32(m.round);
      body.vec(m.vec);
      break;
    case MsgType::LocalUpdate:
      body.u32(m.round);
      body.u32(m.worker_id);
      body.vec(m.vec);
      break;
    case MsgType::MiniBatchStats:
      body.u32(m.round);
      body.u32(m.inner_step);
      body.u32(m.worker_id);
      body.u32(m.batch_size);
      body.vec(m.vec);
      body.vec(m.vec2);
      break;
    case MsgType::InnerParams:
      body.u32(m.round);
      body.u32(m.inner_step);
      body.vec(m.vec);
      break;
    case MsgType::Shutdown:
      break;
  }

  std::vector<std::uint8_t> inner = body.take();
  if (inner.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ProtocolError(ProtocolErrc::FrameTooLarge);
  }
  ByteWriter frame;
  frame.u32(static_cast<std::uint32_t>(inner.size()));
  std::vector<std::uint8_t> out = frame.take();
  out.insert(out.end(), inner.begin(), inner.end());
  return out;
}

Message decode(const std::uint8_t* data, std::size_t size) {
  ByteReader prefix(data, size);
  const std::uint32_t length = prefix.u32();
  if (size < 4 + static_cast<std::size_t>(length)) {
    throw ProtocolError(ProtocolErrc::Truncated, "frame shorter than its length prefix");
  }
  if (size > 4 + static_cast<std::size_t>(length)) {
    throw ProtocolError(ProtocolErrc::TrailingBytes, "bytes beyond the framed length");
  }

  ByteReader r(data + 4, length);
  if (r.u8() != kMagic0 || r.u8() != kMagic1) throw ProtocolError(ProtocolErrc::BadMagic);
  const std::uint8_t tag = r.u8();
  if (tag > kMaxTag) {
    throw ProtocolError(ProtocolErrc::UnknownTag, "tag " + std::to_string(tag));
  }

  Message m;
  m.type = static_cast<MsgType>(tag);
  switch (m.type) {
    case MsgType::Hello:
      m.worker_id = r.u32();
      break;
    case MsgType::Params:
      m.round = r.u32();
      m.vec = r.vec();
      break;
    case MsgType::LocalGradSum:
      m.round = r.u32();
      m.worker_id = r.u32();
      m.vec = r.vec();
      break;
    case MsgType::FullGrad:
      m.round = r.u32();
      m.vec = r.vec();
      break;
    case MsgType::LocalUpdate:
      m.round = r.u32();
      m.worker_id = r.u32();
      m.vec = r.vec();
      break;
    case MsgType::MiniBatchStats:
      m.round = r.u32();
      m.inner_step = r.u32();
      m.worker_id = r.u32();
      m.batch_size = r.u32();
      m.vec = r.vec();
      m.vec2 = r.vec();
      break;
    case MsgType::InnerParams:
      m.round = r.u32();
      m.inner_step = r.u32();
      m.vec = r.vec();
      break;
    case MsgType::Shutdown:
      break;
  }
  if (r.remaining() != 0) {
    throw ProtocolError(ProtocolErrc::TrailingBytes, "unconsumed bytes inside frame");
  }
  return m;
}

Message decode(const std::vector<std::uint8_t>& frame) { return decode(frame.data(), frame.size()); }

}  // namespace scope
