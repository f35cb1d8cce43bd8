#include "scope/transport.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "scope/errors.hpp"

namespace scope {

void MasterLinks::send(int worker_id, const Message& m) {
  const std::vector<std::uint8_t> frame = encode(m);
  send_frame(worker_id, frame);
  if (m.is_payload()) {
    ++stats_.messages_sent;
    stats_.payload_bytes += frame.size();
  }
}

Message MasterLinks::recv(int worker_id) {
  const std::vector<std::uint8_t> frame = recv_frame(worker_id);
  Message m = decode(frame);
  if (m.is_payload()) {
    ++stats_.messages_received;
    stats_.payload_bytes += frame.size();
  }
  return m;
}

void WorkerLink::send(const Message& m) {
  const std::vector<std::uint8_t> frame = encode(m);
  send_frame(frame);
  if (m.is_payload()) {
    ++stats_.messages_sent;
    stats_.payload_bytes += frame.size();
  }
}

Message WorkerLink::recv() {
  const std::vector<std::uint8_t> frame = recv_frame();
  Message m = decode(frame);
  if (m.is_payload()) {
    ++stats_.messages_received;
    stats_.payload_bytes += frame.size();
  }
  return m;
}

// ---------------------------------------------------------------------------
// In-process transport
// ---------------------------------------------------------------------------

namespace {

struct FrameQueue {
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> frames;
  bool closed = false;

  void push(std::vector<std::uint8_t> frame) {
    {
      std::lock_guard<std::mutex> lock(m);
      frames.push_back(std::move(frame));
    }
    cv.notify_one();
  }

  std::vector<std::uint8_t> pop() {
    std::unique_lock<std::mutex> lock(m);
    cv.wait(lock, [&] { return !frames.empty() || closed; });
    if (frames.empty()) throw ProtocolError(ProtocolErrc::PeerDisconnected, "queue closed");
    std::vector<std::uint8_t> frame = std::move(frames.front());
    frames.pop_front();
    return frame;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(m);
      closed = true;
    }
    cv.notify_all();
  }
};

}  // namespace

struct InProcHub::Impl {
  explicit Impl(int p)
      : to_worker(static_cast<std::size_t>(p)), to_master(static_cast<std::size_t>(p)) {}

  std::vector<FrameQueue> to_worker;
  std::vector<FrameQueue> to_master;
  std::unique_ptr<MasterLinks> master;
  std::vector<std::unique_ptr<WorkerLink>> workers;

  FrameQueue& queue_to_worker(int worker_id) {
    return to_worker.at(static_cast<std::size_t>(worker_id) - 1);
  }
  FrameQueue& queue_to_master(int worker_id) {
    return to_master.at(static_cast<std::size_t>(worker_id) - 1);
  }
};

namespace {

class InProcMasterLinks : public MasterLinks {
 public:
  InProcMasterLinks(InProcHub::Impl& impl, int p) : impl_(impl), p_(p) {}

  int worker_count() const override { return p_; }

 protected:
  void send_frame(int worker_id, const std::vector<std::uint8_t>& frame) override {
    impl_.queue_to_worker(worker_id).push(frame);
  }

  std::vector<std::uint8_t> recv_frame(int worker_id) override {
    return impl_.queue_to_master(worker_id).pop();
  }

 private:
  InProcHub::Impl& impl_;
  int p_;
};

class InProcWorkerLink : public WorkerLink {
 public:
  InProcWorkerLink(InProcHub::Impl& impl, int worker_id) : impl_(impl), worker_id_(worker_id) {}

 protected:
  void send_frame(const std::vector<std::uint8_t>& frame) override {
    impl_.queue_to_master(worker_id_).push(frame);
  }

  std::vector<std::uint8_t> recv_frame() override {
    return impl_.queue_to_worker(worker_id_).pop();
  }

 private:
  InProcHub::Impl& impl_;
  int worker_id_;
};

}  // namespace

InProcHub::InProcHub(int p) {
  if (p < 1) throw std::invalid_argument("worker count must be >= 1");
  impl_ = std::make_unique<Impl>(p);
  impl_->master = std::make_unique<InProcMasterLinks>(*impl_, p);
  for (int k = 1; k <= p; ++k) {
    impl_->workers.push_back(std::make_unique<InProcWorkerLink>(*impl_, k));
  }
}

InProcHub::~InProcHub() = default;

MasterLinks& InProcHub::master_links() { return *impl_->master; }

WorkerLink& InProcHub::worker_link(int worker_id) {
  return *impl_->workers.at(static_cast<std::size_t>(worker_id) - 1);
}

void InProcHub::close_worker(int worker_id) { impl_->queue_to_master(worker_id).close(); }

// ---------------------------------------------------------------------------
// TCP transport
// ---------------------------------------------------------------------------

void split_host_port(const std::string& addr, std::string& host, int& port) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw ConfigError("address must be host:port, got '" + addr + "'");
  }
  host = addr.substr(0, colon);
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad port in address '" + addr + "'");
  }
  if (port < 0 || port > 65535) throw ConfigError("port out of range in '" + addr + "'");
}

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw IoError(what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  std::size_t off = 0;
  while (off < size) {
    const ssize_t n = ::send(fd, data + off, size - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET) {
        throw ProtocolError(ProtocolErrc::PeerDisconnected, std::strerror(errno));
      }
      throw_errno("send");
    }
    off += static_cast<std::size_t>(n);
  }
}

// Returns false on clean EOF at a frame boundary (start == true, zero bytes).
bool read_all(int fd, std::uint8_t* data, std::size_t size, bool eof_ok_at_start) {
  std::size_t off = 0;
  while (off < size) {
    const ssize_t n = ::recv(fd, data + off, size - off, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) {
        throw ProtocolError(ProtocolErrc::PeerDisconnected, std::strerror(errno));
      }
      throw_errno("recv");
    }
    if (n == 0) {
      if (off == 0 && eof_ok_at_start) return false;
      throw ProtocolError(ProtocolErrc::PeerDisconnected, "connection closed mid-frame");
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::vector<std::uint8_t> read_frame(int fd) {
  std::vector<std::uint8_t> frame(4);
  if (!read_all(fd, frame.data(), 4, true)) {
    throw ProtocolError(ProtocolErrc::PeerDisconnected, "connection closed");
  }
  std::uint32_t length = 0;
  for (int i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(frame[i]) << (8 * i);
  frame.resize(4 + static_cast<std::size_t>(length));
  read_all(fd, frame.data() + 4, length, false);
  return frame;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

struct AddrInfo {
  addrinfo* res = nullptr;
  ~AddrInfo() {
    if (res) ::freeaddrinfo(res);
  }
};

addrinfo* resolve(const std::string& host, int port, bool passive, AddrInfo& holder) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints,
                               &holder.res);
  if (rc != 0) throw IoError("getaddrinfo(" + host + "): " + gai_strerror(rc));
  return holder.res;
}

}  // namespace

TcpMasterLinks::TcpMasterLinks(const std::string& bind_addr, int p)
    : p_(p), fds_(static_cast<std::size_t>(p), -1) {
  if (p < 1) throw std::invalid_argument("worker count must be >= 1");
  std::string host;
  int port = 0;
  split_host_port(bind_addr, host, port);

  AddrInfo holder;
  addrinfo* ai = resolve(host, port, true, holder);
  listen_fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
  if (listen_fd_ < 0) throw_errno("socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, ai->ai_addr, ai->ai_addrlen) != 0) throw_errno("bind " + bind_addr);
  if (::listen(listen_fd_, p) != 0) throw_errno("listen");

  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len) != 0) {
    throw_errno("getsockname");
  }
  port_ = ntohs(bound.sin_port);
}

TcpMasterLinks::~TcpMasterLinks() {
  for (int fd : fds_) {
    if (fd >= 0) ::close(fd);
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpMasterLinks::accept_workers() {
  for (int i = 0; i < p_; ++i) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) throw_errno("accept");
    set_nodelay(fd);
    const Message hello = decode(read_frame(fd));
    if (hello.type != MsgType::Hello) {
      ::close(fd);
      throw ProtocolError(ProtocolErrc::UnexpectedMessage, "expected Hello");
    }
    const std::uint32_t id = hello.worker_id;
    if (id < 1 || id > static_cast<std::uint32_t>(p_) || fds_[id - 1] >= 0) {
      ::close(fd);
      throw ProtocolError(ProtocolErrc::UnexpectedMessage,
                          "bad worker id " + std::to_string(id));
    }
    fds_[id - 1] = fd;
  }
}

void TcpMasterLinks::send_frame(int worker_id, const std::vector<std::uint8_t>& frame) {
  const int fd = fds_.at(static_cast<std::size_t>(worker_id) - 1);
  if (fd < 0) throw ProtocolError(ProtocolErrc::PeerDisconnected, "worker never connected");
  write_all(fd, frame.data(), frame.size());
}

std::vector<std::uint8_t> TcpMasterLinks::recv_frame(int worker_id) {
  const int fd = fds_.at(static_cast<std::size_t>(worker_id) - 1);
  if (fd < 0) throw ProtocolError(ProtocolErrc::PeerDisconnected, "worker never connected");
  return read_frame(fd);
}

TcpWorkerLink::TcpWorkerLink(const std::string& host, int port, int worker_id) {
  AddrInfo holder;
  addrinfo* ai = resolve(host, port, false, holder);
  fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
  if (fd_ < 0) throw_errno("socket");
  if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) != 0) {
    throw_errno("connect " + host + ":" + std::to_string(port));
  }
  set_nodelay(fd_);
  send(Message::hello(static_cast<std::uint32_t>(worker_id)));
}

TcpWorkerLink::~TcpWorkerLink() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpWorkerLink::send_frame(const std::vector<std::uint8_t>& frame) {
  write_all(fd_, frame.data(), frame.size());
}

std::vector<std::uint8_t> TcpWorkerLink::recv_frame() { return read_frame(fd_); }

}  // namespace scope
