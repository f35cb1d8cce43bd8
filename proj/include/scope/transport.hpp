#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "scope/protocol.hpp"

namespace scope {

// Master side of p point-to-point links, addressed by worker id (1..p).
// Encoding, decoding, and traffic accounting live here so every transport
// counts identically: payload messages only, encoded frame bytes, both
// directions as seen from the master.
class MasterLinks {
 public:
  virtual ~MasterLinks() = default;

  virtual int worker_count() const = 0;

  void send(int worker_id, const Message& m);
  Message recv(int worker_id);

  CommStats& stats() { return stats_; }
  const CommStats& stats() const { return stats_; }

 protected:
  virtual void send_frame(int worker_id, const std::vector<std::uint8_t>& frame) = 0;
  virtual std::vector<std::uint8_t> recv_frame(int worker_id) = 0;

 private:
  CommStats stats_;
};

// One worker's end of its link to the master.
class WorkerLink {
 public:
  virtual ~WorkerLink() = default;

  void send(const Message& m);
  Message recv();

  CommStats& stats() { return stats_; }

 protected:
  virtual void send_frame(const std::vector<std::uint8_t>& frame) = 0;
  virtual std::vector<std::uint8_t> recv_frame() = 0;

 private:
  CommStats stats_;
};

// Shared-memory transport: per-direction frame queues. Frames are fully
// encoded and decoded on the way through, so the bytes on this transport are
// exactly the bytes TCP would carry.
class InProcHub {
 public:
  struct Impl;

  explicit InProcHub(int p);
  ~InProcHub();

  InProcHub(const InProcHub&) = delete;
  InProcHub& operator=(const InProcHub&) = delete;

  MasterLinks& master_links();
  WorkerLink& worker_link(int worker_id);

  // Marks a worker's outgoing queue closed; a blocked master recv on that
  // queue fails with PeerDisconnected instead of hanging.
  void close_worker(int worker_id);

 private:
  std::unique_ptr<Impl> impl_;
};

// TCP master endpoint. Binds immediately (port 0 picks a free port); workers
// are attached by accept_workers(), which pairs each connection with the
// worker id announced in its Hello frame.
class TcpMasterLinks : public MasterLinks {
 public:
  TcpMasterLinks(const std::string& bind_addr, int p);  // "host:port"
  ~TcpMasterLinks() override;

  int worker_count() const override { return p_; }
  int port() const { return port_; }
  void accept_workers();

 protected:
  void send_frame(int worker_id, const std::vector<std::uint8_t>& frame) override;
  std::vector<std::uint8_t> recv_frame(int worker_id) override;

 private:
  int p_;
  int port_ = 0;
  int listen_fd_ = -1;
  std::vector<int> fds_;
};

// TCP worker endpoint; connects and sends Hello in the constructor.
class TcpWorkerLink : public WorkerLink {
 public:
  TcpWorkerLink(const std::string& host, int port, int worker_id);
  ~TcpWorkerLink() override;

 protected:
  void send_frame(const std::vector<std::uint8_t>& frame) override;
  std::vector<std::uint8_t> recv_frame() override;

 private:
  int fd_ = -1;
};

// Splits "host:port"; throws ConfigError on malformed input.
void split_host_port(const std::string& addr, std::string& host, int& port);

}  // namespace scope
