#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "scope/errors.hpp"
#include "scope/transport.hpp"

using namespace scope;

TEST_CASE("in-process links deliver messages unchanged in both directions") {
  InProcHub hub(2);
  const Message down = Message::params(7, {1.5, -0.0, 5e-324});
  hub.master_links().send(2, down);
  CHECK(hub.worker_link(2).recv() == down);

  const Message up = Message::local_grad_sum(7, 2, {1e308, -1e308});
  hub.worker_link(2).send(up);
  CHECK(hub.master_links().recv(2) == up);
}

TEST_CASE("in-process links preserve per-peer FIFO order") {
  InProcHub hub(1);
  for (std::uint32_t r = 0; r < 50; ++r) {
    hub.master_links().send(1, Message::params(r, {static_cast<double>(r)}));
  }
  for (std::uint32_t r = 0; r < 50; ++r) {
    const Message m = hub.worker_link(1).recv();
    CHECK(m.round == r);
  }
}

TEST_CASE("interleaved sends from several workers keep their attribution") {
  const int p = 4;
  InProcHub hub(p);
  std::vector<std::thread> threads;
  for (int k = p; k >= 1; --k) {  // deliberately starts in reverse id order
    threads.emplace_back([&hub, k] {
      hub.worker_link(k).send(
          Message::local_update(0, static_cast<std::uint32_t>(k), {k * 1.0, k * 2.0}));
    });
  }
  for (std::thread& t : threads) t.join();
  for (int k = 1; k <= p; ++k) {
    const Message m = hub.master_links().recv(k);
    CHECK(m.worker_id == static_cast<std::uint32_t>(k));
    CHECK(m.vec[0] == k * 1.0);
  }
}

TEST_CASE("a closed worker queue surfaces as PeerDisconnected") {
  InProcHub hub(1);
  hub.close_worker(1);
  try {
    hub.master_links().recv(1);
    FAIL("expected PeerDisconnected");
  } catch (const ProtocolError& e) {
    CHECK(e.code == ProtocolErrc::PeerDisconnected);
  }
}

TEST_CASE("counters track payload messages only, with full frame bytes") {
  InProcHub hub(1);
  MasterLinks& master = hub.master_links();
  master.send(1, Message::params(0, {1.0, 2.0}));  // 27-byte frame
  master.send(1, Message::shutdown());             // not payload
  hub.worker_link(1).send(Message::hello(1));      // not payload
  hub.worker_link(1).send(Message::local_update(0, 1, {3.0}));
  (void)hub.worker_link(1).recv();  // params
  (void)hub.worker_link(1).recv();  // shutdown
  (void)master.recv(1);             // hello
  (void)master.recv(1);             // local update
  CHECK(master.stats().messages_sent == 1);
  CHECK(master.stats().messages_received == 1);
  // params frame 27 bytes + local update frame (2+1+4+4+4+8 = 23) + 4 prefix.
  CHECK(master.stats().payload_bytes == 27 + 4 + 23 + 4);

  CommStats& wstats = hub.worker_link(1).stats();
  CHECK(wstats.messages_sent == 1);
  CHECK(wstats.messages_received == 1);
}

TEST_CASE("tcp loopback delivers bit-exact payloads") {
  TcpMasterLinks master("127.0.0.1:0", 2);
  REQUIRE(master.port() > 0);

  const Message to_w1 = Message::params(0, {5e-324, -0.0, 1e308});
  const Message to_w2 = Message::params(0, {2.0});
  std::vector<Message> got(3);
  std::thread w1([&] {
    TcpWorkerLink link("127.0.0.1", master.port(), 1);
    got[1] = link.recv();
    link.send(Message::local_grad_sum(0, 1, {3.14159, -2.5e-308}));
  });
  std::thread w2([&] {
    TcpWorkerLink link("127.0.0.1", master.port(), 2);
    got[2] = link.recv();
    link.send(Message::local_grad_sum(0, 2, {42.0}));
  });
  master.accept_workers();
  master.send(1, to_w1);
  master.send(2, to_w2);
  const Message up2 = master.recv(2);
  const Message up1 = master.recv(1);
  w1.join();
  w2.join();
  CHECK(got[1] == to_w1);
  CHECK(got[2] == to_w2);
  CHECK(up1 == Message::local_grad_sum(0, 1, {3.14159, -2.5e-308}));
  CHECK(up2 == Message::local_grad_sum(0, 2, {42.0}));
  CHECK(master.stats().messages_sent == 2);
  CHECK(master.stats().messages_received == 2);
}

TEST_CASE("tcp and in-process frames carry identical bytes") {
  const Message m = Message::full_grad(3, {1.0, 2.0, 3.0});
  InProcHub hub(1);
  hub.master_links().send(1, m);
  (void)hub.worker_link(1).recv();

  TcpMasterLinks master("127.0.0.1:0", 1);
  std::thread w([&] {
    TcpWorkerLink link("127.0.0.1", master.port(), 1);
    (void)link.recv();
  });
  master.accept_workers();
  master.send(1, m);
  w.join();
  CHECK(hub.master_links().stats().payload_bytes == master.stats().payload_bytes);
}

TEST_CASE("a worker hangup surfaces as PeerDisconnected over tcp") {
  TcpMasterLinks master("127.0.0.1:0", 1);
  std::thread w([&] { TcpWorkerLink link("127.0.0.1", master.port(), 1); });
  master.accept_workers();
  w.join();  // link destroyed: connection closed
  try {
    (void)master.recv(1);
    FAIL("expected PeerDisconnected");
  } catch (const ProtocolError& e) {
    CHECK(e.code == ProtocolErrc::PeerDisconnected);
  }
}

TEST_CASE("garbage on the wire surfaces as a decode error") {
  TcpMasterLinks master("127.0.0.1:0", 1);
  std::thread rogue([&] {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(master.port()));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    const auto hello = encode(Message::hello(1));
    REQUIRE(::send(fd, hello.data(), hello.size(), 0) == static_cast<ssize_t>(hello.size()));
    // A frame whose body claims 3 bytes but opens with the wrong magic.
    const std::uint8_t junk[] = {3, 0, 0, 0, 0xAA, 0xBB, 0xCC};
    REQUIRE(::send(fd, junk, sizeof(junk), 0) == static_cast<ssize_t>(sizeof(junk)));
    ::close(fd);
  });
  master.accept_workers();
  try {
    (void)master.recv(1);
    FAIL("expected BadMagic");
  } catch (const ProtocolError& e) {
    CHECK(e.code == ProtocolErrc::BadMagic);
  }
  rogue.join();
}

TEST_CASE("host:port parsing validates its input") {
  std::string host;
  int port = 0;
  split_host_port("127.0.0.1:8080", host, port);
  CHECK(host == "127.0.0.1");
  CHECK(port == 8080);
  CHECK_THROWS_AS(split_host_port("no-port-here", host, port), ConfigError);
  CHECK_THROWS_AS(split_host_port("h:99999", host, port), ConfigError);
  CHECK_THROWS_AS(split_host_port("h:abc", host, port), ConfigError);
}

TEST_CASE("out-of-range worker ids are rejected") {
  InProcHub hub(2);
  CHECK_THROWS(hub.worker_link(0));
  CHECK_THROWS(hub.worker_link(3));
  CHECK_THROWS(hub.master_links().send(3, Message::shutdown()));
}
