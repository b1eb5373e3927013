/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The beaconpark Authors */

#include <gtest/gtest.h>

#include <beaconpark/line_server.hpp>

#include <arpa/inet.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <thread>

using namespace beaconpark;
using namespace beaconpark::parking;

namespace {

LotConfig make_lot(std::size_t spots) {
  LotConfig lot;
  for (std::size_t i = 1; i <= spots; ++i) {
    SpotId id('A', i);
    BeaconUid uid;
    uid.namespace_id[9] = 0x01;
    uid.instance = eddystone::instance_for_spot(id);
    lot.spots.push_back({id, uid, "https://lot.io/" + id.str(), 200});
  }
  return lot;
}

const Timestamp t0{std::chrono::seconds(1'000'000)};

class Client {
public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw std::runtime_error("connect failed");
    }
  }
  ~Client() { ::close(fd_); }

  std::string ask(const std::string& line) {
    const std::string out = line + "\n";
    ::send(fd_, out.data(), out.size(), MSG_NOSIGNAL);
    std::string reply;
    char c;
    while (::recv(fd_, &c, 1, 0) == 1 && c != '\n') reply += c;
    return reply;
  }

private:
  int fd_ = -1;
};

} // namespace

TEST(Protocol, ListOnFreshLot) {
  StubPayment pay;
  ParkingService svc(make_lot(5), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  EXPECT_EQ(cmd.handle("LIST"),
            "OK A1:available:200;A2:available:200;A3:available:200;A4:available:200;A5:available:200");
}

TEST(Protocol, ScriptedSessionWithSimulatedClock) {
  StubPayment pay;
  ParkingService svc(make_lot(2), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  EXPECT_EQ(cmd.handle("REGISTER A1 alice ABC123 tok"), "OK 1");
  EXPECT_EQ(cmd.handle("STATUS A1"), "OK occupied 200");
  EXPECT_EQ(cmd.handle("REGISTER A1 bob XYZ tok2").rfind("ERR TAKEN", 0), 0u);
  EXPECT_EQ(cmd.handle("TICK 5400"), "OK " + std::to_string(t0.time_since_epoch().count() + 5400));
  EXPECT_EQ(cmd.handle("UNREGISTER A1"), "OK 300");
  EXPECT_EQ(cmd.handle("UNREGISTER A1").rfind("ERR NOTREG", 0), 0u);
}

TEST(Protocol, ErrorCodes) {
  StubPayment pay;
  ParkingService svc(make_lot(2), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  EXPECT_EQ(cmd.handle("REGISTER A1 dan P1 DECLINE").rfind("ERR CARD", 0), 0u);
  EXPECT_EQ(cmd.handle("STATUS Z9").rfind("ERR NOSPOT", 0), 0u);
  EXPECT_EQ(cmd.handle("STATUS a1").rfind("ERR SYNTAX", 0), 0u);
  EXPECT_EQ(cmd.handle("").rfind("ERR SYNTAX", 0), 0u);
  EXPECT_EQ(cmd.handle("FLY A1").rfind("ERR SYNTAX", 0), 0u);
  EXPECT_EQ(cmd.handle("REGISTER A1 u p t soon").rfind("ERR SYNTAX", 0), 0u);
  EXPECT_EQ(cmd.handle("SETTLE A1").rfind("ERR NOTILLEGAL", 0), 0u);
  EXPECT_EQ(cmd.handle("RESOLVE zz").rfind("ERR FRAME", 0), 0u);
  EXPECT_EQ(cmd.handle("RESOLVE 30").rfind("ERR FRAME", 0), 0u);
}

TEST(Protocol, ChargeFailureThenSettle) {
  StubPayment pay;
  ParkingService svc(make_lot(2), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  EXPECT_EQ(cmd.handle("REGISTER A2 carol P9 NOFUNDS"), "OK 1");
  cmd.handle("TICK 600");
  EXPECT_EQ(cmd.handle("UNREGISTER A2"), "ERR CHARGE 34");
  EXPECT_EQ(cmd.handle("STATUS A2"), "OK illegal 200");
  EXPECT_EQ(cmd.handle("SETTLE A2"), "OK");
  EXPECT_EQ(cmd.handle("STATUS A2"), "OK available 200");
}

TEST(Protocol, OverstayExpiresBeforeNextCommand) {
  StubPayment pay;
  ParkingService svc(make_lot(1), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  cmd.handle("REGISTER A1 alice P1 tok 60");
  clock.advance(std::chrono::minutes(61));
  EXPECT_EQ(cmd.handle("STATUS A1"), "OK available 200");
  EXPECT_EQ(pay.charges.back().second, 200);
}

TEST(Protocol, ResolveUidAndUrlFrames) {
  StubPayment pay;
  ParkingService svc(make_lot(3), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  eddystone::UidFrame uid;
  uid.namespace_id[9] = 0x01;
  uid.instance = eddystone::instance_for_spot(SpotId('A', 2));
  EXPECT_EQ(cmd.handle("RESOLVE " + eddystone::to_hex(eddystone::encode_frame(uid))), "OK A2 https://lot.io/A2");
  auto enc = eddystone::encode_url("https://lot.io/A3");
  eddystone::UrlFrame url{enc.scheme_prefix, enc.body, 0};
  EXPECT_EQ(cmd.handle("RESOLVE " + eddystone::to_hex(eddystone::encode_frame(url))), "OK A3 https://lot.io/A3");
  uid.namespace_id[9] = 0x02;
  EXPECT_EQ(cmd.handle("RESOLVE " + eddystone::to_hex(eddystone::encode_frame(uid))).rfind("ERR UNKNOWN", 0), 0u);
}

TEST(Protocol, WallClockRejectsTick) {
  StubPayment pay;
  ParkingService svc(make_lot(1), pay);
  SystemTime clock;
  CommandProcessor cmd(svc, clock);
  EXPECT_EQ(cmd.handle("TICK 10").rfind("ERR UNSUPPORTED", 0), 0u);
}

TEST(Server, TcpRoundTrip) {
  StubPayment pay;
  ParkingService svc(make_lot(2), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  LineServer server(cmd, "127.0.0.1:0");
  std::thread loop([&] { server.run(); });
  {
    Client c(server.port());
    EXPECT_EQ(c.ask("LIST"), "OK A1:available:200;A2:available:200");
    EXPECT_EQ(c.ask("REGISTER A2 alice P1 tok\r"), "OK 1");
    EXPECT_EQ(c.ask("STATUS A2"), "OK occupied 200");
  }
  server.stop();
  loop.join();
}

TEST(Server, ConcurrentDuplicateRegisterHasOneWinner) {
  StubPayment pay;
  ParkingService svc(make_lot(1), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  LineServer server(cmd, "localhost:0");
  std::thread loop([&] { server.run(); });

  constexpr int clients = 8;
  std::atomic<int> ok{0}, taken{0};
  std::atomic<bool> go{false};
  std::vector<std::thread> threads;
  for (int i = 0; i < clients; ++i) {
    threads.emplace_back([&, i] {
      Client c(server.port());
      while (!go) std::this_thread::yield();
      auto reply = c.ask("REGISTER A1 user" + std::to_string(i) + " P tok");
      if (reply.rfind("OK", 0) == 0) ++ok;
      if (reply.rfind("ERR TAKEN", 0) == 0) ++taken;
    });
  }
  go = true;
  for (auto& t : threads) t.join();
  server.stop();
  loop.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(taken.load(), clients - 1);
}

TEST(Server, BadBindAddress) {
  StubPayment pay;
  ParkingService svc(make_lot(1), pay);
  SimulatedTime clock(t0);
  CommandProcessor cmd(svc, clock);
  EXPECT_THROW(LineServer(cmd, "nohostport"), std::invalid_argument);
  EXPECT_THROW(LineServer(cmd, "1.2.3:80"), std::invalid_argument);
  EXPECT_THROW(LineServer(cmd, "127.0.0.1:99999"), std::invalid_argument);
}
