#include "doctest.h"
#include "ivnsim/gateway.hpp"
#include "ivnsim/rng.hpp"

using namespace ivn;
using namespace ivn::time_literals;

TEST_CASE("routing fans out zero, one or several destinations") {
  RoutingTable table;
  table.add({0, 37}, {1, 0});
  table.add({0, 40}, {1, 1});
  table.add({0, 40}, {2, 1});
  CHECK(table.route({0, 99}).empty());  // no entry: dropped by the caller
  CHECK(table.route({0, 37}).size() == 1);
  const auto& two = table.route({0, 40});
  REQUIRE(two.size() == 2);
  CHECK(two[0].segment == 1);
  CHECK(two[1].segment == 2);
}

TEST_CASE("pool deadline follows the shortest holdup") {
  Pool pool("p1", {0, 1, 2});
  CanFrame f;
  SUBCASE("first frame sets the deadline") {
    pool.admit(0, f, 0_ms, 10_ms);
    CHECK(pool.deadline() == 10_ms);
  }
  SUBCASE("a shorter holdup pulls the deadline in") {
    pool.admit(0, f, 0_ms, 10_ms);
    pool.admit(1, f, 5_ms, 2_ms);
    CHECK(pool.deadline() == 7_ms);
  }
  SUBCASE("a longer holdup never pushes it out") {
    pool.admit(0, f, 0_ms, 10_ms);
    pool.admit(1, f, 5_ms, 2_ms);
    pool.admit(2, f, 6_ms, 20_ms);
    CHECK(pool.deadline() == 7_ms);
  }
}

TEST_CASE("admitting a non-member is an error") {
  Pool pool("p1", {0});
  CanFrame f;
  CHECK_THROWS_AS(pool.admit(5, f, 0_ms, 1_ms), SimError);
}

TEST_CASE("flush releases everything in arrival order and resets the pool") {
  Pool pool("p1", {0});
  CanFrame a;
  a.id = 1;
  a.dlc = 6;
  CanFrame b;
  b.id = 2;
  b.dlc = 8;
  pool.admit(0, a, 0_ms, 10_ms);
  pool.admit(0, b, 1_ms, 10_ms);
  auto result = pool.flush(10_ms);
  REQUIRE(result.frames.size() == 2);
  CHECK(result.frames[0].id == 1);
  CHECK(result.frames[1].id == 2);
  CHECK(pool.pending_empty());
  CHECK_FALSE(pool.deadline().has_value());
  // payload: count + (5+6) + (5+8)
  CHECK(result.payload.size() == 1 + 11 + 13);
}

TEST_CASE("encapsulation payload sizes match the layout arithmetic") {
  CanFrame f6;
  f6.dlc = 6;
  CHECK(encapsulate({f6}).size() == 12);  // padded to 46 on the wire later
  CanFrame f8;
  f8.dlc = 8;
  CHECK(encapsulate({f8, f8}).size() == 27);
  CHECK(encapsulate({f8, f8, f8, f8}).size() == 53);  // exceeds 46, no padding needed
}

TEST_CASE("encapsulation byte layout is exact") {
  CanFrame f;
  f.id = 0x37;
  f.dlc = 6;
  for (int i = 0; i < 6; ++i) f.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i + 1);
  const auto bytes = encapsulate({f});
  const std::vector<std::uint8_t> expect = {0x01, 0x00, 0x00, 0x00, 0x37,
                                            0x06, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06};
  CHECK(bytes == expect);
}

TEST_CASE("decapsulation rejects truncated payloads") {
  CanFrame f;
  f.id = 0x37;
  f.dlc = 6;
  auto bytes = encapsulate({f});
  bytes.resize(bytes.size() - 2);
  CHECK_THROWS_AS(decapsulate(bytes), SimError);
  CHECK_THROWS_AS(decapsulate({}), SimError);
  // declared count larger than the content
  std::vector<std::uint8_t> short_count = {2, 0, 0, 0, 1, 0};
  CHECK_THROWS_AS(decapsulate(short_count), SimError);
}

TEST_CASE("decapsulation ignores padding beyond the declared entries") {
  CanFrame f;
  f.id = 0x100;
  f.dlc = 2;
  f.data[0] = 0xAB;
  f.data[1] = 0xCD;
  auto bytes = encapsulate({f});
  bytes.resize(46, 0);  // wire padding
  const auto frames = decapsulate(bytes);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].id == 0x100);
  CHECK(frames[0].data[0] == 0xAB);
}

TEST_CASE("encapsulate then decapsulate is the identity on random lists") {
  Rng rng(314);
  for (int round = 0; round < 300; ++round) {
    std::vector<CanFrame> frames;
    const int n = static_cast<int>(rng.uniform_i64(1, 20));
    for (int i = 0; i < n; ++i) {
      CanFrame f;
      f.id = static_cast<std::uint16_t>(rng.uniform_i64(0, 2047));
      f.dlc = static_cast<std::uint8_t>(rng.uniform_i64(0, 8));
      for (int b = 0; b < f.dlc; ++b) {
        f.data[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(rng.uniform_i64(0, 255));
      }
      frames.push_back(f);
    }
    const auto back = decapsulate(encapsulate(frames));
    REQUIRE(back.size() == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      CHECK(back[i].id == frames[i].id);
      CHECK(back[i].dlc == frames[i].dlc);
      for (int b = 0; b < frames[i].dlc; ++b) {
        CHECK(back[i].data[static_cast<std::size_t>(b)] == frames[i].data[static_cast<std::size_t>(b)]);
      }
    }
  }
}
