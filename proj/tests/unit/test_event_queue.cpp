#include <algorithm>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ivnsim/event_queue.hpp"
#include "ivnsim/rng.hpp"

using namespace ivn;
using namespace ivn::time_literals;

TEST_CASE("equal fire times pop in insertion order") {
  EventQueue q;
  std::vector<int> order;
  q.schedule(5_ps, TieClass::Generic, [&] { order.push_back(5); });
  q.schedule(3_ps, TieClass::Generic, [&] { order.push_back(31); });
  q.schedule(3_ps, TieClass::Generic, [&] { order.push_back(32); });
  q.run_until(10_ps);
  CHECK(order == std::vector<int>{31, 32, 5});
}

TEST_CASE("scheduling at current time pops before later events") {
  EventQueue q;
  std::vector<int> order;
  q.schedule(4_ps, TieClass::Generic, [&] {
    order.push_back(1);
    q.schedule(q.now(), TieClass::Generic, [&] { order.push_back(2); });
  });
  q.schedule(5_ps, TieClass::Generic, [&] { order.push_back(3); });
  q.run_until(10_ps);
  CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("scheduling in the past is rejected") {
  EventQueue q;
  q.schedule(3_ps, TieClass::Generic, [] {});
  q.run_until(3_ps);
  CHECK_THROWS_AS(q.schedule(2_ps, TieClass::Generic, [] {}), SimError);
  try {
    q.schedule(2_ps, TieClass::Generic, [] {});
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::PastEvent);
  }
}

TEST_CASE("empty queue pop returns nothing and keeps time") {
  EventQueue q;
  CHECK_FALSE(q.pop_next().has_value());
  CHECK(q.now() == SimTime::zero());
}

TEST_CASE("tie class breaks ties before sequence") {
  EventQueue q;
  std::vector<int> order;
  q.schedule(7_ps, TieClass::Service, [&] { order.push_back(1); });
  q.schedule(7_ps, TieClass::TtDispatch, [&] { order.push_back(0); });
  q.run_until(10_ps);
  CHECK(order == std::vector<int>{0, 1});
}

TEST_CASE("cancelled handle never pops") {
  EventQueue q;
  std::vector<int> order;
  q.schedule(1_ps, TieClass::Generic, [&] { order.push_back(1); });
  const EventHandle h = q.schedule(2_ps, TieClass::Generic, [&] { order.push_back(2); });
  q.schedule(3_ps, TieClass::Generic, [&] { order.push_back(3); });
  CHECK(q.cancel(h));
  CHECK_FALSE(q.cancel(h));  // second cancel is a no-op
  q.run_until(10_ps);
  CHECK(order == std::vector<int>{1, 3});
}

TEST_CASE("run_until with no events reaches t_end") {
  EventQueue q;
  const auto summary = q.run_until(SimTime::ps(1'000'000'000));
  CHECK(summary.processed == 0);
  CHECK(summary.final_time == SimTime::ps(1'000'000'000));
  CHECK_FALSE(summary.stopped_early);
}

TEST_CASE("events after t_end stay pending") {
  EventQueue q;
  int fired = 0;
  q.schedule(1_ps, TieClass::Generic, [&] { ++fired; });
  q.schedule(2_ps, TieClass::Generic, [&] { ++fired; });
  q.schedule(3_ps, TieClass::Generic, [&] { ++fired; });
  q.schedule(10_ps, TieClass::Generic, [&] { ++fired; });
  const auto summary = q.run_until(5_ps);
  CHECK(summary.processed == 3);
  CHECK(fired == 3);
  CHECK(q.pending() == 1);
}

TEST_CASE("dispatch stop signal ends the run early") {
  EventQueue q;
  for (int i = 0; i < 5; ++i) {
    q.schedule(SimTime::ps(i + 1), TieClass::Generic, [] {});
  }
  int n = 0;
  const auto summary = q.run_until(10_ps, [&](const Event&) {
    ++n;
    return n == 2 ? DispatchSignal::Stop : DispatchSignal::Continue;
  });
  CHECK(summary.processed == 2);
  CHECK(summary.stopped_early);
  CHECK(q.pending() == 3);
}

TEST_CASE("request_stop from inside an action ends the run early") {
  EventQueue q;
  int fired = 0;
  q.schedule(1_ps, TieClass::Generic, [&] { ++fired; });
  q.schedule(2_ps, TieClass::Generic, [&] {
    ++fired;
    q.request_stop();
  });
  q.schedule(3_ps, TieClass::Generic, [&] { ++fired; });
  const auto summary = q.run_until(10_ps);
  CHECK(summary.stopped_early);
  CHECK(fired == 2);
}

TEST_CASE("dispatch failures identify the offending event") {
  EventQueue q;
  q.schedule(1_ps, TieClass::Generic, 42, [] { throw std::runtime_error("boom"); });
  try {
    q.run_until(10_ps);
    FAIL("expected SimError");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::DispatchFailure);
    CHECK(std::string(e.what()).find("target=42") != std::string::npos);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
}

// Brute-force oracle: pop order must equal a stable sort by
// (fire_time, tie_class, seq) for any randomized insertion pattern.
TEST_CASE("pop order matches the sort oracle on random insertions") {
  Rng rng(0xbeefULL ^ 12345);
  for (int round = 0; round < 20; ++round) {
    EventQueue q;
    struct Key {
      std::int64_t t;
      int cls;
      std::uint64_t seq;
    };
    std::vector<Key> inserted;
    std::vector<std::uint64_t> popped;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
      const std::int64_t t = rng.uniform_i64(0, 50);
      const int cls = static_cast<int>(rng.uniform_i64(0, 5));
      const auto h = q.schedule(SimTime::ps(t), static_cast<TieClass>(cls),
                                [&popped, i] { popped.push_back(static_cast<std::uint64_t>(i)); });
      inserted.push_back({t, cls, h});
      (void)h;
    }
    std::vector<std::size_t> expect(inserted.size());
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = i;
    std::stable_sort(expect.begin(), expect.end(), [&](std::size_t a, std::size_t b) {
      if (inserted[a].t != inserted[b].t) return inserted[a].t < inserted[b].t;
      if (inserted[a].cls != inserted[b].cls) return inserted[a].cls < inserted[b].cls;
      return inserted[a].seq < inserted[b].seq;
    });
    q.run_until(100_ps);
    REQUIRE(popped.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(popped[i] == expect[i]);
  }
}

TEST_CASE("identical schedules give identical event logs") {
  auto run_once = [] {
    EventQueue q;
    std::ostringstream log;
    q.set_trace([&](const Event& ev) {
      log << ev.fire_time.ticks() << '/' << int(ev.tie_class) << '/' << ev.seq << '\n';
    });
    Rng rng(777);
    for (int i = 0; i < 500; ++i) {
      q.schedule(SimTime::ps(rng.uniform_i64(0, 100)),
                 static_cast<TieClass>(rng.uniform_i64(0, 5)), [] {});
    }
    q.run_until(200_ps);
    return log.str();
  };
  CHECK(run_once() == run_once());
}
