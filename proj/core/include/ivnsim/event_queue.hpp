#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "ivnsim/error.hpp"
#include "ivnsim/sim_time.hpp"

namespace ivn {

/// Fixed dispatch order for events firing at the same instant. Lower values
/// fire first. The choice is a convention of this simulator (recorded in run
/// metadata): clock corrections happen before TDMA dispatch, arrivals are
/// enqueued before ports pick the next frame, and statistics sample last.
enum class TieClass : std::uint8_t {
  ClockSync = 0,
  TtDispatch = 1,
  Arrival = 2,
  Service = 3,
  Sampling = 4,
  Generic = 5,
};

struct Event {
  SimTime fire_time;
  TieClass tie_class = TieClass::Generic;
  std::uint64_t seq = 0;    // insertion order, breaks remaining ties
  std::uint32_t target = 0; // component identifier, 0 = engine
  std::function<void()> action;
};

using EventHandle = std::uint64_t;

struct RunSummary {
  std::uint64_t processed = 0;
  SimTime final_time;
  bool stopped_early = false;
};

enum class DispatchSignal { Continue, Stop };

/// Deterministic discrete-event queue. Pop order is the strict total order
/// (fire_time, tie_class, seq); identical schedules yield identical pop
/// sequences. Cancellation is by handle (lazy tombstones), since shaper
/// timers are frequently superseded.
class EventQueue {
 public:
  EventQueue() = default;

  /// Throws SimError(PastEvent) if t < now().
  EventHandle schedule(SimTime t, TieClass cls, std::uint32_t target,
                       std::function<void()> action);
  EventHandle schedule(SimTime t, TieClass cls, std::function<void()> action) {
    return schedule(t, cls, 0, std::move(action));
  }

  /// Returns false if the handle already fired or was cancelled before.
  bool cancel(EventHandle h);

  /// Minimum event under the total order; advances now() to its fire time.
  /// Empty result iff the queue holds no live event (now() unchanged then).
  std::optional<Event> pop_next();

  /// Processes all events with fire_time <= t_end in order, feeding each to
  /// `dispatch`. Stops early when dispatch returns Stop or request_stop()
  /// was called from inside an action. Dispatch failures are rethrown as
  /// SimError(DispatchFailure) identifying the offending event.
  RunSummary run_until(SimTime t_end,
                       const std::function<DispatchSignal(const Event&)>& dispatch);

  /// Convenience loop: every event just runs its action.
  RunSummary run_until(SimTime t_end);

  void request_stop() { stop_requested_ = true; }

  SimTime now() const { return now_; }
  std::size_t pending() const { return live_; }

  /// Test hook: receives every popped event during run_until/pop_next.
  void set_trace(std::function<void(const Event&)> sink) { trace_ = std::move(sink); }

 private:
  struct Entry {
    SimTime t;
    TieClass cls;
    std::uint64_t seq;
    std::uint32_t target;
    std::function<void()> action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.t != b.t) return a.t > b.t;
      if (a.cls != b.cls) return a.cls > b.cls;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::unordered_set<std::uint64_t> cancelled_;
  std::uint64_t next_seq_ = 1;
  std::size_t live_ = 0;
  SimTime now_;
  bool stop_requested_ = false;
  std::function<void(const Event&)> trace_;
};

}  // namespace ivn
