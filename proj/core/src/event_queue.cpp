#include "ivnsim/event_queue.hpp"

#include <string>

namespace ivn {

EventHandle EventQueue::schedule(SimTime t, TieClass cls, std::uint32_t target,
                                 std::function<void()> action) {
  if (t < now_) {
    throw SimError(ErrorCode::PastEvent,
                   "schedule at " + t.to_string() + " before current time " + now_.to_string());
  }
  const std::uint64_t seq = next_seq_++;
  heap_.push(Entry{t, cls, seq, target, std::move(action)});
  ++live_;
  return seq;
}

bool EventQueue::cancel(EventHandle h) {
  if (h == 0 || h >= next_seq_) return false;
  if (!cancelled_.insert(h).second) return false;
  if (live_ > 0) --live_;
  return true;
}

std::optional<Event> EventQueue::pop_next() {
  while (!heap_.empty()) {
    Entry e = heap_.top();
    heap_.pop();
    if (auto it = cancelled_.find(e.seq); it != cancelled_.end()) {
      cancelled_.erase(it);
      continue;
    }
    --live_;
    now_ = e.t;
    Event ev{e.t, e.cls, e.seq, e.target, std::move(e.action)};
    if (trace_) trace_(ev);
    return ev;
  }
  return std::nullopt;
}

RunSummary EventQueue::run_until(SimTime t_end,
                                 const std::function<DispatchSignal(const Event&)>& dispatch) {
  RunSummary summary;
  stop_requested_ = false;
  while (!heap_.empty()) {
    // Peek past tombstones without consuming a live event beyond t_end.
    const Entry* top = &heap_.top();
    if (cancelled_.count(top->seq)) {
      cancelled_.erase(top->seq);
      heap_.pop();
      continue;
    }
    if (top->t > t_end) break;
    auto ev = pop_next();
    ++summary.processed;
    DispatchSignal sig;
    try {
      sig = dispatch(*ev);
    } catch (const std::exception& ex) {
      throw SimError(ErrorCode::DispatchFailure,
                     "event seq=" + std::to_string(ev->seq) + " target=" +
                         std::to_string(ev->target) + " at " + ev->fire_time.to_string() +
                         ": " + ex.what());
    }
    if (sig == DispatchSignal::Stop || stop_requested_) {
      summary.stopped_early = true;
      summary.final_time = now_;
      return summary;
    }
  }
  now_ = t_end > now_ ? t_end : now_;
  summary.final_time = now_;
  return summary;
}

RunSummary EventQueue::run_until(SimTime t_end) {
  return run_until(t_end, [](const Event& ev) {
    if (ev.action) ev.action();
    return DispatchSignal::Continue;
  });
}

std::string SimTime::to_string() const {
  // Render with the largest unit that divides exactly; keeps logs readable
  // without losing precision.
  const std::int64_t t = ticks_;
  auto abs = t < 0 ? -t : t;
  if (abs % 1'000'000'000'000 == 0) return std::to_string(t / 1'000'000'000'000) + "s";
  if (abs % 1'000'000'000 == 0) return std::to_string(t / 1'000'000'000) + "ms";
  if (abs % 1'000'000 == 0) return std::to_string(t / 1'000'000) + "us";
  if (abs % 1'000 == 0) return std::to_string(t / 1'000) + "ns";
  return std::to_string(t) + "ps";
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::PastEvent: return "PastEvent";
    case ErrorCode::DispatchFailure: return "DispatchFailure";
    case ErrorCode::TtBufferOverrun: return "TtBufferOverrun";
    case ErrorCode::QueueOverflow: return "QueueOverflow";
    case ErrorCode::UnknownCtId: return "UnknownCtId";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NotAMember: return "NotAMember";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::IncompleteTrail: return "IncompleteTrail";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::LcmOverflow: return "LcmOverflow";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace ivn
