#include "ivnsim/tt_schedule.hpp"

#include <algorithm>
#include <string>

namespace ivn {

namespace {

struct Window {
  std::int64_t start;
  std::int64_t end;
};

std::vector<Window> port_windows(const TtSchedule& schedule, PortKey port) {
  // start may be negative when the lead reaches before the cycle origin;
  // the overlap tests below compare against all adjacent cycle images.
  std::vector<Window> windows;
  for (const auto& a : schedule.actions) {
    if (a.egress == port) {
      windows.push_back({(a.offset - a.lead).ticks(), (a.offset + a.reserved).ticks()});
    }
  }
  std::sort(windows.begin(), windows.end(),
            [](const Window& a, const Window& b) { return a.start < b.start; });
  return windows;
}

}  // namespace

SimTime tt_next_dispatch(const TtSchedule& schedule, PortKey port, std::uint32_t ct_id,
                         SimTime local_now) {
  bool found = false;
  std::int64_t best = 0;
  const std::int64_t cycle = schedule.cycle.ticks();
  const std::int64_t now = local_now.ticks();
  for (const auto& a : schedule.actions) {
    if (!(a.egress == port && a.ct_id == ct_id)) continue;
    const std::int64_t offset = a.offset.ticks();
    std::int64_t t = offset;
    if (now > offset) {
      const std::int64_t k = (now - offset + cycle - 1) / cycle;
      t = offset + k * cycle;
    }
    if (!found || t < best) best = t;
    found = true;
  }
  if (!found) {
    throw SimError(ErrorCode::UnknownCtId, "ct " + std::to_string(ct_id) + " has no action");
  }
  return SimTime::ps(best);
}

bool guard_admit(const TtSchedule& schedule, PortKey port, SimTime now, SimTime tx_duration) {
  const auto windows = port_windows(schedule, port);
  if (windows.empty()) return true;
  const std::int64_t cycle = schedule.cycle.ticks();
  const std::int64_t d = tx_duration.ticks();
  if (d >= cycle) return false;  // cannot fit between windows of any cycle
  const std::int64_t p = ((now.ticks() % cycle) + cycle) % cycle;
  for (const auto& w : windows) {
    // the candidate interval [p, p+d) against the window's cycle images
    for (std::int64_t k = -1; k <= 1; ++k) {
      if (p < w.end + k * cycle && w.start + k * cycle < p + d) return false;
    }
  }
  return true;
}

SimTime guard_next_admit(const TtSchedule& schedule, PortKey port, SimTime now,
                         SimTime tx_duration) {
  if (guard_admit(schedule, port, now, tx_duration)) return now;
  const auto windows = port_windows(schedule, port);
  const std::int64_t cycle = schedule.cycle.ticks();
  const std::int64_t p = ((now.ticks() % cycle) + cycle) % cycle;
  // Candidate start instants: ends of reserved windows after the current phase,
  // over the adjacent cycle images.
  std::vector<std::int64_t> candidates;
  for (const auto& w : windows) {
    for (int k = -1; k <= 2; ++k) {
      const std::int64_t e = w.end + k * cycle;
      if (e > p) candidates.push_back(e);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  for (std::int64_t c : candidates) {
    const SimTime t = now + SimTime::ps(c - p);
    if (guard_admit(schedule, port, t, tx_duration)) return t;
  }
  throw SimError(ErrorCode::Infeasible,
                 "no gap of " + tx_duration.to_string() + " in the port schedule");
}

}  // namespace ivn
