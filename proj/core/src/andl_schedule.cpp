#include <algorithm>
#include <map>
#include <numeric>

#include "ivnsim/andl.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/ethernet.hpp"

namespace ivn::andl {

namespace {

// Worst-case local clock error of any device against true time: the fresh
// sync offset plus the drift accumulated over one sync interval.
SimTime worst_clock_error(const NetworkModel& model) {
  SimTime worst;
  for (const auto& dev : model.devices) {
    const auto& c = dev.clock;
    const __int128 mag = c.drift_ppm_num < 0 ? -(__int128)c.drift_ppm_num : c.drift_ppm_num;
    const __int128 drift_ps =
        (mag * c.sync_interval.ticks() + (__int128)1'000'000 * c.drift_ppm_den - 1) /
        ((__int128)1'000'000 * c.drift_ppm_den);
    const SimTime err = c.sync_precision + SimTime::ps(static_cast<std::int64_t>(drift_ps));
    if (err > worst) worst = err;
  }
  return worst;
}

SimTime worst_tick(const NetworkModel& model) {
  SimTime worst = SimTime::ps(1);
  for (const auto& dev : model.devices) {
    if (dev.clock.tick_length > worst) worst = dev.clock.tick_length;
  }
  return worst;
}

struct Placement {
  std::vector<TtAction> actions;

  /// 0 when the guard interval [start-lead, start+len) is free on the port;
  /// otherwise the forward shift that moves it past the first blocking
  /// reservation.
  std::int64_t blocking_shift(PortKey port, std::int64_t start, std::int64_t len,
                              std::int64_t lead, std::int64_t cycle) const {
    std::int64_t shift = 0;
    for (const auto& a : actions) {
      if (!(a.egress == port)) continue;
      const std::int64_t s = (a.offset - a.lead).ticks();
      const std::int64_t e = (a.offset + a.reserved).ticks();
      // compare against cycle-shifted images
      for (std::int64_t k = -1; k <= 1; ++k) {
        const std::int64_t si = s + k * cycle;
        const std::int64_t ei = e + k * cycle;
        if (start - lead < ei && si < start + len) {
          shift = std::max(shift, ei + lead - start);
        }
      }
    }
    return shift;
  }
};

}  // namespace

TtSchedule generate_tt_schedule(const NetworkModel& model, const ScheduleOptions& opts) {
  TtSchedule schedule;

  // TT messages in declaration order with their periods
  struct TtMsg {
    std::uint32_t index;
    std::uint32_t ct_id;
    SimTime period;
  };
  std::vector<TtMsg> tt_msgs;
  for (std::uint32_t mi = 0; mi < model.messages.size(); ++mi) {
    const auto& msg = model.messages[mi];
    std::uint32_t ct = 0;
    for (const auto& [seg, sm] : msg.mapping_by_segment) {
      if (sm.kind == SegmentMapping::Kind::Tt) ct = sm.tt.ct_id;
    }
    if (ct == 0) continue;
    if (msg.period <= SimTime::zero()) {
      throw SimError(ErrorCode::Infeasible,
                     "TT message '" + msg.name + "' needs a period");
    }
    tt_msgs.push_back({mi, ct, msg.period});
  }
  if (tt_msgs.empty()) {
    schedule.cycle = SimTime::ms(1);
    return schedule;
  }

  // cycle = LCM of the TT periods, bounded by the configured cap
  std::int64_t cycle = 1;
  for (const auto& m : tt_msgs) {
    const std::int64_t p = m.period.ticks();
    const std::int64_t g = std::gcd(cycle, p);
    if (cycle / g > opts.cycle_cap.ticks() / p) {
      throw SimError(ErrorCode::LcmOverflow,
                     "TT cycle exceeds the cap of " + opts.cycle_cap.to_string());
    }
    cycle = cycle / g * p;
  }
  schedule.cycle = SimTime::ps(cycle);

  const SimTime clock_err = worst_clock_error(model);
  const SimTime margin = clock_err * 2 + worst_tick(model) + opts.extra_margin;
  // guard lead: a frame admitted right before a clock sync must still clear
  // the port when the dispatch fires, and the sync can move the window
  // earlier by up to twice the worst clock error
  const SimTime lead = clock_err * 2 + worst_tick(model) + opts.extra_margin * 3;

  Placement placed;
  for (const auto& tm : tt_msgs) {
    const auto& msg = model.messages[tm.index];
    const std::int64_t repetitions = cycle / tm.period.ticks();
    // chain hop offsets along every receiver route; ports shared between
    // routes keep their first placement
    std::map<std::uint32_t, SimTime> placed_ports;  // device*1000+port -> offset
    for (const auto& route : msg.routes) {
      SimTime prev_end = margin;  // frames are available at the cycle phase
      for (std::size_t hop = 0; hop + 1 < route.size(); ++hop) {
        const std::uint32_t dev = route[hop];
        const std::uint32_t next = route[hop + 1];
        const auto port = model.port_towards(dev, next);
        if (!port) continue;  // CAN leg of a gateway route, not TDMA-planned
        const auto& rp = model.ports[dev][*port];
        const SimTime tx = wire_duration(wire_length(msg.payload), rp.rate_bps);
        const SimTime window = tx + worst_tick(model) + opts.extra_margin;
        const std::uint32_t port_id = dev * 1000u + *port;
        if (auto it = placed_ports.find(port_id); it != placed_ports.end()) {
          prev_end = it->second + tx + rp.propagation +
                     model.devices[next].processing_delay + margin;
          continue;
        }

        std::int64_t candidate = prev_end.ticks();
        const std::int64_t base_limit = candidate + cycle;
        bool ok = false;
        while (candidate < base_limit) {
          const std::int64_t start = candidate % cycle;
          const std::int64_t phase = start % tm.period.ticks();
          if (phase < lead.ticks()) {
            candidate += lead.ticks() - phase;
            continue;
          }
          if (phase + window.ticks() > tm.period.ticks()) {
            // keep each repetition inside its period slice so the shifted
            // copies stay inside the cycle; jump to the next period start
            candidate += tm.period.ticks() - phase;
            continue;
          }
          std::int64_t shift = 0;
          for (std::int64_t r = 0; r < repetitions; ++r) {
            const std::int64_t s = (start + r * tm.period.ticks()) % cycle;
            shift = std::max(shift, placed.blocking_shift(PortKey{dev, *port}, s,
                                                          window.ticks(), lead.ticks(), cycle));
          }
          if (shift == 0) {
            ok = true;
            break;
          }
          candidate += shift;
        }
        if (!ok) {
          throw SimError(ErrorCode::Infeasible,
                         "no TT window fits on " + model.devices[dev].name + " port " +
                             std::to_string(*port) + " for message '" + msg.name + "'");
        }
        const std::int64_t start = candidate % cycle;
        for (std::int64_t r = 0; r < repetitions; ++r) {
          TtAction action;
          action.offset = SimTime::ps((start + r * tm.period.ticks()) % cycle);
          action.ct_id = tm.ct_id;
          action.egress = PortKey{dev, *port};
          action.reserved = window;
          action.lead = lead;
          placed.actions.push_back(action);
        }
        placed_ports[port_id] = SimTime::ps(start);
        prev_end = SimTime::ps(candidate) + tx + rp.propagation +
                   model.devices[next].processing_delay + margin;
      }
    }
  }

  schedule.actions = std::move(placed.actions);
  std::sort(schedule.actions.begin(), schedule.actions.end(),
            [](const TtAction& a, const TtAction& b) {
              if (a.offset != b.offset) return a.offset < b.offset;
              if (a.egress.device != b.egress.device) return a.egress.device < b.egress.device;
              return a.egress.port < b.egress.port;
            });
  return schedule;
}

}  // namespace ivn::andl
