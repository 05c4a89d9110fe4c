#pragma once

#include <cstdint>
#include <vector>

#include "ivnsim/error.hpp"
#include "ivnsim/sim_time.hpp"

namespace ivn {

/// Identifies one egress port network-wide.
struct PortKey {
  std::uint32_t device = 0;
  std::uint32_t port = 0;
  friend bool operator==(const PortKey&, const PortKey&) = default;
};

struct TtAction {
  SimTime offset;  // dispatch instant within the cycle, in [0, cycle)
  std::uint32_t ct_id = 0;
  PortKey egress;
  SimTime reserved;  // window length past the offset: frame duration plus slop
  SimTime lead;      // guard opens this much before the offset, so a frame
                     // admitted on a drifting clock still clears the port
};

/// TDMA dispatch plan. Per port, reserved windows are pairwise disjoint
/// within a cycle; offsets are kept sorted.
struct TtSchedule {
  SimTime cycle;
  std::vector<TtAction> actions;

  bool empty() const { return actions.empty(); }
};

/// Smallest t >= local_now with t = offset (mod cycle) for ct_id's action on
/// the given port. Throws UnknownCtId when the port has no such action.
SimTime tt_next_dispatch(const TtSchedule& schedule, PortKey port, std::uint32_t ct_id,
                         SimTime local_now);

/// True iff [now, now + tx_duration) overlaps no reserved window of the
/// port's schedule, windows taken over cycle wrap.
bool guard_admit(const TtSchedule& schedule, PortKey port, SimTime now, SimTime tx_duration);

/// Earliest t >= now at which guard_admit holds. With a saturating schedule
/// this scans forward window by window; plans generated here always leave
/// gaps, so the scan terminates within one cycle.
SimTime guard_next_admit(const TtSchedule& schedule, PortKey port, SimTime now,
                         SimTime tx_duration);

}  // namespace ivn
