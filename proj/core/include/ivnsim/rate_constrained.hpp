#pragma once

#include <cstdint>

#include "ivnsim/sim_time.hpp"

namespace ivn {

/// Source-side gate for one rate-constrained virtual link: consecutive
/// releases are at least one bandwidth allocation gap apart. There is no
/// credit accumulation; an idle link gains nothing.
struct BagState {
  SimTime bag;
  SimTime last_release;
  std::uint32_t max_frame_bytes = 1518;
  bool released_any = false;
};

/// Earliest instant a frame pending at `now` may be released.
inline SimTime bag_gate(const BagState& state, SimTime now) {
  if (!state.released_any) return now;
  const SimTime earliest = state.last_release + state.bag;
  return earliest > now ? earliest : now;
}

inline void bag_mark_release(BagState& state, SimTime t) {
  state.last_release = t;
  state.released_any = true;
}

/// Ingress policing for one virtual link: oversized frames and frames
/// arriving faster than the contracted gap (minus the jitter allowance) are
/// dropped and counted, never raised.
struct VlPolicer {
  SimTime bag;
  std::uint32_t max_frame_bytes = 1518;
  SimTime jitter_allowance;
  SimTime last_accepted;
  bool accepted_any = false;
};

enum class PoliceResult : std::uint8_t { Accept, DropSize, DropRate };

inline PoliceResult police_ingress(VlPolicer& policer, std::uint32_t frame_wire_bytes,
                                   SimTime arrival) {
  if (frame_wire_bytes > policer.max_frame_bytes) return PoliceResult::DropSize;
  if (policer.accepted_any &&
      arrival < policer.last_accepted + policer.bag - policer.jitter_allowance) {
    return PoliceResult::DropRate;
  }
  policer.last_accepted = arrival;
  policer.accepted_any = true;
  return PoliceResult::Accept;
}

}  // namespace ivn
