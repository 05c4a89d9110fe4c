#include "ivnsim/cbs.hpp"

namespace ivn {

void cbs_advance(CbsState& state, SimTime now, CbsMode mode) {
  const __int128 dt = now.ticks() - state.last_update.ticks();
  switch (mode) {
    case CbsMode::Transmitting:
      state.credit += (__int128)state.send_slope_bps * dt;
      break;
    case CbsMode::Waiting:
      state.credit += (__int128)state.idle_slope_bps * dt;
      break;
    case CbsMode::Idle:
      if (state.credit > 0) {
        state.credit = 0;  // reset rule: unused gain is not banked
      } else if (state.credit < 0) {
        state.credit += (__int128)state.idle_slope_bps * dt;
        if (state.credit > 0) state.credit = 0;
      }
      break;
  }
  state.last_update = now;
}

SimTime cbs_zero_crossing(const CbsState& state) {
  if (state.credit >= 0) return state.last_update;
  const __int128 deficit = -state.credit;
  const __int128 slope = state.idle_slope_bps;
  const __int128 dt = (deficit + slope - 1) / slope;  // ceil
  return state.last_update + SimTime::ps(static_cast<std::int64_t>(dt));
}

std::int64_t cbs_credit_bits(const CbsState& state) {
  __int128 c = state.credit;
  __int128 q = c / 1'000'000'000'000LL;
  if (c % 1'000'000'000'000LL != 0 && c < 0) --q;
  return static_cast<std::int64_t>(q);
}

}  // namespace ivn
