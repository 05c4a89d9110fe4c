#pragma once

#include <cstdint>

#include "ivnsim/sim_time.hpp"

namespace ivn {

/// Credit in units of 10^-12 bit, so that slope[bit/s] * elapsed[ps] is an
/// exact integer. 128 bits keep long waiting intervals exact.
using CreditUnits = __int128;

enum class CbsMode : std::uint8_t {
  Transmitting,  // own frame on the wire: credit decays at send_slope
  Waiting,       // queue nonempty, not transmitting: credit grows at idle_slope
  Idle,          // queue empty: positive credit resets, negative recovers to 0
};

/// Credit-based shaper state for one AVB class queue on one port.
struct CbsState {
  CreditUnits credit = 0;
  std::int64_t idle_slope_bps = 0;  // 0 < idle_slope < port rate
  std::int64_t send_slope_bps = 0;  // idle_slope - port rate, negative
  SimTime last_update;
};

/// Advance credit over [state.last_update, now] spent in `mode`.
void cbs_advance(CbsState& state, SimTime now, CbsMode mode);

/// A queued frame may start transmission iff credit >= 0.
inline bool cbs_eligible(const CbsState& state) { return state.credit >= 0; }

/// For a waiting queue with negative credit: the instant credit reaches zero.
SimTime cbs_zero_crossing(const CbsState& state);

/// Exact bit count represented by the credit (floor), test/debug helper.
std::int64_t cbs_credit_bits(const CbsState& state);

}  // namespace ivn
