#pragma once

#include <cstdint>

#include "ivnsim/rng.hpp"
#include "ivnsim/sim_time.hpp"

namespace ivn {

/// Free-running local oscillator. Drift is a constant rational deviation in
/// parts per million; tick_length is the granularity at which the clock is
/// readable. |drift| must stay below 10^4 ppm.
struct Oscillator {
  std::int64_t drift_ppm_num = 0;  // drift in ppm = num / den
  std::int64_t drift_ppm_den = 1;
  SimTime tick_length = SimTime::ps(1);
};

/// Local node clock: oscillator plus a periodic abstract synchronization that
/// resets the offset to a uniformly drawn error in [-precision, +precision].
/// All conversions are exact rational arithmetic before rounding to the tick
/// grid; the time domain never touches floating point.
class LocalClock {
 public:
  LocalClock() = default;
  LocalClock(Oscillator osc, SimTime sync_interval, SimTime sync_precision)
      : osc_(osc), sync_interval_(sync_interval), sync_precision_(sync_precision) {}

  /// local = last_sync_local + (t_global - last_sync_global)*(1 + drift*1e-6),
  /// rounded down to a tick_length multiple. Pre: t_global >= last sync time.
  SimTime global_to_local(SimTime t_global) const;

  /// Earliest global instant at which the displayed local time reaches
  /// t_local. Inverse of global_to_local up to tick granularity.
  SimTime local_to_global(SimTime t_local) const;

  /// Periodic correction: redraw offset uniformly in [-precision, +precision]
  /// and re-anchor the rational mapping at t_global. Drift is unchanged.
  void apply_sync(SimTime t_global, Rng& rng);

  SimTime offset() const { return offset_; }
  SimTime sync_interval() const { return sync_interval_; }
  SimTime sync_precision() const { return sync_precision_; }
  const Oscillator& oscillator() const { return osc_; }
  bool is_perfect() const {
    return osc_.drift_ppm_num == 0 && sync_precision_ == SimTime::zero() &&
           osc_.tick_length <= SimTime::ps(1);
  }

 private:
  Oscillator osc_;
  SimTime sync_interval_ = SimTime::ms(10);
  SimTime sync_precision_;
  SimTime offset_;            // local minus global at last sync
  SimTime last_sync_global_;  // anchor of the rational mapping
};

}  // namespace ivn
