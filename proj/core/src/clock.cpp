#include "ivnsim/clock.hpp"

namespace ivn {

namespace {

using i128 = __int128;

// floor(a / b) for b > 0
std::int64_t floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return static_cast<std::int64_t>(q);
}

// ceil(a / b) for b > 0
std::int64_t ceil_div(i128 a, i128 b) {
  i128 q = a / b;
  if (a % b != 0 && ((a < 0) == (b < 0))) ++q;
  return static_cast<std::int64_t>(q);
}

}  // namespace

SimTime LocalClock::global_to_local(SimTime t_global) const {
  const i128 delta = t_global.ticks() - last_sync_global_.ticks();
  // rate = (1e6*den + num) / (1e6*den); local elapsed = delta * rate, floored.
  const i128 num = i128(1'000'000) * osc_.drift_ppm_den + osc_.drift_ppm_num;
  const i128 den = i128(1'000'000) * osc_.drift_ppm_den;
  const std::int64_t elapsed_local = floor_div(delta * num, den);
  const SimTime last_sync_local = last_sync_global_ + offset_;
  SimTime raw = last_sync_local + SimTime::ps(elapsed_local);
  if (osc_.tick_length > SimTime::ps(1) && raw >= SimTime::zero()) {
    raw = raw.floor_to(osc_.tick_length);
  }
  return raw;
}

SimTime LocalClock::local_to_global(SimTime t_local) const {
  const SimTime last_sync_local = last_sync_global_ + offset_;
  SimTime target = t_local;
  if (osc_.tick_length > SimTime::ps(1) && target >= SimTime::zero()) {
    // The displayed clock advances in whole ticks; it reads >= t_local once
    // the raw local time passes the next tick boundary.
    target = target.ceil_to(osc_.tick_length);
  }
  if (target <= last_sync_local) return last_sync_global_;
  const i128 delta_local = target.ticks() - last_sync_local.ticks();
  const i128 num = i128(1'000'000) * osc_.drift_ppm_den + osc_.drift_ppm_num;
  const i128 den = i128(1'000'000) * osc_.drift_ppm_den;
  const std::int64_t elapsed_global = ceil_div(delta_local * den, num);
  return last_sync_global_ + SimTime::ps(elapsed_global);
}

void LocalClock::apply_sync(SimTime t_global, Rng& rng) {
  const std::int64_t p = sync_precision_.ticks();
  const std::int64_t off = p == 0 ? 0 : rng.uniform_i64(-p, p);
  offset_ = SimTime::ps(off);
  last_sync_global_ = t_global;
}

}  // namespace ivn
