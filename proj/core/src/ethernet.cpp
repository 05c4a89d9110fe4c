#include "ivnsim/ethernet.hpp"

namespace ivn {

namespace {

SimTime bits_to_time(std::uint64_t bits, std::uint64_t rate_bps) {
  const __int128 ps = (__int128)bits * 1'000'000'000'000LL / rate_bps;
  return SimTime::ps(static_cast<std::int64_t>(ps));
}

}  // namespace

SimTime wire_duration(std::uint32_t on_wire_bytes, std::uint64_t rate_bps) {
  return bits_to_time((8ull + on_wire_bytes + 12ull) * 8ull, rate_bps);
}

SimTime serialize_duration(std::uint32_t on_wire_bytes, std::uint64_t rate_bps) {
  return bits_to_time((8ull + on_wire_bytes) * 8ull, rate_bps);
}

const char* traffic_class_name(TrafficClass cls) {
  switch (cls) {
    case TrafficClass::TimeTriggered: return "tt";
    case TrafficClass::RateConstrained: return "rc";
    case TrafficClass::AvbClassA: return "avb_a";
    case TrafficClass::AvbClassB: return "avb_b";
    case TrafficClass::BestEffort: return "be";
  }
  return "?";
}

}  // namespace ivn
