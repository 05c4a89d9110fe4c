#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivnsim/can.hpp"
#include "ivnsim/sim_time.hpp"

namespace ivn {

enum class TrafficClass : std::uint8_t {
  TimeTriggered,
  RateConstrained,
  AvbClassA,
  AvbClassB,
  BestEffort,
};

const char* traffic_class_name(TrafficClass cls);

/// Class tag: ct_id for TT, vl_id for RC, stream_id for AVB, unused for BE.
struct ClassTag {
  TrafficClass cls = TrafficClass::BestEffort;
  std::uint32_t stream_id = 0;
};

struct HopRecord {
  std::uint32_t node;
  SimTime arrival;    // frame fully received (for the source: creation)
  SimTime departure;  // transmission start on the egress port
};

struct EthernetFrame {
  std::uint64_t frame_id = 0;
  std::uint32_t flow = 0;  // resolved message index, keys the forwarding tables
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  ClassTag tag;
  std::uint8_t priority = 0;       // 0..7
  std::uint32_t payload_len = 0;   // bytes before padding, <= 1500
  SimTime created_at;
  std::vector<HopRecord> hop_trail;
  std::vector<std::uint8_t> payload_bytes;  // set for gateway aggregates
  std::vector<CanFrame> embedded;           // carried fieldbus frames (sim metadata)
  std::vector<std::uint32_t> embedded_flows;  // message index per embedded frame
};

/// On-wire length: header 14 + FCS 4 plus payload, padded up to the 64-byte
/// minimum (i.e. minimum payload of 46 bytes).
constexpr std::uint32_t wire_length(std::uint32_t payload_len) {
  const std::uint32_t len = 18 + payload_len;
  return len < 64 ? 64 : len;
}

/// Port occupancy of one frame: preamble+SFD (8 B), the frame itself and the
/// 12-byte inter-frame gap. Exact picoseconds at 100 Mb/s.
SimTime wire_duration(std::uint32_t on_wire_bytes, std::uint64_t rate_bps);

/// Time from transmission start until the last frame bit is on the wire
/// (preamble included, inter-frame gap not). Arrival at the peer adds the
/// link propagation delay.
SimTime serialize_duration(std::uint32_t on_wire_bytes, std::uint64_t rate_bps);

struct Link {
  std::uint64_t rate_bps = 100'000'000;
  SimTime propagation_delay;
};

}  // namespace ivn
