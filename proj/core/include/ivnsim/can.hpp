#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "ivnsim/error.hpp"
#include "ivnsim/sim_time.hpp"

namespace ivn {

/// Standard CAN data frame: 11-bit identifier, up to 8 payload bytes.
struct CanFrame {
  std::uint16_t id = 0;  // < 2048
  std::uint8_t dlc = 0;  // <= 8
  std::array<std::uint8_t, 8> data{};
  SimTime created_at;
};

struct CanBitStats {
  std::uint32_t stuff_bits = 0;
  std::uint32_t total_bits = 0;  // stuffed SOF..CRC region + 13 fixed tail bits
};

/// Unstuffed bit stream SOF..CRC (SOF, 11-bit id, RTR, IDE, r0, DLC, data,
/// CRC-15 over SOF..DATA). Bits are 0/1 bytes, SOF first.
std::vector<std::uint8_t> can_serialize_bits(const CanFrame& frame);

/// CRC-15, polynomial x^15+x^14+x^10+x^8+x^7+x^4+x^3+1 (0x4599).
std::uint16_t can_crc15(const std::vector<std::uint8_t>& bits);

/// Stuff counting over SOF..CRC: after five consecutive equal bits a
/// complement bit is inserted; stuff bits take part in subsequent counting.
/// The 13 fixed tail bits (CRC delimiter, ACK slot, ACK delimiter, EOF,
/// intermission) are never stuffed.
CanBitStats serialize_and_stuff(const CanFrame& frame);

/// Stuffed on-wire bit stream SOF..CRC (without the fixed tail).
std::vector<std::uint8_t> can_stuff_bits(const std::vector<std::uint8_t>& bits);
/// Inverse of can_stuff_bits.
std::vector<std::uint8_t> can_destuff_bits(const std::vector<std::uint8_t>& stuffed);

/// Total occupancy of the frame on the bus, intermission included.
/// Exact picoseconds whenever bitrate divides 10^12.
SimTime can_frame_duration(const CanFrame& frame, std::uint64_t bitrate_bps);

/// Shared CAN bus with per-node transmit queues and dominant-bit arbitration:
/// among all frames pending when the bus goes idle, the lowest numeric id
/// wins. Two distinct nodes contending with the same id at the same instant
/// is a configuration fault (DuplicateId).
class CanBus {
 public:
  explicit CanBus(std::uint64_t bitrate_bps) : bitrate_(bitrate_bps) {}

  void attach_node(std::uint32_t node);
  void enqueue(std::uint32_t node, const CanFrame& frame);

  struct Grant {
    std::uint32_t node;
    CanFrame frame;
  };
  /// Pre: bus idle at t. Pops and returns the winner, or nullopt if nothing
  /// is pending. Losers stay queued.
  std::optional<Grant> arbitrate(SimTime t);

  std::uint64_t bitrate() const { return bitrate_; }
  SimTime busy_until() const { return busy_until_; }
  void set_busy_until(SimTime t) { busy_until_ = t; }
  bool has_pending() const;

 private:
  std::uint64_t bitrate_;
  SimTime busy_until_;
  std::vector<std::pair<std::uint32_t, std::deque<CanFrame>>> pending_;  // declaration order
};

}  // namespace ivn
