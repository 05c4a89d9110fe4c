#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ivnsim/can.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/sim_time.hpp"

namespace ivn {

/// Routing key inside a gateway: the segment a message arrived on plus its
/// id in that segment's representation (CAN id, or ct/vl/stream id).
struct RouteKey {
  std::uint32_t segment = 0;
  std::uint32_t id = 0;
  friend auto operator<=>(const RouteKey&, const RouteKey&) = default;
};

struct RouteDest {
  std::uint32_t segment = 0;   // destination segment
  std::uint32_t message = 0;   // resolved message index (mapping parameters)
};

/// Forwarding rules: a message can have no routing entry (dropped), one, or
/// several (duplicated towards several segments). Order is configuration
/// order and deterministic.
class RoutingTable {
 public:
  void add(RouteKey key, RouteDest dest) { entries_[key].push_back(dest); }

  /// Empty result means the frame is dropped; callers count the drop.
  const std::vector<RouteDest>& route(RouteKey key) const {
    static const std::vector<RouteDest> none;
    auto it = entries_.find(key);
    return it == entries_.end() ? none : it->second;
  }

 private:
  std::map<RouteKey, std::vector<RouteDest>> entries_;
};

/// Aggregation pool: frames wait for the pool deadline and are released
/// together. Admitting a frame with a shorter holdup pulls the deadline in;
/// it never moves out while frames are pending.
class Pool {
 public:
  Pool() = default;
  Pool(std::string id, std::vector<std::uint32_t> member_messages)
      : id_(std::move(id)), members_(std::move(member_messages)) {}

  /// Throws NotAMember when the frame's message is not assigned to this pool.
  void admit(std::uint32_t message, const CanFrame& frame, SimTime now, SimTime frame_holdup);

  struct FlushResult {
    std::vector<CanFrame> frames;       // arrival order
    std::vector<std::uint8_t> payload;  // encapsulated Ethernet payload
  };
  /// Pre: pending nonempty. Clears the pool and unsets the deadline.
  FlushResult flush(SimTime now);

  bool pending_empty() const { return pending_.empty(); }
  std::optional<SimTime> deadline() const { return deadline_; }
  const std::string& id() const { return id_; }
  const std::vector<std::uint32_t>& members() const { return members_; }

 private:
  std::string id_;
  std::vector<std::uint32_t> members_;
  std::vector<CanFrame> pending_;
  std::optional<SimTime> deadline_;
};

/// Normative byte layout for fieldbus-in-Ethernet aggregates:
///   count (1 byte), then per frame id (4 bytes big-endian, low 11 bits
///   significant), dlc (1 byte), data (dlc bytes).
/// Valid for 1..255 frames.
std::vector<std::uint8_t> encapsulate(const std::vector<CanFrame>& frames);

/// Exact inverse of encapsulate; padding beyond the declared entries is
/// ignored. Throws MalformedPayload when declared sizes exceed the payload.
std::vector<CanFrame> decapsulate(const std::vector<std::uint8_t>& payload);

}  // namespace ivn
