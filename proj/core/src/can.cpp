#include "ivnsim/can.hpp"

#include <algorithm>
#include <string>

namespace ivn {

namespace {

void push_bits(std::vector<std::uint8_t>& out, std::uint32_t value, int width) {
  for (int i = width - 1; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>((value >> i) & 1u));
  }
}

}  // namespace

std::uint16_t can_crc15(const std::vector<std::uint8_t>& bits) {
  std::uint16_t crc = 0;
  for (std::uint8_t bit : bits) {
    const std::uint16_t crc_nxt = static_cast<std::uint16_t>(bit ^ ((crc >> 14) & 1u));
    crc = static_cast<std::uint16_t>((crc << 1) & 0x7fff);
    if (crc_nxt) crc ^= 0x4599;
  }
  return crc;
}

std::vector<std::uint8_t> can_serialize_bits(const CanFrame& frame) {
  std::vector<std::uint8_t> bits;
  bits.reserve(98);
  bits.push_back(0);                       // SOF, dominant
  push_bits(bits, frame.id & 0x7ff, 11);   // identifier
  bits.push_back(0);                       // RTR, dominant for data frames
  bits.push_back(0);                       // IDE, standard format
  bits.push_back(0);                       // r0
  push_bits(bits, frame.dlc & 0xf, 4);     // DLC
  for (int i = 0; i < frame.dlc; ++i) {
    push_bits(bits, frame.data[static_cast<std::size_t>(i)], 8);
  }
  const std::uint16_t crc = can_crc15(bits);
  push_bits(bits, crc, 15);
  return bits;
}

std::vector<std::uint8_t> can_stuff_bits(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> out;
  out.reserve(bits.size() + bits.size() / 4);
  int run = 0;
  std::uint8_t last = 2;  // neither 0 nor 1
  for (std::uint8_t b : bits) {
    out.push_back(b);
    if (b == last) {
      ++run;
    } else {
      last = b;
      run = 1;
    }
    if (run == 5) {
      const std::uint8_t stuff = static_cast<std::uint8_t>(1 - b);
      out.push_back(stuff);
      last = stuff;
      run = 1;
    }
  }
  return out;
}

std::vector<std::uint8_t> can_destuff_bits(const std::vector<std::uint8_t>& stuffed) {
  std::vector<std::uint8_t> out;
  out.reserve(stuffed.size());
  int run = 0;
  std::uint8_t last = 2;
  bool drop_next = false;
  for (std::uint8_t b : stuffed) {
    if (drop_next) {
      drop_next = false;
      last = b;
      run = 1;
      continue;
    }
    out.push_back(b);
    if (b == last) {
      ++run;
    } else {
      last = b;
      run = 1;
    }
    if (run == 5) drop_next = true;
  }
  return out;
}

CanBitStats serialize_and_stuff(const CanFrame& frame) {
  const auto raw = can_serialize_bits(frame);
  const auto stuffed = can_stuff_bits(raw);
  CanBitStats stats;
  stats.stuff_bits = static_cast<std::uint32_t>(stuffed.size() - raw.size());
  // CRC delimiter + ACK slot + ACK delimiter + EOF(7) + intermission(3)
  stats.total_bits = static_cast<std::uint32_t>(stuffed.size()) + 13;
  return stats;
}

SimTime can_frame_duration(const CanFrame& frame, std::uint64_t bitrate_bps) {
  const auto stats = serialize_and_stuff(frame);
  const __int128 ps = (__int128)stats.total_bits * 1'000'000'000'000LL / bitrate_bps;
  return SimTime::ps(static_cast<std::int64_t>(ps));
}

void CanBus::attach_node(std::uint32_t node) {
  for (auto& [n, q] : pending_) {
    if (n == node) return;
  }
  pending_.emplace_back(node, std::deque<CanFrame>{});
}

void CanBus::enqueue(std::uint32_t node, const CanFrame& frame) {
  for (auto& [n, q] : pending_) {
    if (n == node) {
      q.push_back(frame);
      return;
    }
  }
  pending_.emplace_back(node, std::deque<CanFrame>{frame});
}

bool CanBus::has_pending() const {
  return std::any_of(pending_.begin(), pending_.end(),
                     [](const auto& p) { return !p.second.empty(); });
}

std::optional<CanBus::Grant> CanBus::arbitrate(SimTime) {
  std::uint32_t best_id = 0xffffffff;
  int best_node_idx = -1;
  int owners = 0;
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    const auto& q = pending_[i].second;
    std::uint32_t node_best = 0xffffffff;
    for (const auto& f : q) node_best = std::min<std::uint32_t>(node_best, f.id);
    if (node_best < best_id) {
      best_id = node_best;
      best_node_idx = static_cast<int>(i);
      owners = 1;
    } else if (node_best == best_id && node_best != 0xffffffff) {
      ++owners;
    }
  }
  if (best_node_idx < 0) return std::nullopt;
  if (owners > 1) {
    throw SimError(ErrorCode::DuplicateId,
                   "two nodes contend with CAN id " + std::to_string(best_id));
  }
  auto& q = pending_[static_cast<std::size_t>(best_node_idx)].second;
  auto it = std::find_if(q.begin(), q.end(),
                         [&](const CanFrame& f) { return f.id == best_id; });
  Grant g{pending_[static_cast<std::size_t>(best_node_idx)].first, *it};
  q.erase(it);
  return g;
}

}  // namespace ivn
