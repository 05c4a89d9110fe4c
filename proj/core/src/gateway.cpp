#include "ivnsim/gateway.hpp"

#include <algorithm>

namespace ivn {

void Pool::admit(std::uint32_t message, const CanFrame& frame, SimTime now,
                 SimTime frame_holdup) {
  if (std::find(members_.begin(), members_.end(), message) == members_.end()) {
    throw SimError(ErrorCode::NotAMember,
                   "message " + std::to_string(message) + " not in pool " + id_);
  }
  const SimTime candidate = now + frame_holdup;
  if (pending_.empty()) {
    deadline_ = candidate;
  } else if (candidate < *deadline_) {
    deadline_ = candidate;  // a shorter holdup pulls the pool in
  }
  pending_.push_back(frame);
}

Pool::FlushResult Pool::flush(SimTime) {
  FlushResult result;
  result.frames = std::move(pending_);
  pending_.clear();
  deadline_.reset();
  result.payload = encapsulate(result.frames);
  return result;
}

std::vector<std::uint8_t> encapsulate(const std::vector<CanFrame>& frames) {
  if (frames.empty() || frames.size() > 255) {
    throw SimError(ErrorCode::MalformedPayload,
                   "encapsulate expects 1..255 frames, got " + std::to_string(frames.size()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(1 + frames.size() * 13);
  out.push_back(static_cast<std::uint8_t>(frames.size()));
  for (const auto& f : frames) {
    out.push_back(0);
    out.push_back(0);
    out.push_back(static_cast<std::uint8_t>((f.id >> 8) & 0x07));
    out.push_back(static_cast<std::uint8_t>(f.id & 0xff));
    out.push_back(f.dlc);
    for (int i = 0; i < f.dlc; ++i) out.push_back(f.data[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<CanFrame> decapsulate(const std::vector<std::uint8_t>& payload) {
  if (payload.empty()) {
    throw SimError(ErrorCode::MalformedPayload, "empty payload");
  }
  const std::size_t count = payload[0];
  if (count == 0) {
    throw SimError(ErrorCode::MalformedPayload, "zero frame count");
  }
  std::vector<CanFrame> frames;
  frames.reserve(count);
  std::size_t pos = 1;
  for (std::size_t i = 0; i < count; ++i) {
    if (pos + 5 > payload.size()) {
      throw SimError(ErrorCode::MalformedPayload, "truncated frame header");
    }
    CanFrame f;
    const std::uint32_t id = (std::uint32_t(payload[pos]) << 24) |
                             (std::uint32_t(payload[pos + 1]) << 16) |
                             (std::uint32_t(payload[pos + 2]) << 8) |
                             std::uint32_t(payload[pos + 3]);
    f.id = static_cast<std::uint16_t>(id & 0x7ff);
    f.dlc = payload[pos + 4];
    pos += 5;
    if (f.dlc > 8 || pos + f.dlc > payload.size()) {
      throw SimError(ErrorCode::MalformedPayload, "truncated frame data");
    }
    for (int b = 0; b < f.dlc; ++b) f.data[static_cast<std::size_t>(b)] = payload[pos + static_cast<std::size_t>(b)];
    pos += f.dlc;
    frames.push_back(f);
  }
  return frames;  // bytes past the declared entries are padding
}

}  // namespace ivn
