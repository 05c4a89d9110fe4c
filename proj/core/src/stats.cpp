#include "ivnsim/stats.hpp"

namespace ivn {

void StreamStats::add_latency(SimTime latency, SimTime arrival) {
  if (count_ == 0) first_arrival_ = arrival;
  last_arrival_ = arrival;
  ++count_;
  if (latency < min_) min_ = latency;
  if (latency > max_) max_ = latency;
  sum_ += latency.ticks();
  recent_.push_back(latency);
  if (recent_.size() > kWindow) recent_.pop_front();
}

SimTime StreamStats::mean_floor() const {
  if (count_ == 0) return SimTime::zero();
  return SimTime::ps(static_cast<std::int64_t>(sum_ / count_));
}

void StatsCollector::record_latency(const std::string& stream, const EthernetFrame& frame) {
  if (frame.hop_trail.empty()) {
    throw SimError(ErrorCode::IncompleteTrail, "no hops recorded for " + stream);
  }
  SimTime prev = frame.created_at;
  for (const auto& hop : frame.hop_trail) {
    if (hop.arrival < prev) {
      throw SimError(ErrorCode::IncompleteTrail, "hop trail not time-ordered for " + stream);
    }
    prev = hop.arrival;
  }
  const SimTime arrival = frame.hop_trail.back().arrival;
  record_latency(stream, frame.created_at, arrival, frame.hop_trail.size());
}

void StatsCollector::record_latency(const std::string& stream, SimTime created,
                                    SimTime arrival, std::size_t) {
  streams_[stream].add_latency(arrival - created, arrival);
}

void StatsCollector::record_queue_depth(const std::string& queue, const std::string& cls,
                                        std::uint32_t stream, std::uint64_t frames,
                                        std::uint64_t bytes) {
  auto key = queue + "." + cls + (stream ? "." + std::to_string(stream) : std::string());
  auto& wm = watermarks_[key];
  if (wm.queue.empty()) {
    wm.queue = queue;
    wm.cls = cls;
    wm.stream = stream;
  }
  if (frames > wm.max_frames) wm.max_frames = frames;
  if (bytes > wm.max_bytes) wm.max_bytes = bytes;
}

void StatsCollector::record_drop(const std::string& stream, const std::string& reason) {
  ++drops_[stream];
  ++drop_reasons_[reason];
}

std::uint64_t StatsCollector::drops(const std::string& stream) const {
  auto it = drops_.find(stream);
  return it == drops_.end() ? 0 : it->second;
}

}  // namespace ivn
