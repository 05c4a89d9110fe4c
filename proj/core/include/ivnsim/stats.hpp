#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "ivnsim/error.hpp"
#include "ivnsim/ethernet.hpp"
#include "ivnsim/sim_time.hpp"

namespace ivn {

/// End-to-end latency accumulator for one stream. Absolute jitter is
/// max - min over the run; all arithmetic is integer picoseconds.
class StreamStats {
 public:
  void add_latency(SimTime latency, SimTime arrival);

  std::uint64_t count() const { return count_; }
  SimTime min() const { return min_; }
  SimTime max() const { return max_; }
  __int128 sum_ps() const { return sum_; }
  SimTime mean_floor() const;
  SimTime jitter() const { return count_ == 0 ? SimTime::zero() : max_ - min_; }
  SimTime first_arrival() const { return first_arrival_; }
  SimTime last_arrival() const { return last_arrival_; }

  const std::deque<SimTime>& recent() const { return recent_; }

 private:
  std::uint64_t count_ = 0;
  SimTime min_ = SimTime::max();
  SimTime max_ = SimTime::ps(0);
  __int128 sum_ = 0;
  SimTime first_arrival_;
  SimTime last_arrival_;
  std::deque<SimTime> recent_;  // sliding window for averaged checks
  static constexpr std::size_t kWindow = 64;
};

/// Per-queue high-watermark, monotone non-decreasing during a run.
struct BufferWatermark {
  std::string queue;       // "<device>.p<port>"
  std::string cls;         // traffic class name
  std::uint32_t stream = 0;
  std::uint64_t max_frames = 0;
  std::uint64_t max_bytes = 0;
};

/// Run-wide statistics: latency per stream, queue watermarks, drop counters.
class StatsCollector {
 public:
  /// Latency from a completed hop trail: final arrival minus creation.
  /// Throws IncompleteTrail when the trail is empty or unordered.
  void record_latency(const std::string& stream, const EthernetFrame& frame);
  void record_latency(const std::string& stream, SimTime created, SimTime arrival,
                      std::size_t hops);

  void record_queue_depth(const std::string& queue, const std::string& cls,
                          std::uint32_t stream, std::uint64_t frames, std::uint64_t bytes);
  void record_drop(const std::string& stream, const std::string& reason);

  const std::map<std::string, StreamStats>& streams() const { return streams_; }
  const std::map<std::string, BufferWatermark>& watermarks() const { return watermarks_; }
  const std::map<std::string, std::uint64_t>& drops_by_stream() const { return drops_; }
  std::uint64_t drops(const std::string& stream) const;
  const std::map<std::string, std::uint64_t>& drop_reasons() const { return drop_reasons_; }

 private:
  std::map<std::string, StreamStats> streams_;
  std::map<std::string, BufferWatermark> watermarks_;
  std::map<std::string, std::uint64_t> drops_;
  std::map<std::string, std::uint64_t> drop_reasons_;
};

}  // namespace ivn
