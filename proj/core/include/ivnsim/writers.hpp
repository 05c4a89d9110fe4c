#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ivnsim/ethernet.hpp"
#include "ivnsim/stats.hpp"

namespace ivn {

/// One captured frame: timestamp of the transmission start plus enough of
/// the frame to synthesize its on-wire bytes.
struct CapturedFrame {
  SimTime timestamp;
  std::uint32_t tx_node = 0;  // device whose port sent this copy
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint8_t priority = 0;
  TrafficClass cls = TrafficClass::BestEffort;
  std::uint32_t payload_len = 0;
  std::vector<std::uint8_t> payload_bytes;  // gateway aggregates; zeros otherwise
};

class PacketTrace {
 public:
  void add(const EthernetFrame& frame, SimTime tx_start, std::uint32_t tx_node = 0);
  const std::vector<CapturedFrame>& frames() const { return frames_; }
  bool empty() const { return frames_.empty(); }

 private:
  std::vector<CapturedFrame> frames_;
};

/// Stats table schema (normative): columns
///   stream,class,count,min_ps,max_ps,mean_ps,jitter_ps,drops
/// one row per stream, then one row per buffer watermark (count carries the
/// frame watermark and max_ps the byte watermark there). No wall-clock
/// timestamps anywhere; identical runs produce identical bytes.
void write_stats_csv(const StatsCollector& stats,
                     const std::map<std::string, std::string>& stream_class,
                     const std::string& path);

/// JSON mirror of the same data under keys "streams", "buffers" and
/// "config_digest".
void write_stats_json(const StatsCollector& stats,
                      const std::map<std::string, std::string>& stream_class,
                      const std::string& config_digest,
                      const std::map<std::string, std::string>& metadata,
                      const std::string& path);

/// Classic pcap (magic 0xa1b2c3d4, version 2.4, linktype 1 Ethernet,
/// snaplen 65535). Record timestamps are SimTime divided down to whole
/// microseconds. Frame bytes: synthesized MACs from node ids, an 802.1Q tag
/// carrying the class priority, and the payload (gateway aggregates verbatim,
/// zero padding otherwise, padded to the 46-byte minimum).
void write_pcap(const PacketTrace& trace, const std::string& path);

struct PcapRecord {
  std::uint32_t ts_sec = 0;
  std::uint32_t ts_usec = 0;
  std::vector<std::uint8_t> bytes;
};
/// Reader for tests and tooling; validates the global header.
std::vector<PcapRecord> read_pcap(const std::string& path);

/// FNV-1a over the canonical run configuration, rendered as fixed-width hex.
std::string config_digest(const std::string& scenario_text,
                          const std::vector<std::pair<std::string, std::string>>& overrides,
                          std::uint64_t seed, SimTime duration);

}  // namespace ivn
