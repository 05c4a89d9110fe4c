#include "ivnsim/writers.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "ivnsim/error.hpp"

namespace ivn {

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t p) {
  return std::uint32_t(b[p]) | (std::uint32_t(b[p + 1]) << 8) |
         (std::uint32_t(b[p + 2]) << 16) | (std::uint32_t(b[p + 3]) << 24);
}

std::string i128_str(__int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  if (neg) v = -v;
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace

void PacketTrace::add(const EthernetFrame& frame, SimTime tx_start, std::uint32_t tx_node) {
  CapturedFrame cap;
  cap.timestamp = tx_start;
  cap.tx_node = tx_node;
  cap.src = frame.src;
  cap.dst = frame.dst;
  cap.priority = frame.priority;
  cap.cls = frame.tag.cls;
  cap.payload_len = frame.payload_len;
  cap.payload_bytes = frame.payload_bytes;
  frames_.push_back(std::move(cap));
}

void write_stats_csv(const StatsCollector& stats,
                     const std::map<std::string, std::string>& stream_class,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError(ErrorCode::Io, "cannot write " + path);
  out << "stream,class,count,min_ps,max_ps,mean_ps,jitter_ps,drops\n";
  for (const auto& [name, s] : stats.streams()) {
    auto cls = stream_class.count(name) ? stream_class.at(name) : "?";
    out << name << ',' << cls << ',' << s.count() << ','
        << (s.count() ? s.min().ticks() : 0) << ',' << s.max().ticks() << ','
        << s.mean_floor().ticks() << ',' << s.jitter().ticks() << ',' << stats.drops(name)
        << '\n';
  }
  // Buffer watermark rows: count = frame watermark, max_ps = byte watermark.
  for (const auto& [key, wm] : stats.watermarks()) {
    out << wm.queue << (wm.stream ? "." + std::to_string(wm.stream) : std::string()) << ','
        << wm.cls << ',' << wm.max_frames << ",0," << wm.max_bytes << ",0,0,0\n";
  }
  if (!out) throw SimError(ErrorCode::Io, "write failed: " + path);
}

void write_stats_json(const StatsCollector& stats,
                      const std::map<std::string, std::string>& stream_class,
                      const std::string& digest,
                      const std::map<std::string, std::string>& metadata,
                      const std::string& path) {
  nlohmann::ordered_json doc;
  doc["config_digest"] = digest;
  auto& streams = doc["streams"];
  streams = nlohmann::ordered_json::array();
  for (const auto& [name, s] : stats.streams()) {
    nlohmann::ordered_json row;
    row["stream"] = name;
    row["class"] = stream_class.count(name) ? stream_class.at(name) : "?";
    row["count"] = s.count();
    row["min_ps"] = s.count() ? s.min().ticks() : 0;
    row["max_ps"] = s.max().ticks();
    row["mean_ps"] = s.mean_floor().ticks();
    row["sum_ps"] = i128_str(s.sum_ps());
    row["jitter_ps"] = s.jitter().ticks();
    row["drops"] = stats.drops(name);
    streams.push_back(std::move(row));
  }
  auto& buffers = doc["buffers"];
  buffers = nlohmann::ordered_json::array();
  for (const auto& [key, wm] : stats.watermarks()) {
    nlohmann::ordered_json row;
    row["queue"] = wm.queue;
    row["class"] = wm.cls;
    if (wm.stream) row["stream"] = wm.stream;
    row["max_frames"] = wm.max_frames;
    row["max_bytes"] = wm.max_bytes;
    buffers.push_back(std::move(row));
  }
  if (!metadata.empty()) {
    auto& meta = doc["metadata"];
    for (const auto& [k, v] : metadata) meta[k] = v;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError(ErrorCode::Io, "cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw SimError(ErrorCode::Io, "write failed: " + path);
}

void write_pcap(const PacketTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError(ErrorCode::Io, "cannot write " + path);
  put_u32(out, 0xa1b2c3d4);  // magic
  put_u16(out, 2);           // version major
  put_u16(out, 4);           // version minor
  put_u32(out, 0);           // thiszone
  put_u32(out, 0);           // sigfigs
  put_u32(out, 65535);       // snaplen
  put_u32(out, 1);           // linktype: Ethernet

  for (const auto& f : trace.frames()) {
    const std::int64_t ps = f.timestamp.ticks();
    const std::uint32_t ts_sec = static_cast<std::uint32_t>(ps / 1'000'000'000'000LL);
    const std::uint32_t ts_usec =
        static_cast<std::uint32_t>((ps % 1'000'000'000'000LL) / 1'000'000LL);

    std::vector<std::uint8_t> bytes;
    auto mac = [&](std::uint32_t node) {
      bytes.push_back(0x02);
      bytes.push_back(0x00);
      bytes.push_back(static_cast<std::uint8_t>((node >> 24) & 0xff));
      bytes.push_back(static_cast<std::uint8_t>((node >> 16) & 0xff));
      bytes.push_back(static_cast<std::uint8_t>((node >> 8) & 0xff));
      bytes.push_back(static_cast<std::uint8_t>(node & 0xff));
    };
    mac(f.dst);
    mac(f.src);
    bytes.push_back(0x81);  // 802.1Q tag carrying the class priority
    bytes.push_back(0x00);
    const std::uint16_t tci = static_cast<std::uint16_t>((f.priority & 0x7) << 13);
    bytes.push_back(static_cast<std::uint8_t>(tci >> 8));
    bytes.push_back(static_cast<std::uint8_t>(tci & 0xff));
    bytes.push_back(0x88);  // local experimental ethertype
    bytes.push_back(0xb5);
    const std::uint32_t padded = std::max<std::uint32_t>(f.payload_len, 46);
    for (std::uint32_t i = 0; i < padded; ++i) {
      bytes.push_back(i < f.payload_bytes.size() ? f.payload_bytes[i] : 0);
    }

    put_u32(out, ts_sec);
    put_u32(out, ts_usec);
    put_u32(out, static_cast<std::uint32_t>(bytes.size()));  // incl_len
    put_u32(out, static_cast<std::uint32_t>(bytes.size()));  // orig_len
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw SimError(ErrorCode::Io, "write failed: " + path);
}

std::vector<PcapRecord> read_pcap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError(ErrorCode::Io, "cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (data.size() < 24 || get_u32(data, 0) != 0xa1b2c3d4) {
    throw SimError(ErrorCode::Io, "not a classic pcap file: " + path);
  }
  std::vector<PcapRecord> records;
  std::size_t pos = 24;
  while (pos + 16 <= data.size()) {
    PcapRecord rec;
    rec.ts_sec = get_u32(data, pos);
    rec.ts_usec = get_u32(data, pos + 4);
    const std::uint32_t incl = get_u32(data, pos + 8);
    pos += 16;
    if (pos + incl > data.size()) throw SimError(ErrorCode::Io, "truncated pcap record");
    rec.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                     data.begin() + static_cast<std::ptrdiff_t>(pos + incl));
    pos += incl;
    records.push_back(std::move(rec));
  }
  return records;
}

std::string config_digest(const std::string& scenario_text,
                          const std::vector<std::pair<std::string, std::string>>& overrides,
                          std::uint64_t seed, SimTime duration) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::string& s) {
    for (char c : s) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  mix(scenario_text);
  auto sorted = overrides;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [k, v] : sorted) {
    mix(k);
    mix(v);
  }
  mix(std::to_string(seed));
  mix(std::to_string(duration.ticks()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace ivn
