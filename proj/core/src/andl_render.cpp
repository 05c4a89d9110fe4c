#include <set>
#include <sstream>

#include "ivnsim/andl.hpp"

namespace ivn::andl {

namespace {

std::string drift_str(std::int64_t num, std::int64_t den) {
  if (den == 1) return std::to_string(num);
  std::string digits = std::to_string(num);
  std::string den_s = std::to_string(den);
  const std::size_t frac = den_s.size() - 1;  // den is a power of ten
  while (digits.size() <= frac) digits.insert(digits.begin(), '0');
  digits.insert(digits.end() - static_cast<std::ptrdiff_t>(frac), '.');
  return digits;
}

const char* kind_str(DeviceKind k) {
  switch (k) {
    case DeviceKind::Node: return "node";
    case DeviceKind::Gateway: return "gateway";
    case DeviceKind::Switch: return "switch";
    case DeviceKind::CanBus: return "canLink";
  }
  return "node";
}

}  // namespace

std::string render(const NetworkModel& model) {
  std::ostringstream out;
  out << "network " << model.name << " {\n";
  if (!model.inline_ini.empty()) {
    out << "  inline ini {\n";
    for (const auto& [k, v] : model.inline_ini) out << "    " << k << " = " << v << "\n";
    out << "  }\n";
  }

  out << "  devices {\n";
  for (const auto& dev : model.devices) {
    out << "    " << kind_str(dev.kind) << " " << dev.name << " {";
    if (dev.kind == DeviceKind::CanBus) {
      out << " bitrate " << dev.can_bitrate << "b/s;";
    } else {
      if (dev.clock.drift_ppm_num >= 0) {
        out << " drift_ppm " << drift_str(dev.clock.drift_ppm_num, dev.clock.drift_ppm_den) << ";";
      } else {
        out << " drift_ppm_neg " << drift_str(-dev.clock.drift_ppm_num, dev.clock.drift_ppm_den)
            << ";";
      }
      out << " tick " << dev.clock.tick_length.ticks() << "ps;";
      out << " sync_interval " << dev.clock.sync_interval.ticks() << "ps;";
      out << " sync_precision " << dev.clock.sync_precision.ticks() << "ps;";
      if (dev.kind != DeviceKind::Node) {
        out << " processing " << dev.processing_delay.ticks() << "ps;";
      }
      if (dev.queue_capacity) out << " queue_capacity " << dev.queue_capacity << ";";
    }
    out << " };\n";
  }
  out << "  }\n";

  out << "  connections {\n";
  for (std::uint32_t s = 0; s < model.segments.size(); ++s) {
    out << "    segment " << model.segments[s].name << " {\n";
    if (model.segments[s].type == ResolvedSegment::Type::Can) {
      for (const auto& att : model.can_attachments) {
        if (att.segment != s) continue;
        out << "      " << model.devices[att.node].name << " <--> "
            << model.devices[att.bus].name << ";\n";
      }
    } else {
      std::set<std::pair<std::uint32_t, std::uint32_t>> done;
      for (std::uint32_t d = 0; d < model.ports.size(); ++d) {
        for (const auto& p : model.ports[d]) {
          if (p.segment != s) continue;
          const auto key = std::minmax(p.device, p.peer_device);
          if (!done.insert({key.first, key.second}).second) continue;
          out << "      " << model.devices[p.device].name << " <--> {ethernetLink { bandwidth "
              << p.rate_bps << "b/s; propagation " << p.propagation.ticks() << "ps; }} <--> "
              << model.devices[p.peer_device].name << ";\n";
        }
      }
    }
    out << "    }\n";
  }
  out << "  }\n";

  out << "  communication {\n";
  for (const auto& msg : model.messages) {
    out << "    message " << msg.name << " {\n";
    out << "      sender " << model.devices[msg.sender].name << ";\n";
    out << "      receivers ";
    for (std::size_t i = 0; i < msg.receivers.size(); ++i) {
      if (i) out << ", ";
      out << model.devices[msg.receivers[i]].name;
    }
    out << ";\n";
    out << "      payload " << msg.payload << "B;\n";
    if (msg.period > SimTime::zero()) out << "      period " << msg.period.ticks() << "ps;\n";
    if (msg.start > SimTime::zero()) out << "      start " << msg.start.ticks() << "ps;\n";
    if (msg.burst_total_bytes) out << "      burstBytes " << msg.burst_total_bytes << "B;\n";
    out << "      mapping {\n";
    for (const auto& [seg, sm] : msg.mapping_by_segment) {
      out << "        " << model.segments[seg].name << ": ";
      switch (sm.kind) {
        case SegmentMapping::Kind::Can:
          out << "can { id " << sm.can.id << "; }";
          break;
        case SegmentMapping::Kind::Tt:
          out << "tt { ctID " << sm.tt.ct_id << "; }";
          break;
        case SegmentMapping::Kind::Rc:
          out << "rc { vlID " << sm.rc.vl_id << "; bag " << sm.rc.bag.ticks() << "ps; priority "
              << int(sm.rc.priority) << ";";
          if (sm.rc.police) {
            out << " police on; jitter_allowance " << sm.rc.jitter_allowance.ticks()
                << "ps; max_frame " << sm.rc.max_frame_bytes << "B;";
          }
          out << " }";
          break;
        case SegmentMapping::Kind::Avb:
          out << "avb { streamID " << sm.avb.stream_id << "; class " << sm.avb.sr_class << ";";
          if (sm.avb.idle_slope_bps) out << " idleSlope " << sm.avb.idle_slope_bps << "b/s;";
          out << " }";
          break;
        case SegmentMapping::Kind::Be:
          out << "be { priority " << int(sm.be.priority) << "; }";
          break;
      }
      out << ";\n";
    }
    for (const auto& pa : msg.pools) {
      out << "        " << model.devices[pa.gateway].name << ": pool " << pa.pool
          << " { holdUp " << pa.holdup.ticks() << "ps; };\n";
    }
    out << "      }\n";
    out << "    }\n";
  }
  out << "  }\n";
  out << "}\n";
  return out.str();
}

std::string model_digest(const NetworkModel& model) {
  // Canonical semantic description; excludes the generated schedule (it is a
  // deterministic function of everything else) and source positions.
  std::ostringstream out;
  out << "net=" << model.name << ";";
  for (const auto& dev : model.devices) {
    out << "dev(" << dev.name << "," << kind_str(dev.kind) << ","
        << drift_str(dev.clock.drift_ppm_num, dev.clock.drift_ppm_den) << ","
        << dev.clock.tick_length.ticks() << "," << dev.clock.sync_interval.ticks() << ","
        << dev.clock.sync_precision.ticks() << "," << dev.processing_delay.ticks() << ","
        << dev.can_bitrate << "," << dev.queue_capacity << ");";
  }
  for (std::uint32_t d = 0; d < model.ports.size(); ++d) {
    for (const auto& p : model.ports[d]) {
      if (p.device > p.peer_device) continue;
      out << "link(" << model.devices[p.device].name << "," << model.devices[p.peer_device].name
          << "," << p.rate_bps << "," << p.propagation.ticks() << ","
          << model.segments[p.segment].name << ");";
    }
  }
  for (const auto& att : model.can_attachments) {
    out << "can(" << model.devices[att.node].name << "," << model.devices[att.bus].name << ","
        << model.segments[att.segment].name << ");";
  }
  for (const auto& msg : model.messages) {
    out << "msg(" << msg.name << ",s=" << model.devices[msg.sender].name << ",r=";
    for (const auto r : msg.receivers) out << model.devices[r].name << "+";
    out << ",p=" << msg.payload << ",T=" << msg.period.ticks() << ",st=" << msg.start.ticks()
        << ",b=" << msg.burst_total_bytes << ",en=" << msg.enabled;
    for (const auto& [seg, sm] : msg.mapping_by_segment) {
      out << ",map[" << model.segments[seg].name << "]=";
      switch (sm.kind) {
        case SegmentMapping::Kind::Can: out << "can:" << sm.can.id; break;
        case SegmentMapping::Kind::Tt: out << "tt:" << sm.tt.ct_id; break;
        case SegmentMapping::Kind::Rc:
          out << "rc:" << sm.rc.vl_id << ":" << sm.rc.bag.ticks() << ":" << int(sm.rc.priority)
              << ":" << sm.rc.police << ":" << sm.rc.jitter_allowance.ticks() << ":"
              << sm.rc.max_frame_bytes;
          break;
        case SegmentMapping::Kind::Avb:
          out << "avb:" << sm.avb.stream_id << ":" << sm.avb.sr_class << ":"
              << sm.avb.idle_slope_bps;
          break;
        case SegmentMapping::Kind::Be: out << "be:" << int(sm.be.priority); break;
      }
    }
    for (const auto& pa : msg.pools) {
      out << ",pool[" << model.devices[pa.gateway].name << "]=" << pa.pool << ":"
          << pa.holdup.ticks();
    }
    out << ");";
  }
  return out.str();
}

}  // namespace ivn::andl
