#include <algorithm>
#include <deque>
#include <numeric>
#include <set>

#include "ivnsim/andl.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/ethernet.hpp"

namespace ivn::andl {

namespace {

struct Ctx {
  const Ast& ast;
  std::vector<Diagnostic> diags;
  NetworkModel model;

  void error(SourcePos pos, const std::string& msg) { diags.push_back({pos, msg}); }
};

const Quantity* get_quantity(const std::vector<Property>& props, const std::string& name) {
  for (const auto& p : props) {
    if (p.name == name) return std::get_if<Quantity>(&p.value);
  }
  return nullptr;
}

const std::string* get_ident(const std::vector<Property>& props, const std::string& name) {
  for (const auto& p : props) {
    if (p.name == name) return std::get_if<std::string>(&p.value);
  }
  return nullptr;
}

bool quantity_as_time(const Quantity& q, SimTime& out) {
  if (q.kind == Quantity::Kind::Time) {
    out = SimTime::ps(q.value);
    return true;
  }
  if (q.kind == Quantity::Kind::Plain && q.plain_den == 1) {
    out = SimTime::ps(q.plain_num);  // bare number: picoseconds
    return true;
  }
  return false;
}

bool quantity_as_bytes(const Quantity& q, std::int64_t& out) {
  if (q.kind == Quantity::Kind::Bytes) {
    out = q.value;
    return true;
  }
  if (q.kind == Quantity::Kind::Plain && q.plain_den == 1) {
    out = q.plain_num;
    return true;
  }
  return false;
}

void apply_clock_prop(Ctx& ctx, ResolvedDevice& dev, const Property& p, bool& handled) {
  handled = true;
  const auto* q = std::get_if<Quantity>(&p.value);
  SimTime t;
  if (p.name == "drift_ppm") {
    if (!q || q->kind != Quantity::Kind::Plain) {
      ctx.error(p.pos, "drift_ppm expects a plain number");
      return;
    }
    dev.clock.drift_ppm_num = q->plain_num;
    dev.clock.drift_ppm_den = q->plain_den;
    const std::int64_t mag = q->plain_num < 0 ? -q->plain_num : q->plain_num;
    if (mag >= 10'000 * q->plain_den) ctx.error(p.pos, "drift_ppm out of range (|x| < 10000)");
  } else if (p.name == "drift_ppm_neg") {
    // convenience for negative drift, since the grammar has no unary minus
    if (!q || q->kind != Quantity::Kind::Plain) {
      ctx.error(p.pos, "drift_ppm_neg expects a plain number");
      return;
    }
    dev.clock.drift_ppm_num = -q->plain_num;
    dev.clock.drift_ppm_den = q->plain_den;
  } else if (p.name == "tick") {
    if (!q || !quantity_as_time(*q, t) || t < SimTime::ps(1)) {
      ctx.error(p.pos, "tick expects a time >= 1ps");
      return;
    }
    dev.clock.tick_length = t;
  } else if (p.name == "sync_interval") {
    if (!q || !quantity_as_time(*q, t) || t <= SimTime::zero()) {
      ctx.error(p.pos, "sync_interval expects a positive time");
      return;
    }
    dev.clock.sync_interval = t;
  } else if (p.name == "sync_precision") {
    if (!q || !quantity_as_time(*q, t) || t < SimTime::zero()) {
      ctx.error(p.pos, "sync_precision expects a non-negative time");
      return;
    }
    dev.clock.sync_precision = t;
  } else {
    handled = false;
  }
}

void resolve_devices(Ctx& ctx) {
  std::set<std::string> names;
  for (const auto& d : ctx.ast.devices) {
    if (!names.insert(d.name).second) {
      ctx.error(d.pos, "duplicate identifier '" + d.name + "'");
      continue;
    }
    ResolvedDevice dev;
    dev.name = d.name;
    if (d.kind == "node") dev.kind = DeviceKind::Node;
    else if (d.kind == "gateway") dev.kind = DeviceKind::Gateway;
    else if (d.kind == "switch") dev.kind = DeviceKind::Switch;
    else if (d.kind == "canLink") dev.kind = DeviceKind::CanBus;
    else {
      ctx.error(d.pos, "unsupported device kind '" + d.kind + "'");
      continue;
    }
    dev.processing_delay =
        (dev.kind == DeviceKind::Switch || dev.kind == DeviceKind::Gateway) ? SimTime::us(8)
                                                                            : SimTime::zero();
    dev.can_bitrate = dev.kind == DeviceKind::CanBus ? 500'000 : 0;
    for (const auto& p : d.props) {
      bool handled = false;
      apply_clock_prop(ctx, dev, p, handled);
      if (handled) continue;
      const auto* q = std::get_if<Quantity>(&p.value);
      if (p.name == "processing") {
        SimTime t;
        if (!q || !quantity_as_time(*q, t) || t < SimTime::zero()) {
          ctx.error(p.pos, "processing expects a non-negative time");
        } else {
          dev.processing_delay = t;
        }
      } else if (p.name == "bitrate" && dev.kind == DeviceKind::CanBus) {
        if (!q || q->kind != Quantity::Kind::Rate || q->value <= 0) {
          ctx.error(p.pos, "bitrate expects a positive rate");
        } else {
          dev.can_bitrate = static_cast<std::uint64_t>(q->value);
        }
      } else if (p.name == "queue_capacity") {
        if (!q || q->kind != Quantity::Kind::Plain || q->plain_den != 1 || q->plain_num < 0) {
          ctx.error(p.pos, "queue_capacity expects a non-negative integer");
        } else {
          dev.queue_capacity = static_cast<std::uint64_t>(q->plain_num);
        }
      } else {
        ctx.error(p.pos, "unsupported device parameter '" + p.name + "'");
      }
    }
    ctx.model.devices.push_back(std::move(dev));
  }
  ctx.model.ports.resize(ctx.model.devices.size());
}

const TypeDef* find_type(const Ast& ast, const std::string& ref) {
  for (const auto& t : ast.types) {
    if (t.group + "." + t.name == ref || t.name == ref) return &t;
  }
  return nullptr;
}

void resolve_segments(Ctx& ctx) {
  std::set<std::string> names;
  for (const auto& seg : ctx.ast.segments) {
    if (!names.insert(seg.name).second) {
      ctx.error(seg.pos, "duplicate identifier '" + seg.name + "'");
      continue;
    }
    ResolvedSegment rs;
    rs.name = seg.name;
    const std::uint32_t seg_idx = static_cast<std::uint32_t>(ctx.model.segments.size());
    bool has_can = false;
    bool has_eth = false;

    for (const auto& conn : seg.connections) {
      const auto a = ctx.model.device_index(conn.a);
      const auto b = ctx.model.device_index(conn.b);
      if (!a) {
        ctx.error(conn.pos, "undefined device '" + conn.a + "'");
        continue;
      }
      if (!b) {
        ctx.error(conn.pos, "undefined device '" + conn.b + "'");
        continue;
      }
      const bool a_bus = ctx.model.devices[*a].kind == DeviceKind::CanBus;
      const bool b_bus = ctx.model.devices[*b].kind == DeviceKind::CanBus;
      if (a_bus && b_bus) {
        ctx.error(conn.pos, "cannot connect two CAN busses directly");
        continue;
      }
      if (a_bus || b_bus) {
        has_can = true;
        if (conn.link) ctx.error(conn.pos, "CAN attachments take no link type");
        const std::uint32_t node = a_bus ? *b : *a;
        const std::uint32_t bus = a_bus ? *a : *b;
        ctx.model.can_attachments.push_back({node, bus, seg_idx});
        continue;
      }
      has_eth = true;
      std::uint64_t rate = 0;
      SimTime prop_delay;
      std::vector<Property> link_props;
      if (conn.link) {
        if (!conn.link->type_ref.empty()) {
          const TypeDef* t = find_type(ctx.ast, conn.link->type_ref);
          if (!t) {
            ctx.error(conn.link->pos, "undefined type '" + conn.link->type_ref + "'");
            continue;
          }
          if (t->kind != "ethernetLink") {
            ctx.error(conn.link->pos, "type '" + conn.link->type_ref + "' is not an ethernetLink");
            continue;
          }
          link_props = t->props;
          // stencil refinement: instantiation overrides win
          for (const auto& o : conn.link->props) link_props.push_back(o);
        } else {
          if (conn.link->inline_kind != "ethernetLink") {
            ctx.error(conn.link->pos,
                      "unsupported link kind '" + conn.link->inline_kind + "'");
            continue;
          }
          link_props = conn.link->props;
        }
      } else {
        ctx.error(conn.pos, "Ethernet connection needs a link type");
        continue;
      }
      for (auto it = link_props.rbegin(); it != link_props.rend(); ++it) {
        if (it->name == "bandwidth" && rate == 0) {
          const auto* q = std::get_if<Quantity>(&it->value);
          if (!q || q->kind != Quantity::Kind::Rate || q->value <= 0) {
            ctx.error(it->pos, "bandwidth expects a positive rate");
          } else {
            rate = static_cast<std::uint64_t>(q->value);
          }
        } else if (it->name == "propagation" && prop_delay == SimTime::zero()) {
          const auto* q = std::get_if<Quantity>(&it->value);
          SimTime t;
          if (!q || !quantity_as_time(*q, t) || t < SimTime::zero()) {
            ctx.error(it->pos, "propagation expects a non-negative time");
          } else {
            prop_delay = t;
          }
        } else if (it->name != "bandwidth" && it->name != "propagation") {
          ctx.error(it->pos, "unsupported link parameter '" + it->name + "'");
        }
      }
      if (rate == 0) {
        ctx.error(conn.pos, "link has no bandwidth");
        continue;
      }
      ResolvedPort pa;
      pa.device = *a;
      pa.port = static_cast<std::uint32_t>(ctx.model.ports[*a].size());
      pa.peer_device = *b;
      pa.rate_bps = rate;
      pa.propagation = prop_delay;
      pa.segment = seg_idx;
      ResolvedPort pb = pa;
      pb.device = *b;
      pb.port = static_cast<std::uint32_t>(ctx.model.ports[*b].size());
      pb.peer_device = *a;
      pa.peer_port = pb.port;
      pb.peer_port = pa.port;
      ctx.model.ports[*a].push_back(pa);
      ctx.model.ports[*b].push_back(pb);
    }

    if (has_can && has_eth) {
      ctx.error(seg.pos, "segment '" + seg.name + "' mixes CAN and Ethernet connections");
    }
    rs.type = has_can ? ResolvedSegment::Type::Can : ResolvedSegment::Type::Ethernet;
    ctx.model.segments.push_back(std::move(rs));
  }
}

std::vector<std::uint32_t> find_route(const NetworkModel& model, std::uint32_t from,
                                      std::uint32_t to) {
  // Edges: ethernet links and CAN attachments, in declaration order.
  const std::size_t n = model.devices.size();
  std::vector<std::int32_t> prev(n, -1);
  std::vector<bool> seen(n, false);
  std::deque<std::uint32_t> frontier;
  frontier.push_back(from);
  seen[from] = true;
  while (!frontier.empty()) {
    const std::uint32_t d = frontier.front();
    frontier.pop_front();
    if (d == to) break;
    auto visit = [&](std::uint32_t next) {
      if (!seen[next]) {
        seen[next] = true;
        prev[next] = static_cast<std::int32_t>(d);
        frontier.push_back(next);
      }
    };
    for (const auto& p : model.ports[d]) visit(p.peer_device);
    for (const auto& att : model.can_attachments) {
      if (att.node == d) visit(att.bus);
      if (att.bus == d) visit(att.node);
    }
  }
  if (!seen[to]) return {};
  std::vector<std::uint32_t> path;
  for (std::int32_t d = static_cast<std::int32_t>(to); d != -1;
       d = prev[static_cast<std::size_t>(d)]) {
    path.push_back(static_cast<std::uint32_t>(d));
    if (static_cast<std::uint32_t>(d) == from) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

void resolve_messages(Ctx& ctx) {
  std::set<std::string> names;
  std::map<std::uint32_t, std::uint32_t> bus_segment;  // bus device -> segment
  for (const auto& att : ctx.model.can_attachments) bus_segment[att.bus] = att.segment;

  for (const auto& m : ctx.ast.messages) {
    if (!names.insert(m.name).second) {
      ctx.error(m.pos, "duplicate identifier '" + m.name + "'");
      continue;
    }
    ResolvedMessage msg;
    msg.name = m.name;
    const auto sender = ctx.model.device_index(m.sender);
    if (!sender) {
      ctx.error(m.pos, "undefined sender '" + m.sender + "' in message '" + m.name + "'");
      continue;
    }
    msg.sender = *sender;
    if (m.receivers.empty()) {
      ctx.error(m.pos, "message '" + m.name + "' has no receivers");
      continue;
    }
    bool receivers_ok = true;
    for (const auto& r : m.receivers) {
      const auto idx = ctx.model.device_index(r);
      if (!idx) {
        ctx.error(m.pos, "undefined receiver '" + r + "' in message '" + m.name + "'");
        receivers_ok = false;
        continue;
      }
      msg.receivers.push_back(*idx);
    }
    if (!receivers_ok) continue;

    for (const auto& p : m.props) {
      const auto* q = std::get_if<Quantity>(&p.value);
      if (p.name == "payload") {
        std::int64_t bytes = 0;
        if (!q || !quantity_as_bytes(*q, bytes) || bytes < 0) {
          ctx.error(p.pos, "payload expects a byte count");
        } else {
          msg.payload = static_cast<std::uint32_t>(bytes);
        }
      } else if (p.name == "period") {
        SimTime t;
        if (!q || !quantity_as_time(*q, t) || t <= SimTime::zero()) {
          ctx.error(p.pos, "period expects a positive time");
        } else {
          msg.period = t;
        }
      } else if (p.name == "start") {
        SimTime t;
        if (!q || !quantity_as_time(*q, t) || t < SimTime::zero()) {
          ctx.error(p.pos, "start expects a non-negative time");
        } else {
          msg.start = t;
        }
      } else if (p.name == "burstBytes") {
        std::int64_t bytes = 0;
        if (!q || !quantity_as_bytes(*q, bytes) || bytes <= 0) {
          ctx.error(p.pos, "burstBytes expects a positive byte count");
        } else {
          msg.burst_total_bytes = static_cast<std::uint64_t>(bytes);
        }
      } else {
        ctx.error(p.pos, "unsupported message parameter '" + p.name + "'");
      }
    }

    // routes, one per receiver
    bool routed = true;
    for (const std::uint32_t r : msg.receivers) {
      auto path = find_route(ctx.model, msg.sender, r);
      if (path.empty()) {
        ctx.error(m.pos, "unreachable receiver '" + ctx.model.devices[r].name +
                             "' for message '" + m.name + "'");
        routed = false;
        continue;
      }
      msg.routes.push_back(std::move(path));
    }
    if (!routed) continue;

    // mappings
    for (const auto& entry : m.mappings) {
      if (entry.kind == "pool") {
        const auto gw = ctx.model.device_index(entry.scope);
        if (!gw || ctx.model.devices[*gw].kind != DeviceKind::Gateway) {
          ctx.error(entry.pos, "pool mapping scope '" + entry.scope + "' is not a gateway");
          continue;
        }
        PoolAssignment pa;
        pa.gateway = *gw;
        pa.pool = entry.pool_name;
        const Quantity* q = get_quantity(entry.params, "holdUp");
        SimTime t;
        if (!q || !quantity_as_time(*q, t) || t < SimTime::zero()) {
          ctx.error(entry.pos, "pool needs holdUp time");
          continue;
        }
        pa.holdup = t;
        msg.pools.push_back(std::move(pa));
        continue;
      }
      const auto seg = ctx.model.segment_index(entry.scope);
      if (!seg) {
        ctx.error(entry.pos, "undefined segment '" + entry.scope + "' in mapping");
        continue;
      }
      SegmentMapping sm;
      if (entry.kind == "can") {
        sm.kind = SegmentMapping::Kind::Can;
        const Quantity* q = get_quantity(entry.params, "id");
        if (!q || q->kind != Quantity::Kind::Plain || q->plain_den != 1 || q->plain_num < 0 ||
            q->plain_num >= 2048) {
          ctx.error(entry.pos, "can mapping needs id in [0, 2047]");
          continue;
        }
        sm.can.id = static_cast<std::uint16_t>(q->plain_num);
      } else if (entry.kind == "tt") {
        sm.kind = SegmentMapping::Kind::Tt;
        const Quantity* q = get_quantity(entry.params, "ctID");
        if (!q || q->kind != Quantity::Kind::Plain || q->plain_den != 1 || q->plain_num <= 0) {
          ctx.error(entry.pos, "tt mapping needs positive ctID");
          continue;
        }
        sm.tt.ct_id = static_cast<std::uint32_t>(q->plain_num);
      } else if (entry.kind == "rc") {
        sm.kind = SegmentMapping::Kind::Rc;
        const Quantity* vq = get_quantity(entry.params, "vlID");
        if (!vq || vq->kind != Quantity::Kind::Plain || vq->plain_den != 1 || vq->plain_num <= 0) {
          ctx.error(entry.pos, "rc mapping needs positive vlID");
          continue;
        }
        sm.rc.vl_id = static_cast<std::uint32_t>(vq->plain_num);
        if (const Quantity* bq = get_quantity(entry.params, "bag")) {
          SimTime t;
          if (!quantity_as_time(*bq, t) || t <= SimTime::zero()) {
            ctx.error(entry.pos, "bag expects a positive time");
            continue;
          }
          sm.rc.bag = t;
        }
        if (const Quantity* pq = get_quantity(entry.params, "priority")) {
          if (pq->plain_num < 0 || pq->plain_num > 7) {
            ctx.error(entry.pos, "priority must be 0..7");
            continue;
          }
          sm.rc.priority = static_cast<std::uint8_t>(pq->plain_num);
        }
        if (const std::string* pol = get_ident(entry.params, "police")) {
          sm.rc.police = *pol == "true" || *pol == "on";
        }
        if (const Quantity* jq = get_quantity(entry.params, "jitter_allowance")) {
          SimTime t;
          if (quantity_as_time(*jq, t) && t >= SimTime::zero()) sm.rc.jitter_allowance = t;
        }
        if (const Quantity* mq = get_quantity(entry.params, "max_frame")) {
          std::int64_t b = 0;
          if (quantity_as_bytes(*mq, b) && b > 0) {
            sm.rc.max_frame_bytes = static_cast<std::uint32_t>(b);
          }
        }
      } else if (entry.kind == "avb") {
        sm.kind = SegmentMapping::Kind::Avb;
        const Quantity* sq = get_quantity(entry.params, "streamID");
        if (!sq || sq->kind != Quantity::Kind::Plain || sq->plain_den != 1 || sq->plain_num <= 0) {
          ctx.error(entry.pos, "avb mapping needs positive streamID");
          continue;
        }
        sm.avb.stream_id = static_cast<std::uint32_t>(sq->plain_num);
        if (const std::string* cls = get_ident(entry.params, "class")) {
          if (*cls == "A") sm.avb.sr_class = 'A';
          else if (*cls == "B") sm.avb.sr_class = 'B';
          else {
            ctx.error(entry.pos, "avb class must be A or B");
            continue;
          }
        }
        if (const Quantity* iq = get_quantity(entry.params, "idleSlope")) {
          if (iq->kind != Quantity::Kind::Rate || iq->value <= 0) {
            ctx.error(entry.pos, "idleSlope expects a positive rate");
            continue;
          }
          sm.avb.idle_slope_bps = static_cast<std::uint64_t>(iq->value);
        }
      } else if (entry.kind == "be") {
        sm.kind = SegmentMapping::Kind::Be;
        if (const Quantity* pq = get_quantity(entry.params, "priority")) {
          if (pq->plain_num < 0 || pq->plain_num > 7) {
            ctx.error(entry.pos, "priority must be 0..7");
            continue;
          }
          sm.be.priority = static_cast<std::uint8_t>(pq->plain_num);
        }
      } else {
        ctx.error(entry.pos, "unsupported mapping kind '" + entry.kind + "'");
        continue;
      }
      if (msg.mapping_by_segment.count(*seg)) {
        ctx.error(entry.pos, "duplicate mapping for segment '" + entry.scope + "'");
        continue;
      }
      msg.mapping_by_segment[*seg] = sm;
    }

    // every crossed segment needs a mapping with a payload within limits
    std::set<std::uint32_t> crossed;
    for (const auto& route : msg.routes) {
      for (std::size_t i = 0; i + 1 < route.size(); ++i) {
        const std::uint32_t a = route[i];
        const std::uint32_t b = route[i + 1];
        bool found = false;
        for (const auto& p : ctx.model.ports[a]) {
          if (p.peer_device == b) {
            crossed.insert(p.segment);
            found = true;
            break;
          }
        }
        if (!found) {
          const std::uint32_t bus =
              ctx.model.devices[a].kind == DeviceKind::CanBus ? a : b;
          auto it = bus_segment.find(bus);
          if (it != bus_segment.end()) crossed.insert(it->second);
        }
      }
    }
    for (const std::uint32_t seg : crossed) {
      auto it = msg.mapping_by_segment.find(seg);
      if (it == msg.mapping_by_segment.end()) {
        ctx.error(m.pos, "message '" + m.name + "' crosses segment '" +
                             ctx.model.segments[seg].name + "' without a mapping");
        continue;
      }
      const bool is_can = ctx.model.segments[seg].type == ResolvedSegment::Type::Can;
      if (is_can && it->second.kind != SegmentMapping::Kind::Can) {
        ctx.error(m.pos, "segment '" + ctx.model.segments[seg].name + "' is CAN but mapping isn't");
      }
      if (!is_can && it->second.kind == SegmentMapping::Kind::Can) {
        ctx.error(m.pos, "can mapping on Ethernet segment '" + ctx.model.segments[seg].name + "'");
      }
      if (is_can && msg.payload > 8) {
        ctx.error(m.pos, "message '" + m.name + "' payload " + std::to_string(msg.payload) +
                             " B exceeds the 8 B CAN maximum");
      }
      if (!is_can && msg.payload > 1500) {
        ctx.error(m.pos, "message '" + m.name + "' payload exceeds 1500 B");
      }
    }

    ctx.model.messages.push_back(std::move(msg));
  }

  // pool aggregate bound: worst-case flush must fit one Ethernet payload
  std::map<std::pair<std::uint32_t, std::string>, std::vector<std::uint32_t>> pools;
  for (std::uint32_t mi = 0; mi < ctx.model.messages.size(); ++mi) {
    for (const auto& pa : ctx.model.messages[mi].pools) {
      pools[{pa.gateway, pa.pool}].push_back(mi);
    }
  }
  for (const auto& [key, members] : pools) {
    SimTime min_holdup = SimTime::max();
    for (const std::uint32_t mi : members) {
      for (const auto& pa : ctx.model.messages[mi].pools) {
        if (pa.gateway == key.first && pa.pool == key.second && pa.holdup < min_holdup) {
          min_holdup = pa.holdup;
        }
      }
    }
    std::uint64_t worst_bytes = 1;  // count byte
    std::uint64_t worst_frames = 0;
    for (const std::uint32_t mi : members) {
      const auto& msg = ctx.model.messages[mi];
      std::uint64_t occurrences = 1;
      if (msg.period > SimTime::zero()) {
        occurrences = static_cast<std::uint64_t>(min_holdup / msg.period) + 1;
      }
      if (msg.burst_total_bytes > 0 && msg.payload > 0) {
        occurrences *= (msg.burst_total_bytes + msg.payload - 1) / msg.payload;
      }
      worst_frames += occurrences;
      worst_bytes += occurrences * (5ull + msg.payload);
    }
    if (worst_bytes > 1500 || worst_frames > 255) {
      const auto& any = ctx.model.messages[members.front()];
      ctx.error({0, 0}, "pool '" + key.second + "' at gateway '" +
                            ctx.model.devices[key.first].name +
                            "' can overflow one Ethernet frame (worst case " +
                            std::to_string(worst_bytes) + " B, " +
                            std::to_string(worst_frames) + " frames; first member '" +
                            any.name + "')");
    }
  }
}

bool apply_overrides(Ctx& ctx, const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) {
    auto fail = [&](const std::string& why) {
      ctx.error({0, 0}, "override " + key + "=" + value + ": " + why);
      return false;
    };
    if (key == "cross_traffic_frame_size") {
      const auto q = parse_quantity(value);
      if (!q || (q->kind != Quantity::Kind::Plain && q->kind != Quantity::Kind::Bytes)) {
        return fail("expected a byte count");
      }
      const std::int64_t wire = q->kind == Quantity::Kind::Bytes ? q->value : q->plain_num;
      for (auto& msg : ctx.model.messages) {
        bool all_be = !msg.mapping_by_segment.empty();
        for (const auto& [seg, sm] : msg.mapping_by_segment) {
          if (sm.kind != SegmentMapping::Kind::Be) all_be = false;
        }
        if (!all_be) continue;
        if (wire <= 0) {
          msg.enabled = false;
        } else {
          msg.enabled = true;
          msg.payload = static_cast<std::uint32_t>(std::max<std::int64_t>(1, wire - 18));
        }
      }
      continue;
    }
    if (key == "clock.perfect") {
      for (auto& dev : ctx.model.devices) {
        dev.clock.drift_ppm_num = 0;
        dev.clock.sync_precision = SimTime::zero();
        dev.clock.tick_length = SimTime::ps(1);
      }
      continue;
    }
    if (key.rfind("msg.", 0) == 0) {
      const auto dot = key.find('.', 4);
      if (dot == std::string::npos) return fail("expected msg.<name>.<param>");
      const std::string name = key.substr(4, dot - 4);
      const std::string param = key.substr(dot + 1);
      ResolvedMessage* msg = nullptr;
      for (auto& m : ctx.model.messages) {
        if (m.name == name) msg = &m;
      }
      if (!msg) return fail("unknown message '" + name + "'");
      const auto q = parse_quantity(value);
      if (param == "payload") {
        std::int64_t b = 0;
        if (!q || !quantity_as_bytes(*q, b) || b < 0) return fail("expected bytes");
        msg->payload = static_cast<std::uint32_t>(b);
      } else if (param == "period") {
        SimTime t;
        if (!q || !quantity_as_time(*q, t) || t <= SimTime::zero()) return fail("expected time");
        msg->period = t;
      } else if (param == "start") {
        SimTime t;
        if (!q || !quantity_as_time(*q, t) || t < SimTime::zero()) return fail("expected time");
        msg->start = t;
      } else if (param == "burst_bytes") {
        std::int64_t b = 0;
        if (!q || !quantity_as_bytes(*q, b) || b < 0) return fail("expected bytes");
        msg->burst_total_bytes = static_cast<std::uint64_t>(b);
      } else if (param == "enabled") {
        msg->enabled = value == "1" || value == "true";
      } else {
        return fail("unknown message parameter '" + param + "'");
      }
      continue;
    }
    if (key.rfind("device.", 0) == 0) {
      const auto dot = key.find('.', 7);
      if (dot == std::string::npos) return fail("expected device.<name>.<param>");
      const std::string name = key.substr(7, dot - 7);
      const std::string param = key.substr(dot + 1);
      ResolvedDevice* dev = nullptr;
      for (auto& d : ctx.model.devices) {
        if (d.name == name) dev = &d;
      }
      if (!dev) return fail("unknown device '" + name + "'");
      const auto q = parse_quantity(value);
      SimTime t;
      if (param == "drift_ppm") {
        // accept a leading '-' here even though the grammar doesn't
        std::string v = value;
        std::int64_t sign = 1;
        if (!v.empty() && v[0] == '-') {
          sign = -1;
          v = v.substr(1);
        }
        const auto qq = parse_quantity(v);
        if (!qq || qq->kind != Quantity::Kind::Plain) return fail("expected a number");
        dev->clock.drift_ppm_num = sign * qq->plain_num;
        dev->clock.drift_ppm_den = qq->plain_den;
      } else if (param == "sync_precision") {
        if (!q || !quantity_as_time(*q, t)) return fail("expected time");
        dev->clock.sync_precision = t;
      } else if (param == "sync_interval") {
        if (!q || !quantity_as_time(*q, t) || t <= SimTime::zero()) return fail("expected time");
        dev->clock.sync_interval = t;
      } else if (param == "tick") {
        if (!q || !quantity_as_time(*q, t) || t < SimTime::ps(1)) return fail("expected time");
        dev->clock.tick_length = t;
      } else if (param == "processing") {
        if (!q || !quantity_as_time(*q, t) || t < SimTime::zero()) return fail("expected time");
        dev->processing_delay = t;
      } else {
        return fail("unknown device parameter '" + param + "'");
      }
      continue;
    }
    return fail("unrecognized override key");
  }
  return true;
}

}  // namespace

std::optional<std::uint32_t> NetworkModel::device_index(const std::string& name) const {
  for (std::uint32_t i = 0; i < devices.size(); ++i) {
    if (devices[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> NetworkModel::segment_index(const std::string& name) const {
  for (std::uint32_t i = 0; i < segments.size(); ++i) {
    if (segments[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> NetworkModel::port_towards(std::uint32_t device,
                                                        std::uint32_t peer) const {
  for (const auto& p : ports[device]) {
    if (p.peer_device == peer) return p.port;
  }
  return std::nullopt;
}

ValidateResult validate(const Ast& ast,
                        const std::vector<std::pair<std::string, std::string>>& overrides) {
  Ctx ctx{ast, {}, {}};
  ctx.model.name = ast.network_name;
  ctx.model.inline_ini = ast.inline_ini;
  resolve_devices(ctx);
  resolve_segments(ctx);
  if (ctx.diags.empty()) resolve_messages(ctx);
  if (ctx.diags.empty()) apply_overrides(ctx, overrides);
  if (ctx.diags.empty()) {
    try {
      ctx.model.schedule = generate_tt_schedule(ctx.model);
    } catch (const SimError& e) {
      ctx.error({0, 0}, e.what());
    }
  }
  ValidateResult result;
  result.diagnostics = std::move(ctx.diags);
  if (result.diagnostics.empty()) result.model = std::move(ctx.model);
  return result;
}

}  // namespace ivn::andl
