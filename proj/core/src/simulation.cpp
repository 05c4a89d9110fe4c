#include "ivnsim/simulation.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "ivnsim/cbs.hpp"
#include "ivnsim/clock.hpp"
#include "ivnsim/error.hpp"
#include "ivnsim/ethernet.hpp"
#include "ivnsim/gateway.hpp"
#include "ivnsim/rate_constrained.hpp"
#include "ivnsim/rng.hpp"
#include "ivnsim/tt_schedule.hpp"

namespace ivn {

using andl::DeviceKind;
using andl::NetworkModel;
using andl::ResolvedMessage;
using andl::SegmentMapping;

namespace {

struct AvbQueue {
  std::deque<EthernetFrame> frames;
  CbsState cbs;
  bool transmitting = false;
  bool configured = false;

  CbsMode mode() const {
    if (transmitting) return CbsMode::Transmitting;
    return frames.empty() ? CbsMode::Idle : CbsMode::Waiting;
  }
  void advance(SimTime now) { cbs_advance(cbs, now, mode()); }
};

struct PortRt {
  std::uint32_t device = 0;
  std::uint32_t port = 0;
  std::uint32_t peer = 0;
  std::uint64_t rate = 0;
  SimTime propagation;
  std::uint32_t segment = 0;

  std::map<std::uint32_t, std::optional<EthernetFrame>> tt_slot;  // ct -> frame
  std::map<std::uint8_t, std::deque<EthernetFrame>, std::greater<std::uint8_t>> rc;
  AvbQueue avb_a;
  AvbQueue avb_b;
  std::deque<EthernetFrame> be;

  SimTime busy_until;  // port transmits until then (inter-frame gap included)
  bool has_tt = false;
  EventHandle retry = 0;
  std::uint64_t queued = 0;  // event-triggered frames currently held

  // (class name, stream) -> current frames/bytes, for watermark reporting
  std::map<std::pair<std::string, std::uint32_t>, std::pair<std::uint64_t, std::uint64_t>> fill;
};

struct DeviceRt {
  LocalClock clock;
  Rng rng{0};
  bool clock_perfect = true;
  std::vector<PortRt> ports;
  std::map<std::string, Pool> pools;
  std::map<std::string, EventHandle> pool_timer;
  std::map<std::string, SimTime> last_dispatch_local;  // per "port:ct"
  std::map<std::string, EventHandle> tt_timer;
};

struct BusRt {
  std::uint32_t device = 0;
  CanBus bus{500'000};
  std::vector<std::uint32_t> members;
  bool service_pending = false;
};

struct RcSource {
  BagState bag;
  std::deque<EthernetFrame> pending;
  bool release_pending = false;
};

}  // namespace

struct Simulation::Impl {
  NetworkModel model;
  std::uint64_t seed;
  EventQueue queue;
  StatsCollector stats;
  ConstraintChecker checker;
  PacketTrace trace;
  bool capture;
  std::uint64_t next_frame_id = 1;
  std::uint64_t tt_misses = 0;

  std::vector<DeviceRt> devices;
  std::vector<BusRt> buses;
  std::map<std::uint32_t, std::size_t> bus_index;    // device -> buses[] slot
  std::map<std::uint32_t, std::uint32_t> bus_segment;  // bus device -> segment

  // flow wiring
  std::vector<std::map<std::uint32_t, std::vector<std::uint32_t>>> next_eth;  // [flow][dev]
  std::vector<std::map<std::uint32_t, std::vector<std::uint32_t>>> next_can;  // [flow][dev]
  std::vector<std::set<std::uint32_t>> flow_receivers;
  std::map<std::pair<std::uint32_t, std::uint16_t>, std::uint32_t> can_id_flow;
  std::map<std::pair<std::uint32_t, std::uint32_t>, VlPolicer> policers;  // (dev, vl)
  std::map<std::uint32_t, RcSource> rc_sources;                           // flow -> source gate
  std::map<std::pair<std::uint32_t, std::string>, std::vector<std::uint32_t>> pool_flows;
  std::map<std::string, std::string> stream_class;
  std::vector<std::shared_ptr<std::function<void()>>> source_ticks;

  Impl(const NetworkModel& m, std::uint64_t s, std::vector<ConstraintRule> rules, bool cap)
      : model(m), seed(s), checker(std::move(rules)), capture(cap) {
    build();
  }

  // ------------------------------------------------------------------ build

  void build() {
    Rng root(seed);
    devices.resize(model.devices.size());
    for (std::uint32_t d = 0; d < model.devices.size(); ++d) {
      const auto& dev = model.devices[d];
      auto& rt = devices[d];
      rt.rng = root.fork("clock." + dev.name);
      Oscillator osc{dev.clock.drift_ppm_num, dev.clock.drift_ppm_den, dev.clock.tick_length};
      rt.clock = LocalClock(osc, dev.clock.sync_interval, dev.clock.sync_precision);
      rt.clock_perfect = rt.clock.is_perfect();
      if (!rt.clock_perfect) rt.clock.apply_sync(SimTime::zero(), rt.rng);
      if (dev.kind == DeviceKind::CanBus) {
        BusRt bus;
        bus.device = d;
        bus.bus = CanBus(dev.can_bitrate);
        bus_index[d] = buses.size();
        buses.push_back(std::move(bus));
        continue;
      }
      for (const auto& p : model.ports[d]) {
        PortRt port;
        port.device = d;
        port.port = p.port;
        port.peer = p.peer_device;
        port.rate = p.rate_bps;
        port.propagation = p.propagation;
        port.segment = p.segment;
        rt.ports.push_back(std::move(port));
      }
    }
    for (const auto& att : model.can_attachments) {
      auto& b = buses[bus_index.at(att.bus)];
      b.members.push_back(att.node);
      b.bus.attach_node(att.node);
      bus_segment[att.bus] = att.segment;
    }

    wire_flows();
    wire_avb_slopes();
    wire_pools();
    arm_sources();
    arm_tt_dispatch();
    arm_clock_sync();
  }

  void wire_flows() {
    const std::size_t n_msgs = model.messages.size();
    next_eth.resize(n_msgs);
    next_can.resize(n_msgs);
    flow_receivers.resize(n_msgs);
    for (std::uint32_t f = 0; f < n_msgs; ++f) {
      const auto& msg = model.messages[f];
      for (const std::uint32_t r : msg.receivers) flow_receivers[f].insert(r);
      for (const auto& route : msg.routes) {
        for (std::size_t i = 0; i + 1 < route.size(); ++i) {
          const std::uint32_t here = route[i];
          const std::uint32_t next = route[i + 1];
          const bool next_is_bus = model.devices[next].kind == DeviceKind::CanBus;
          const bool here_is_bus = model.devices[here].kind == DeviceKind::CanBus;
          if (here_is_bus) continue;  // bus delivery reaches all members
          auto& table = next_is_bus ? next_can[f][here] : next_eth[f][here];
          if (std::find(table.begin(), table.end(), next) == table.end()) {
            table.push_back(next);
          }
        }
      }
      // CAN id -> flow, per bus, using that bus segment's mapping
      for (const auto& route : msg.routes) {
        for (const std::uint32_t dev : route) {
          if (model.devices[dev].kind != DeviceKind::CanBus) continue;
          if (const auto* id = can_id_on_bus(f, dev)) can_id_flow[{dev, *id}] = f;
        }
      }
      // ingress policers on switches along the route
      for (const auto& [seg, sm] : msg.mapping_by_segment) {
        if (sm.kind != SegmentMapping::Kind::Rc || !sm.rc.police) continue;
        for (const auto& route : msg.routes) {
          for (const std::uint32_t dev : route) {
            if (model.devices[dev].kind != DeviceKind::Switch) continue;
            VlPolicer pol;
            pol.bag = sm.rc.bag;
            pol.max_frame_bytes = sm.rc.max_frame_bytes;
            pol.jitter_allowance = sm.rc.jitter_allowance;
            policers.emplace(std::make_pair(dev, sm.rc.vl_id), pol);
          }
        }
      }
      for (const std::uint32_t r : msg.receivers) {
        stream_class[stream_name(f, r)] = class_of_flow(f);
      }
    }
  }

  /// The message's CAN id in the representation of this bus's segment.
  const std::uint16_t* can_id_on_bus(std::uint32_t f, std::uint32_t bus_dev) const {
    auto seg_it = bus_segment.find(bus_dev);
    if (seg_it == bus_segment.end()) return nullptr;
    auto it = model.messages[f].mapping_by_segment.find(seg_it->second);
    if (it == model.messages[f].mapping_by_segment.end() ||
        it->second.kind != SegmentMapping::Kind::Can) {
      return nullptr;
    }
    return &it->second.can.id;
  }

  std::string class_of_flow(std::uint32_t f) const {
    const auto& msg = model.messages[f];
    for (const auto& [seg, sm] : msg.mapping_by_segment) {
      switch (sm.kind) {
        case SegmentMapping::Kind::Tt: return "tt";
        case SegmentMapping::Kind::Rc: return "rc";
        case SegmentMapping::Kind::Avb: return sm.avb.sr_class == 'A' ? "avb_a" : "avb_b";
        case SegmentMapping::Kind::Be: return "be";
        case SegmentMapping::Kind::Can: break;
      }
    }
    return "can";
  }

  std::string stream_name(std::uint32_t f, std::uint32_t receiver) const {
    const auto& msg = model.messages[f];
    if (msg.receivers.size() <= 1) return msg.name;
    return msg.name + "->" + model.devices[receiver].name;
  }

  void wire_avb_slopes() {
    // class idle slope per port: sum of explicit stream reservations, or the
    // default fraction of the port rate when none is configured
    for (std::uint32_t f = 0; f < model.messages.size(); ++f) {
      const auto& msg = model.messages[f];
      for (const auto& route : msg.routes) {
        for (std::size_t i = 0; i + 1 < route.size(); ++i) {
          const auto port_idx = model.port_towards(route[i], route[i + 1]);
          if (!port_idx) continue;
          auto& port = devices[route[i]].ports[*port_idx];
          auto it = msg.mapping_by_segment.find(port.segment);
          if (it == msg.mapping_by_segment.end()) continue;
          const auto& sm = it->second;
          if (sm.kind != SegmentMapping::Kind::Avb) continue;
          AvbQueue& q = sm.avb.sr_class == 'A' ? port.avb_a : port.avb_b;
          if (sm.avb.idle_slope_bps) {
            q.cbs.idle_slope_bps += static_cast<std::int64_t>(sm.avb.idle_slope_bps);
          }
          q.configured = true;
        }
      }
    }
    for (auto& dev : devices) {
      for (auto& port : dev.ports) {
        auto finish = [&](AvbQueue& q, std::int64_t def_permille) {
          if (!q.configured) return;
          if (q.cbs.idle_slope_bps == 0) {
            q.cbs.idle_slope_bps = static_cast<std::int64_t>(port.rate) * def_permille / 1000;
          }
          if (q.cbs.idle_slope_bps >= static_cast<std::int64_t>(port.rate)) {
            throw SimError(ErrorCode::Config,
                           "AVB reservation meets or exceeds the port rate on " +
                               model.devices[port.device].name);
          }
          q.cbs.send_slope_bps = q.cbs.idle_slope_bps - static_cast<std::int64_t>(port.rate);
        };
        finish(port.avb_a, 750);
        finish(port.avb_b, 250);
      }
    }
  }

  void wire_pools() {
    std::map<std::pair<std::uint32_t, std::string>, std::vector<std::uint32_t>> groups;
    for (std::uint32_t f = 0; f < model.messages.size(); ++f) {
      for (const auto& pa : model.messages[f].pools) {
        groups[{pa.gateway, pa.pool}].push_back(f);
      }
    }
    for (const auto& [key, members] : groups) {
      devices[key.first].pools.emplace(key.second, Pool(key.second, members));
    }
  }

  // ---------------------------------------------------------------- sources

  void arm_sources() {
    for (std::uint32_t f = 0; f < model.messages.size(); ++f) {
      const auto& msg = model.messages[f];
      if (!msg.enabled || msg.routes.empty()) continue;
      const auto& route = msg.routes.front();
      if (route.size() < 2) continue;
      const bool can_first = model.devices[route[1]].kind == DeviceKind::CanBus;
      if (can_first) {
        arm_can_source(f);
      } else {
        arm_eth_source(f);
      }
    }
  }

  const SegmentMapping* first_eth_mapping(std::uint32_t f) const {
    const auto& msg = model.messages[f];
    const auto& route = msg.routes.front();
    const auto port_idx = model.port_towards(route[0], route[1]);
    if (!port_idx) return nullptr;
    const std::uint32_t seg = model.ports[route[0]][*port_idx].segment;
    auto it = msg.mapping_by_segment.find(seg);
    return it == msg.mapping_by_segment.end() ? nullptr : &it->second;
  }

  void arm_can_source(std::uint32_t f) {
    const auto& msg = model.messages[f];
    const std::uint32_t bus_dev = msg.routes.front()[1];
    const std::uint16_t* mapped = can_id_on_bus(f, bus_dev);
    const std::uint16_t can_id = mapped ? *mapped : 0;
    schedule_cyclic(msg.start, msg.period, [this, f, bus_dev, can_id](SimTime t) {
      const auto& m = model.messages[f];
      CanFrame frame;
      frame.id = can_id;
      frame.dlc = static_cast<std::uint8_t>(std::min<std::uint32_t>(m.payload, 8));
      for (int i = 0; i < frame.dlc; ++i) frame.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i + 1);
      frame.created_at = t;
      auto& b = buses[bus_index.at(bus_dev)];
      b.bus.enqueue(m.sender, frame);
      kick_bus(b, t);
    });
  }

  void arm_eth_source(std::uint32_t f) {
    const auto& msg = model.messages[f];
    const SegmentMapping* sm = first_eth_mapping(f);
    if (!sm) return;
    const SimTime phase = sm->kind == SegmentMapping::Kind::Tt ? SimTime::zero() : msg.start;
    schedule_cyclic(phase, msg.period, [this, f](SimTime t) { emit_eth(f, t); });
  }

  void schedule_cyclic(SimTime start, SimTime period, std::function<void(SimTime)> fire) {
    auto tick = std::make_shared<std::function<void()>>();
    *tick = [this, period, fire = std::move(fire), self = tick.get()]() {
      const SimTime now = queue.now();
      fire(now);
      if (period > SimTime::zero()) {
        queue.schedule(now + period, TieClass::Arrival, *self);
      }
    };
    source_ticks.push_back(tick);  // keeps the closure alive for the run
    queue.schedule(start, TieClass::Arrival, *tick);
  }

  void emit_eth(std::uint32_t f, SimTime t) {
    const auto& msg = model.messages[f];
    const std::uint32_t sender = msg.sender;
    std::uint64_t frames = 1;
    if (msg.burst_total_bytes > 0 && msg.payload > 0) {
      frames = (msg.burst_total_bytes + msg.payload - 1) / msg.payload;
    }
    const SegmentMapping* sm = first_eth_mapping(f);
    const bool gated = sm && sm->kind == SegmentMapping::Kind::Rc;
    for (std::uint64_t i = 0; i < frames; ++i) {
      EthernetFrame frame;
      frame.frame_id = next_frame_id++;
      frame.flow = f;
      frame.src = sender;
      frame.dst = msg.receivers.front();
      frame.payload_len = msg.payload;
      frame.created_at = t;
      frame.hop_trail.push_back({sender, t, SimTime::zero()});
      if (gated) {
        auto& src = rc_sources[f];
        if (src.pending.empty() && !src.release_pending) src.bag.bag = sm->rc.bag;
        src.pending.push_back(std::move(frame));
      } else {
        route_from(sender, std::move(frame), t, /*source=*/true);
      }
    }
    if (gated) pump_rc_source(f, t);
  }

  /// Releases the flow's pending rate-constrained frames one bandwidth
  /// allocation gap apart. An already-open gate releases inline so the frame
  /// keeps its priority against traffic queued at the same instant.
  void pump_rc_source(std::uint32_t f, SimTime now) {
    auto& src = rc_sources[f];
    if (src.release_pending || src.pending.empty()) return;
    const SimTime at = bag_gate(src.bag, now);
    const std::uint32_t sender = model.messages[f].sender;
    if (at == now) {
      EthernetFrame frame = std::move(src.pending.front());
      src.pending.pop_front();
      bag_mark_release(src.bag, now);
      route_from(sender, std::move(frame), now, /*source=*/true);
      pump_rc_source(f, now);
      return;
    }
    src.release_pending = true;
    queue.schedule(at, TieClass::Service, sender + 1, [this, f, sender, at]() {
      auto& s = rc_sources[f];
      s.release_pending = false;
      if (s.pending.empty()) return;
      EthernetFrame frame = std::move(s.pending.front());
      s.pending.pop_front();
      bag_mark_release(s.bag, at);
      route_from(sender, std::move(frame), at, /*source=*/true);
      pump_rc_source(f, at);
    });
  }

  // ------------------------------------------------------ frame movement

  /// Places the frame on every egress port of `dev` towards the flow's next
  /// hops. `source` skips the processing delay (host stack, not modeled).
  void route_from(std::uint32_t dev, EthernetFrame frame, SimTime now, bool source) {
    const auto& table = next_eth[frame.flow];
    auto it = table.find(dev);
    if (it == table.end()) return;
    const SimTime ready = source ? now : now + model.devices[dev].processing_delay;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      const std::uint32_t next = it->second[i];
      const auto port_idx = model.port_towards(dev, next);
      if (!port_idx) continue;
      EthernetFrame copy = (i + 1 == it->second.size()) ? std::move(frame) : frame;
      if (ready == now) {
        enqueue_port(dev, *port_idx, std::move(copy), now);
      } else {
        queue.schedule(ready, TieClass::Arrival, dev + 1,
                       [this, dev, p = *port_idx, fr = std::move(copy), ready]() mutable {
                         enqueue_port(dev, p, std::move(fr), ready);
                       });
      }
    }
  }

  void enqueue_port(std::uint32_t dev, std::uint32_t port_idx, EthernetFrame frame,
                    SimTime now) {
    auto& port = devices[dev].ports[port_idx];
    const auto& msg = model.messages[frame.flow];
    auto map_it = msg.mapping_by_segment.find(port.segment);
    if (map_it == msg.mapping_by_segment.end()) return;  // validated earlier
    const SegmentMapping& sm = map_it->second;

    const std::uint64_t cap = model.devices[dev].queue_capacity;
    auto check_cap = [&]() {
      if (cap && port.queued >= cap) {
        throw SimError(ErrorCode::QueueOverflow,
                       model.devices[dev].name + " port " + std::to_string(port_idx) +
                           " exceeded its configured capacity of " + std::to_string(cap));
      }
      ++port.queued;
    };

    switch (sm.kind) {
      case SegmentMapping::Kind::Tt: {
        frame.tag = {TrafficClass::TimeTriggered, sm.tt.ct_id};
        frame.priority = 7;
        auto& slot = port.tt_slot[sm.tt.ct_id];
        if (slot.has_value()) {
          throw SimError(ErrorCode::TtBufferOverrun,
                         "ct " + std::to_string(sm.tt.ct_id) + " slot already occupied on " +
                             model.devices[dev].name);
        }
        slot = std::move(frame);
        note_fill(port, "tt", sm.tt.ct_id, +1, wire_length(slot->payload_len));
        return;  // dispatched by the TDMA timer, not by port service
      }
      case SegmentMapping::Kind::Rc: {
        frame.tag = {TrafficClass::RateConstrained, sm.rc.vl_id};
        frame.priority = sm.rc.priority;
        check_cap();
        note_fill(port, "rc", sm.rc.vl_id, +1, wire_length(frame.payload_len));
        port.rc[sm.rc.priority].push_back(std::move(frame));
        break;
      }
      case SegmentMapping::Kind::Avb: {
        const bool a = sm.avb.sr_class == 'A';
        frame.tag = {a ? TrafficClass::AvbClassA : TrafficClass::AvbClassB, sm.avb.stream_id};
        frame.priority = a ? 3 : 2;
        check_cap();
        AvbQueue& q = a ? port.avb_a : port.avb_b;
        q.advance(now);  // close the idle/waiting interval before the state change
        note_fill(port, a ? "avb_a" : "avb_b", sm.avb.stream_id, +1,
                  wire_length(frame.payload_len));
        q.frames.push_back(std::move(frame));
        break;
      }
      case SegmentMapping::Kind::Be: {
        frame.tag = {TrafficClass::BestEffort, 0};
        frame.priority = sm.be.priority;
        check_cap();
        note_fill(port, "be", 0, +1, wire_length(frame.payload_len));
        port.be.push_back(std::move(frame));
        break;
      }
      case SegmentMapping::Kind::Can:
        return;  // not an Ethernet mapping; validation rejects this
    }
    try_service(dev, port_idx, now);
  }

  void note_fill(PortRt& port, const std::string& cls, std::uint32_t stream, int delta,
                 std::uint64_t bytes) {
    auto& f = port.fill[{cls, stream}];
    if (delta > 0) {
      f.first += 1;
      f.second += bytes;
      stats.record_queue_depth(model.devices[port.device].name + ".p" + std::to_string(port.port),
                               cls, stream, f.first, f.second);
    } else {
      f.first -= 1;
      f.second -= bytes;
    }
  }

  // ----------------------------------------------------------- port service

  SimTime local_now(std::uint32_t dev, SimTime now) const {
    return devices[dev].clock_perfect ? now : devices[dev].clock.global_to_local(now);
  }

  enum class FromQueue { Rc, AvbA, AvbB, Be };

  void try_service(std::uint32_t dev, std::uint32_t port_idx, SimTime now) {
    auto& port = devices[dev].ports[port_idx];
    if (port.busy_until > now) return;

    struct Candidate {
      FromQueue from;
      const EthernetFrame* frame;
    };
    std::vector<Candidate> candidates;
    for (auto& [prio, q] : port.rc) {
      if (!q.empty()) {
        candidates.push_back({FromQueue::Rc, &q.front()});
        break;  // highest priority RC queue only
      }
    }
    port.avb_a.advance(now);
    port.avb_b.advance(now);
    if (!port.avb_a.frames.empty() && cbs_eligible(port.avb_a.cbs)) {
      candidates.push_back({FromQueue::AvbA, &port.avb_a.frames.front()});
    }
    if (!port.avb_b.frames.empty() && cbs_eligible(port.avb_b.cbs)) {
      candidates.push_back({FromQueue::AvbB, &port.avb_b.frames.front()});
    }
    if (!port.be.empty()) candidates.push_back({FromQueue::Be, &port.be.front()});

    const PortKey key{dev, port_idx};
    std::optional<SimTime> earliest_retry;
    auto propose_retry = [&](SimTime t) {
      if (t <= now) return;
      if (!earliest_retry || t < *earliest_retry) earliest_retry = t;
    };

    for (const auto& cand : candidates) {
      const SimTime tx = wire_duration(wire_length(cand.frame->payload_len), port.rate);
      bool admitted = true;
      if (port.has_tt) {
        const SimTime lnow = local_now(dev, now);
        admitted = guard_admit(model.schedule, key, lnow, tx);
        if (!admitted) {
          const SimTime ladmit = guard_next_admit(model.schedule, key, lnow, tx);
          const SimTime gadmit = devices[dev].clock_perfect
                                     ? ladmit
                                     : devices[dev].clock.local_to_global(ladmit);
          propose_retry(gadmit);
        }
      }
      if (admitted) {
        start_transmission(dev, port_idx, cand.from, now);
        return;
      }
    }

    // nothing admitted; arm a wake-up for blocked credit if applicable
    auto credit_retry = [&](AvbQueue& q) {
      if (!q.frames.empty() && !cbs_eligible(q.cbs)) propose_retry(cbs_zero_crossing(q.cbs));
    };
    credit_retry(port.avb_a);
    credit_retry(port.avb_b);

    if (earliest_retry) {
      if (port.retry) queue.cancel(port.retry);
      port.retry = queue.schedule(*earliest_retry, TieClass::Service, dev + 1,
                                  [this, dev, port_idx]() {
                                    devices[dev].ports[port_idx].retry = 0;
                                    try_service(dev, port_idx, queue.now());
                                  });
    }
  }

  void start_transmission(std::uint32_t dev, std::uint32_t port_idx, FromQueue from,
                          SimTime now) {
    auto& port = devices[dev].ports[port_idx];
    EthernetFrame frame;
    switch (from) {
      case FromQueue::Rc: {  // head of the highest-priority nonempty queue
        for (auto& [prio, q] : port.rc) {
          if (!q.empty()) {
            frame = std::move(q.front());
            q.pop_front();
            break;
          }
        }
        note_fill(port, "rc", frame.tag.stream_id, -1, wire_length(frame.payload_len));
        --port.queued;
        break;
      }
      case FromQueue::AvbA: {
        frame = std::move(port.avb_a.frames.front());
        port.avb_a.frames.pop_front();
        port.avb_a.transmitting = true;  // credit already advanced to `now`
        note_fill(port, "avb_a", frame.tag.stream_id, -1, wire_length(frame.payload_len));
        --port.queued;
        break;
      }
      case FromQueue::AvbB: {
        frame = std::move(port.avb_b.frames.front());
        port.avb_b.frames.pop_front();
        port.avb_b.transmitting = true;
        note_fill(port, "avb_b", frame.tag.stream_id, -1, wire_length(frame.payload_len));
        --port.queued;
        break;
      }
      case FromQueue::Be: {
        frame = std::move(port.be.front());
        port.be.pop_front();
        note_fill(port, "be", 0, -1, wire_length(frame.payload_len));
        --port.queued;
        break;
      }
    }
    transmit(dev, port_idx, std::move(frame), now);
  }

  void transmit(std::uint32_t dev, std::uint32_t port_idx, EthernetFrame frame, SimTime now) {
    auto& port = devices[dev].ports[port_idx];
    if (port.retry) {
      queue.cancel(port.retry);
      port.retry = 0;
    }
    if (!frame.hop_trail.empty()) frame.hop_trail.back().departure = now;
    if (capture) trace.add(frame, now, dev);

    const std::uint32_t wire = wire_length(frame.payload_len);
    const SimTime busy_for = wire_duration(wire, port.rate);
    port.busy_until = now + busy_for;
    const SimTime deliver_at = now + serialize_duration(wire, port.rate) + port.propagation;
    const std::uint32_t peer = port.peer;
    const TrafficClass cls = frame.tag.cls;

    queue.schedule(deliver_at, TieClass::Arrival, peer + 1,
                   [this, peer, fr = std::move(frame), deliver_at]() mutable {
                     ingress(peer, std::move(fr), deliver_at);
                   });
    queue.schedule(now + busy_for, TieClass::Service, dev + 1,
                   [this, dev, port_idx, cls]() {
                     auto& p = devices[dev].ports[port_idx];
                     const SimTime t = queue.now();
                     if (cls == TrafficClass::AvbClassA) {
                       p.avb_a.advance(t);  // charge the send slope for the whole slot
                       p.avb_a.transmitting = false;
                       p.avb_a.advance(t);  // apply the idle reset if the queue drained
                     } else if (cls == TrafficClass::AvbClassB) {
                       p.avb_b.advance(t);
                       p.avb_b.transmitting = false;
                       p.avb_b.advance(t);
                     }
                     try_service(dev, port_idx, t);
                   });
  }

  // -------------------------------------------------------------- TT timers

  void arm_tt_dispatch() {
    if (model.schedule.actions.empty()) return;
    std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
    for (const auto& action : model.schedule.actions) {
      devices[action.egress.device].ports[action.egress.port].has_tt = true;
      const auto key =
          std::make_tuple(action.egress.device, action.egress.port, action.ct_id);
      if (!seen.insert(key).second) continue;
      arm_tt_timer(action.egress.device, action.egress.port, action.ct_id);
    }
  }

  void arm_tt_timer(std::uint32_t dev, std::uint32_t port_idx, std::uint32_t ct) {
    auto& rt = devices[dev];
    const std::string tkey = std::to_string(port_idx) + ":" + std::to_string(ct);
    const SimTime now = queue.now();
    SimTime lnow = local_now(dev, now);
    if (auto it = rt.last_dispatch_local.find(tkey); it != rt.last_dispatch_local.end()) {
      if (it->second + SimTime::ps(1) > lnow) lnow = it->second + SimTime::ps(1);
    }
    const PortKey key{dev, port_idx};
    const SimTime ldispatch = tt_next_dispatch(model.schedule, key, ct, lnow);
    const SimTime gdispatch =
        rt.clock_perfect ? ldispatch : rt.clock.local_to_global(ldispatch);
    const SimTime fire = gdispatch >= now ? gdispatch : now;
    rt.tt_timer[tkey] = queue.schedule(
        fire, TieClass::TtDispatch, dev + 1, [this, dev, port_idx, ct, tkey, ldispatch]() {
          auto& d = devices[dev];
          d.tt_timer[tkey] = 0;
          d.last_dispatch_local[tkey] = ldispatch;
          dispatch_tt(dev, port_idx, ct, queue.now());
          arm_tt_timer(dev, port_idx, ct);
        });
  }

  void dispatch_tt(std::uint32_t dev, std::uint32_t port_idx, std::uint32_t ct, SimTime now) {
    auto& port = devices[dev].ports[port_idx];
    auto it = port.tt_slot.find(ct);
    if (it == port.tt_slot.end() || !it->second.has_value() || port.busy_until > now) {
      ++tt_misses;  // empty window or late frame; it rides the next cycle
      return;
    }
    EthernetFrame frame = std::move(*it->second);
    it->second.reset();
    note_fill(port, "tt", ct, -1, wire_length(frame.payload_len));
    transmit(dev, port_idx, std::move(frame), now);
  }

  void arm_clock_sync() {
    for (std::uint32_t d = 0; d < devices.size(); ++d) {
      if (model.devices[d].kind == DeviceKind::CanBus) continue;
      if (devices[d].clock_perfect) continue;
      arm_sync_timer(d, devices[d].clock.sync_interval());
    }
  }

  void arm_sync_timer(std::uint32_t dev, SimTime at) {
    queue.schedule(at, TieClass::ClockSync, dev + 1, [this, dev, at]() {
      auto& rt = devices[dev];
      rt.clock.apply_sync(at, rt.rng);
      // dispatch instants moved with the clock: re-plan the TDMA timers
      for (auto& [tkey, handle] : rt.tt_timer) {
        if (!handle) continue;
        queue.cancel(handle);
        handle = 0;
        const auto colon = tkey.find(':');
        const std::uint32_t port_idx =
            static_cast<std::uint32_t>(std::stoul(tkey.substr(0, colon)));
        const std::uint32_t ct = static_cast<std::uint32_t>(std::stoul(tkey.substr(colon + 1)));
        arm_tt_timer(dev, port_idx, ct);
      }
      arm_sync_timer(dev, at + rt.clock.sync_interval());
    });
  }

  // ------------------------------------------------------------- deliveries

  void ingress(std::uint32_t dev, EthernetFrame frame, SimTime now) {
    frame.hop_trail.push_back({dev, now, SimTime::zero()});

    if (flow_receivers[frame.flow].count(dev)) {
      deliver(dev, frame, now);
    }

    // ingress policing before any forwarding decision
    if (frame.tag.cls == TrafficClass::RateConstrained) {
      auto pol = policers.find({dev, frame.tag.stream_id});
      if (pol != policers.end()) {
        const auto verdict = police_ingress(pol->second, wire_length(frame.payload_len), now);
        if (verdict != PoliceResult::Accept) {
          stats.record_drop(model.messages[frame.flow].name,
                            verdict == PoliceResult::DropSize ? "police_size" : "police_rate");
          return;
        }
      }
    }

    const bool to_can = next_can[frame.flow].count(dev) > 0;
    const bool to_eth = next_eth[frame.flow].count(dev) > 0;
    if (to_can && model.devices[dev].kind == DeviceKind::Gateway) {
      const SimTime ready = now + model.devices[dev].processing_delay;
      queue.schedule(ready, TieClass::Arrival, dev + 1,
                     [this, dev, fr = frame, ready]() { gw_eth_to_can(dev, fr, ready); });
    }
    if (to_eth) {
      route_from(dev, std::move(frame), now, /*source=*/false);
    }
  }

  std::function<void(const EthernetFrame&, SimTime)> delivery_probe;

  void deliver(std::uint32_t dev, const EthernetFrame& frame, SimTime now) {
    record_latency(frame.flow, dev, frame.created_at, now);
    if (delivery_probe) delivery_probe(frame, now);
  }

  void record_latency(std::uint32_t flow, std::uint32_t receiver, SimTime created,
                      SimTime arrival) {
    const std::string stream = stream_name(flow, receiver);
    stats.record_latency(stream, created, arrival, 0);
    const double seconds = static_cast<double>((arrival - created).ticks()) * 1e-12;
    const std::string module = model.name + "." + model.devices[receiver].name;
    const std::string metric = model.messages[flow].name + ":latency";
    if (checker.sample(module, metric, seconds, arrival)) {
      queue.request_stop();
    }
  }

  void gw_eth_to_can(std::uint32_t gw, const EthernetFrame& frame, SimTime now) {
    std::vector<CanFrame> contained;
    try {
      contained = decapsulate(frame.payload_bytes);
    } catch (const SimError&) {
      stats.record_drop(model.messages[frame.flow].name, "gateway_malformed");
      return;
    }
    for (std::size_t i = 0; i < contained.size(); ++i) {
      CanFrame cf = contained[i];
      const std::uint32_t flow =
          i < frame.embedded_flows.size() ? frame.embedded_flows[i] : frame.flow;
      if (i < frame.embedded.size()) cf.created_at = frame.embedded[i].created_at;
      auto it = next_can[flow].find(gw);
      if (it == next_can[flow].end()) {
        stats.record_drop(model.messages[flow].name, "gateway_no_route");
        continue;
      }
      for (const std::uint32_t bus_dev : it->second) {
        CanFrame out = cf;
        if (const auto* id = can_id_on_bus(flow, bus_dev)) out.id = *id;
        auto& b = buses[bus_index.at(bus_dev)];
        b.bus.enqueue(gw, out);
        kick_bus(b, now);
      }
    }
  }

  // ------------------------------------------------------------ CAN service

  void kick_bus(BusRt& bus, SimTime now) {
    if (bus.service_pending || !bus.bus.has_pending()) return;
    bus.service_pending = true;
    const SimTime at = std::max(now, bus.bus.busy_until());
    const std::uint32_t bus_dev = bus.device;
    queue.schedule(at, TieClass::Service, bus_dev + 1, [this, bus_dev, at]() {
      auto& b = buses[bus_index.at(bus_dev)];
      b.service_pending = false;
      auto grant = b.bus.arbitrate(at);
      if (!grant) return;
      const SimTime done = at + can_frame_duration(grant->frame, b.bus.bitrate());
      b.bus.set_busy_until(done);
      queue.schedule(done, TieClass::Arrival, bus_dev + 1,
                     [this, bus_dev, g = *grant, done]() {
                       deliver_can(bus_dev, g, done);
                     });
    });
  }

  void deliver_can(std::uint32_t bus_dev, const CanBus::Grant& grant, SimTime now) {
    auto& b = buses[bus_index.at(bus_dev)];
    auto flow_it = can_id_flow.find({bus_dev, grant.frame.id});
    if (flow_it == can_id_flow.end()) {
      // no forwarding rule anywhere: gateways on the bus drop and count
      for (const std::uint32_t member : b.members) {
        if (model.devices[member].kind == DeviceKind::Gateway) {
          stats.record_drop("canid_" + std::to_string(grant.frame.id), "gateway_no_route");
        }
      }
    }
    if (flow_it != can_id_flow.end()) {
      const std::uint32_t flow = flow_it->second;
      for (const std::uint32_t member : b.members) {
        if (member == grant.node) continue;
        if (flow_receivers[flow].count(member)) {
          record_latency(flow, member, grant.frame.created_at, now);
        }
        if (model.devices[member].kind == DeviceKind::Gateway) {
          const bool continues = next_eth[flow].count(member) || next_can[flow].count(member);
          // only the gateway on the forward path picks the frame up
          const auto& route_next = next_routes_through(flow, member, bus_dev);
          if (continues && route_next) {
            const SimTime ready = now + model.devices[member].processing_delay;
            queue.schedule(ready, TieClass::Arrival, member + 1,
                           [this, member, flow, fr = grant.frame, ready]() {
                             gw_can_ingress(member, flow, fr, ready);
                           });
          }
        }
      }
    }
    kick_bus(b, now);
  }

  /// True when `gw` follows `bus_dev` on some route of the flow (the frame
  /// moves forward, it is not echoed back to where it came from).
  bool next_routes_through(std::uint32_t flow, std::uint32_t gw, std::uint32_t bus_dev) const {
    for (const auto& route : model.messages[flow].routes) {
      for (std::size_t i = 0; i + 1 < route.size(); ++i) {
        if (route[i] == bus_dev && route[i + 1] == gw) return true;
      }
    }
    return false;
  }

  void gw_can_ingress(std::uint32_t gw, std::uint32_t flow, const CanFrame& frame, SimTime now) {
    auto& rt = devices[gw];
    // pooled aggregation when configured, immediate forwarding otherwise
    for (const auto& pa : model.messages[flow].pools) {
      if (pa.gateway != gw) continue;
      auto pool_it = rt.pools.find(pa.pool);
      if (pool_it == rt.pools.end()) continue;
      Pool& pool = pool_it->second;
      const auto before = pool.deadline();
      pool.admit(flow, frame, now, pa.holdup);
      pool_flows[{gw, pa.pool}].push_back(flow);
      const auto after = pool.deadline();
      if (!before || (after && *after < *before)) {
        auto& timer = rt.pool_timer[pa.pool];
        if (timer) queue.cancel(timer);
        timer = queue.schedule(*after, TieClass::Service, gw + 1,
                               [this, gw, pool_name = pa.pool]() {
                                 devices[gw].pool_timer[pool_name] = 0;
                                 flush_pool(gw, pool_name, queue.now());
                               });
      }
      return;
    }
    forward_from_gateway(gw, {frame}, {flow}, now);
  }

  void flush_pool(std::uint32_t gw, const std::string& pool_name, SimTime now) {
    Pool& pool = devices[gw].pools.at(pool_name);
    if (pool.pending_empty()) return;
    auto result = pool.flush(now);
    std::vector<std::uint32_t> flows = std::move(pool_flows[{gw, pool_name}]);
    pool_flows[{gw, pool_name}].clear();
    forward_from_gateway(gw, result.frames, flows, now);
  }

  void forward_from_gateway(std::uint32_t gw, const std::vector<CanFrame>& frames,
                            const std::vector<std::uint32_t>& flows, SimTime now) {
    if (frames.empty()) return;
    // direct fieldbus-to-fieldbus legs, with the id rewritten to the target
    // segment's representation
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const std::uint32_t flow = flows[i];
      auto it = next_can[flow].find(gw);
      if (it == next_can[flow].end()) continue;
      for (const std::uint32_t bus_dev : it->second) {
        CanFrame out = frames[i];
        if (const auto* id = can_id_on_bus(flow, bus_dev)) out.id = *id;
        auto& b = buses[bus_index.at(bus_dev)];
        b.bus.enqueue(gw, out);
        kick_bus(b, now);
      }
    }
    bool any_eth = false;
    for (const std::uint32_t flow : flows) {
      if (next_eth[flow].count(gw)) any_eth = true;
    }
    if (!any_eth) return;
    EthernetFrame carrier;
    carrier.frame_id = next_frame_id++;
    carrier.flow = flows.front();
    carrier.src = gw;
    carrier.dst = model.messages[carrier.flow].receivers.front();
    carrier.payload_bytes = encapsulate(frames);
    carrier.payload_len = static_cast<std::uint32_t>(carrier.payload_bytes.size());
    carrier.embedded = frames;
    carrier.embedded_flows = flows;
    carrier.created_at = now;
    carrier.hop_trail.push_back({gw, now, SimTime::zero()});
    route_from(gw, std::move(carrier), now, /*source=*/true);
  }

  // ------------------------------------------------------------------- run

  RunResult run(SimTime duration) {
    RunResult result;
    result.summary = queue.run_until(duration);
    result.stopped_by_constraint = checker.stop_signalled();
    result.violations = checker.violations();
    result.stream_class = stream_class;
    result.tt_window_misses = tt_misses;
    return result;
  }
};

Simulation::Simulation(const NetworkModel& model, std::uint64_t seed,
                       std::vector<ConstraintRule> rules, bool capture_trace)
    : impl_(std::make_unique<Impl>(model, seed, std::move(rules), capture_trace)) {}

Simulation::~Simulation() = default;

RunResult Simulation::run(SimTime duration) { return impl_->run(duration); }

const StatsCollector& Simulation::stats() const { return impl_->stats; }
const PacketTrace& Simulation::trace() const { return impl_->trace; }
const ConstraintChecker& Simulation::checker() const { return impl_->checker; }
const andl::NetworkModel& Simulation::model() const { return impl_->model; }

void Simulation::set_delivery_probe(std::function<void(const EthernetFrame&, SimTime)> probe) {
  impl_->delivery_probe = std::move(probe);
}

}  // namespace ivn
