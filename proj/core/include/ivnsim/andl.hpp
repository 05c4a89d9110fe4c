#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ivnsim/clock.hpp"
#include "ivnsim/sim_time.hpp"
#include "ivnsim/tt_schedule.hpp"

namespace ivn::andl {

struct SourcePos {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  SourcePos pos;
  std::string message;
};

std::string format_diagnostics(const std::vector<Diagnostic>& diags);

/// A literal with an optional unit, kept exact: bytes, picoseconds,
/// bits per second, or a plain (possibly fractional) number.
struct Quantity {
  enum class Kind { Plain, Bytes, Time, Rate } kind = Kind::Plain;
  std::int64_t value = 0;  // bytes, ps or bit/s
  std::int64_t plain_num = 0;
  std::int64_t plain_den = 1;
};

using Value = std::variant<Quantity, std::string>;  // string = identifier reference

struct Property {
  std::string name;
  Value value;
  SourcePos pos;
};

struct TypeDef {
  std::string group;  // the enclosing `types <group>` block
  std::string kind;   // e.g. ethernetLink
  std::string name;
  std::vector<Property> props;
  SourcePos pos;
};

struct DeviceDecl {
  std::string kind;  // canLink | node | gateway | switch
  std::string name;
  std::vector<Property> props;
  SourcePos pos;
};

/// `a <--> b` or `a <--> {new grp.Type {overrides}} <--> b` or an inline
/// anonymous definition `a <--> {ethernetLink {props}} <--> b`.
struct LinkSpec {
  std::string type_ref;  // "grp.Name" for `new`, empty for inline
  std::string inline_kind;
  std::vector<Property> props;  // refinement overrides / inline body
  SourcePos pos;
};

struct Connection {
  std::string a;
  std::string b;
  std::optional<LinkSpec> link;
  SourcePos pos;
};

struct SegmentDecl {
  std::string name;
  std::vector<Connection> connections;
  SourcePos pos;
};

struct MappingEntry {
  std::string scope;      // segment name, or gateway name for pools
  std::string kind;       // can | tt | rc | avb | be | pool
  std::string pool_name;  // for kind == pool
  std::vector<Property> params;
  SourcePos pos;
};

struct MessageDecl {
  std::string name;
  std::string sender;
  std::vector<std::string> receivers;
  std::vector<Property> props;  // payload, period, burstBytes, start, ...
  std::vector<MappingEntry> mappings;
  SourcePos pos;
};

struct Ast {
  std::vector<TypeDef> types;
  std::string network_name;
  std::vector<std::pair<std::string, std::string>> inline_ini;  // verbatim key/value
  std::vector<DeviceDecl> devices;
  std::vector<SegmentDecl> segments;
  std::vector<MessageDecl> messages;
};

struct ParseResult {
  std::optional<Ast> ast;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return ast.has_value() && diagnostics.empty(); }
};

/// Recursive-descent parser for the scenario dialect. Total on arbitrary
/// input: either an Ast or positioned diagnostics, never an exception.
ParseResult parse(std::string_view text);

// ---------------------------------------------------------------------------
// Resolved model

enum class DeviceKind : std::uint8_t { Node, Gateway, Switch, CanBus };

struct ClockParams {
  std::int64_t drift_ppm_num = 0;
  std::int64_t drift_ppm_den = 1;
  SimTime tick_length = SimTime::ps(1);
  SimTime sync_interval = SimTime::ms(10);
  SimTime sync_precision;
};

struct ResolvedDevice {
  std::string name;
  DeviceKind kind = DeviceKind::Node;
  ClockParams clock;
  SimTime processing_delay;        // switches and gateways
  std::uint64_t can_bitrate = 0;   // CanBus devices
  std::uint64_t queue_capacity = 0;  // 0 = unbounded
};

struct ResolvedPort {
  std::uint32_t device = 0;
  std::uint32_t port = 0;  // index within the device
  std::uint32_t peer_device = 0;
  std::uint32_t peer_port = 0;
  std::uint64_t rate_bps = 0;
  SimTime propagation;
  std::uint32_t segment = 0;
};

struct ResolvedSegment {
  std::string name;
  enum class Type : std::uint8_t { Ethernet, Can } type = Type::Ethernet;
  std::uint32_t can_device = 0;  // the bus device for CAN segments
};

struct CanMappingParams { std::uint16_t id = 0; };
struct TtMappingParams { std::uint32_t ct_id = 0; };
struct RcMappingParams {
  std::uint32_t vl_id = 0;
  SimTime bag = SimTime::ms(1);
  std::uint8_t priority = 7;
  bool police = false;
  SimTime jitter_allowance;
  std::uint32_t max_frame_bytes = 1518;
};
struct AvbMappingParams {
  std::uint32_t stream_id = 0;
  char sr_class = 'A';
  std::uint64_t idle_slope_bps = 0;  // 0: default 75% of port rate
};
struct BeMappingParams { std::uint8_t priority = 0; };

struct SegmentMapping {
  enum class Kind : std::uint8_t { Can, Tt, Rc, Avb, Be } kind = Kind::Be;
  CanMappingParams can;
  TtMappingParams tt;
  RcMappingParams rc;
  AvbMappingParams avb;
  BeMappingParams be;
};

struct PoolAssignment {
  std::uint32_t gateway = 0;
  std::string pool;
  SimTime holdup;
};

struct ResolvedMessage {
  std::string name;
  std::uint32_t sender = 0;
  std::vector<std::uint32_t> receivers;
  std::uint32_t payload = 0;  // bytes
  SimTime period;             // zero = single shot
  SimTime start;
  std::uint64_t burst_total_bytes = 0;  // payload bytes per burst; 0 = one frame
  bool enabled = true;
  std::map<std::uint32_t, SegmentMapping> mapping_by_segment;
  std::vector<PoolAssignment> pools;
  // One device path per receiver, sender first.
  std::vector<std::vector<std::uint32_t>> routes;
};

struct CanAttachment {
  std::uint32_t node = 0;
  std::uint32_t bus = 0;
  std::uint32_t segment = 0;
};

struct NetworkModel {
  std::string name;
  std::vector<ResolvedDevice> devices;
  std::vector<std::vector<ResolvedPort>> ports;  // per device (Ethernet only)
  std::vector<CanAttachment> can_attachments;
  std::vector<ResolvedSegment> segments;
  std::vector<ResolvedMessage> messages;
  std::vector<std::pair<std::string, std::string>> inline_ini;
  TtSchedule schedule;

  std::optional<std::uint32_t> device_index(const std::string& name) const;
  std::optional<std::uint32_t> segment_index(const std::string& name) const;
  /// The port on `device` whose link leads towards `peer`, if any.
  std::optional<std::uint32_t> port_towards(std::uint32_t device, std::uint32_t peer) const;
};

struct ValidateResult {
  std::optional<NetworkModel> model;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return model.has_value(); }
};

/// Resolves references, checks topology/mapping invariants, applies
/// overrides (key=value strings, see README for recognized keys) and
/// generates the TDMA schedule.
ValidateResult validate(const Ast& ast,
                        const std::vector<std::pair<std::string, std::string>>& overrides = {});

struct ScheduleOptions {
  SimTime cycle_cap = SimTime::sec(10);
  SimTime extra_margin = SimTime::ns(100);
};

/// First-feasible TDMA plan: greedy first-fit in message order, hop offsets
/// chained along each route. Throws Infeasible / LcmOverflow.
TtSchedule generate_tt_schedule(const NetworkModel& model, const ScheduleOptions& opts = {});

/// Scenario text for a resolved model; validate(parse(render(m))) resolves
/// back to an equivalent model.
std::string render(const NetworkModel& model);

/// Canonical single-line description used for model equality in tests.
std::string model_digest(const NetworkModel& model);

/// Parses "6B", "5ms", "100Mb/s", "0.5" into a Quantity (empty on failure).
std::optional<Quantity> parse_quantity(std::string_view text);

}  // namespace ivn::andl
