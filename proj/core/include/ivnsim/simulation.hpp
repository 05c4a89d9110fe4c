#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ivnsim/andl.hpp"
#include "ivnsim/constraints.hpp"
#include "ivnsim/event_queue.hpp"
#include "ivnsim/stats.hpp"
#include "ivnsim/writers.hpp"

namespace ivn {

struct RunConfig {
  std::string scenario_path;
  SimTime duration = SimTime::ms(100);
  std::uint64_t seed = 1;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string constraints_path;
  std::string out_dir = ".";
  bool write_csv = true;
  bool write_json = true;
  bool pcap = false;
  std::uint32_t replicas = 1;
  std::uint32_t jobs = 1;
};

struct RunResult {
  RunSummary summary;
  bool stopped_by_constraint = false;
  std::vector<ConstraintViolation> violations;
  std::map<std::string, std::string> stream_class;  // stream -> class name
  std::uint64_t tt_window_misses = 0;
};

/// One isolated simulation run: builds the runtime network from a validated
/// model, owns the event queue, clocks, shaper states and collectors. No
/// state is shared between Simulation instances, so whole runs may execute
/// on different threads.
class Simulation {
 public:
  Simulation(const andl::NetworkModel& model, std::uint64_t seed,
             std::vector<ConstraintRule> constraint_rules = {}, bool capture_trace = false);
  ~Simulation();

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  RunResult run(SimTime duration);

  const StatsCollector& stats() const;
  const PacketTrace& trace() const;
  const ConstraintChecker& checker() const;
  const andl::NetworkModel& model() const;

  /// Test hook: observes every Ethernet frame handed to a receiver, with its
  /// completed hop trail.
  void set_delivery_probe(std::function<void(const EthernetFrame&, SimTime)> probe);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ivn
