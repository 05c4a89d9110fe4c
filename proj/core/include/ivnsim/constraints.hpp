#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "ivnsim/sim_time.hpp"

namespace ivn {

enum class ConstraintAction : std::uint8_t { Report, Stop };

/// One declarative bound on a result vector, selected by module/metric name
/// patterns (plain match or regular expression).
struct ConstraintRule {
  std::string module_pattern;
  bool module_is_regex = false;
  std::string name_pattern;
  bool name_is_regex = false;
  ConstraintAction action = ConstraintAction::Report;

  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> avg_min;
  std::uint32_t avg_min_samples = 0;
  std::optional<double> avg_max;
  std::uint32_t avg_max_samples = 0;
  std::optional<double> interval_min;  // mean over a trailing time window
  SimTime interval_min_window;
  std::optional<double> interval_max;
  SimTime interval_max_window;
  std::optional<double> sum_max;  // running total
};

struct ConstraintViolation {
  std::size_t rule_index = 0;
  std::string module;
  std::string metric;
  std::string bound;  // which check tripped, e.g. "max" or "avg_max"
  double value = 0;
  double limit = 0;
  SimTime time;
  bool stop = false;
};

/// Parses the XML constraint definition:
///   <constraints>
///     <constraint module="..." [moduleIsRegex="true"] name="..."
///                 [nameIsRegex="true"] [action="stop"]>
///       <min>..</min> <max>..</max>
///       <avg_min samples="N">..</avg_min> <avg_max samples="N">..</avg_max>
///       <interval_min window="1ms">..</interval_min> (interval_max likewise)
///       <sum_max>..</sum_max>
///     </constraint>
///   </constraints>
/// Throws SimError(Config) on malformed input.
std::vector<ConstraintRule> parse_constraints_xml(const std::string& xml);
std::vector<ConstraintRule> load_constraints_file(const std::string& path);

/// Evaluates samples against the rule set; emits violation records and a
/// stop signal when a violated rule's action is stop.
class ConstraintChecker {
 public:
  explicit ConstraintChecker(std::vector<ConstraintRule> rules);

  /// Returns true when the run should stop.
  bool sample(const std::string& module, const std::string& metric, double value, SimTime t);

  const std::vector<ConstraintViolation>& violations() const { return violations_; }
  const std::vector<ConstraintRule>& rules() const { return rules_; }
  bool stop_signalled() const { return stop_; }

 private:
  struct RuleState {
    std::regex module_re;
    std::regex name_re;
    std::deque<double> window;                       // for avg_* over samples
    std::deque<std::pair<SimTime, double>> timed;    // for interval_* over time
    double running_sum = 0;
  };

  bool matches(std::size_t i, const std::string& module, const std::string& metric) const;

  std::vector<ConstraintRule> rules_;
  std::vector<RuleState> states_;
  std::vector<ConstraintViolation> violations_;
  bool stop_ = false;
};

}  // namespace ivn
