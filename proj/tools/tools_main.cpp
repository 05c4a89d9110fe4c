#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "ivnsim/andl.hpp"
#include "ivnsim/simulation.hpp"
#include "ivnsim/writers.hpp"

namespace fs = std::filesystem;
using namespace ivn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

struct LoadedScenario {
  std::string text;
  andl::NetworkModel model;
};

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int load_scenario(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& overrides,
                  LoadedScenario& out, bool quiet = false) {
  const auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot open scenario file '" << path << "'\n";
    return kExitConfig;
  }
  const auto parsed = andl::parse(*text);
  if (!parsed.ok()) {
    if (!quiet) std::cerr << path << ": " << andl::format_diagnostics(parsed.diagnostics);
    return kExitConfig;
  }
  auto validated = andl::validate(*parsed.ast, overrides);
  if (!validated.ok()) {
    if (!quiet) std::cerr << path << ": " << andl::format_diagnostics(validated.diagnostics);
    return kExitConfig;
  }
  out.text = std::move(*text);
  out.model = std::move(*validated.model);
  return kExitOk;
}

std::vector<std::pair<std::string, std::string>> split_overrides(
    const std::vector<std::string>& raw, bool& ok) {
  std::vector<std::pair<std::string, std::string>> overrides;
  ok = true;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: override '" << kv << "' is not of the form key=value\n";
      ok = false;
      continue;
    }
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return overrides;
}

/// Honored inline-ini keys; everything else rides along as metadata.
void apply_ini_defaults(const andl::NetworkModel& model, std::uint64_t& seed, SimTime& until,
                        bool seed_given, bool until_given) {
  for (const auto& [key, value] : model.inline_ini) {
    if (key == "seed-set" && !seed_given) {
      seed = std::strtoull(value.c_str(), nullptr, 10);
    } else if (key == "sim-time-limit" && !until_given) {
      if (const auto q = andl::parse_quantity(value);
          q && q->kind == andl::Quantity::Kind::Time) {
        until = SimTime::ps(q->value);
      }
    }
  }
}

struct RunOutput {
  RunResult result;
  std::string csv_path;
};

int run_one(const LoadedScenario& scenario, const RunConfig& config, RunOutput* out,
            std::string* error) {
  try {
    std::vector<ConstraintRule> rules;
    if (!config.constraints_path.empty()) {
      rules = load_constraints_file(config.constraints_path);
    }
    Simulation sim(scenario.model, config.seed, std::move(rules), config.pcap);
    RunResult result = sim.run(config.duration);

    fs::create_directories(config.out_dir);
    const std::string digest =
        config_digest(scenario.text, config.overrides, config.seed, config.duration);
    std::map<std::string, std::string> metadata;
    metadata["seed"] = std::to_string(config.seed);
    metadata["duration_ps"] = std::to_string(config.duration.ticks());
    metadata["scenario"] = fs::path(config.scenario_path).filename().string();
    metadata["tt_window_misses"] = std::to_string(result.tt_window_misses);
    metadata["event_order"] = "clock_sync<tt_dispatch<arrival<service<sampling";
    for (const auto& [k, v] : sim.model().inline_ini) metadata["ini." + k] = v;

    const std::string csv = (fs::path(config.out_dir) / "stats.csv").string();
    if (config.write_csv) write_stats_csv(sim.stats(), result.stream_class, csv);
    if (config.write_json) {
      write_stats_json(sim.stats(), result.stream_class, digest, metadata,
                       (fs::path(config.out_dir) / "stats.json").string());
    }
    if (config.pcap) {
      write_pcap(sim.trace(), (fs::path(config.out_dir) / "trace.pcap").string());
    }
    if (!result.violations.empty()) {
      std::ofstream report(fs::path(config.out_dir) / "violations.txt");
      for (const auto& v : result.violations) {
        report << "rule#" << v.rule_index << " " << v.module << " " << v.metric << " "
               << v.bound << " value=" << v.value << " limit=" << v.limit << " at "
               << v.time.to_string() << (v.stop ? " [stop]" : "") << "\n";
      }
    }
    if (out) {
      out->result = std::move(result);
      out->csv_path = csv;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return kExitConfig;
  }
}

int cmd_validate(const std::string& path) {
  LoadedScenario scenario;
  const int rc = load_scenario(path, {}, scenario);
  if (rc != kExitOk) return rc;
  std::cout << "ok: " << scenario.model.devices.size() << " devices, "
            << scenario.model.segments.size() << " segments, "
            << scenario.model.messages.size() << " messages\n";
  return kExitOk;
}

int cmd_run(const std::string& path, RunConfig config) {
  LoadedScenario scenario;
  int rc = load_scenario(path, config.overrides, scenario);
  if (rc != kExitOk) return rc;
  config.scenario_path = path;

  RunOutput out;
  std::string error;
  rc = run_one(scenario, config, &out, &error);
  if (rc != kExitOk) {
    std::cerr << "error: " << error << "\n";
    return rc;
  }
  std::cout << "run finished at " << out.result.summary.final_time.to_string() << ", "
            << out.result.summary.processed << " events";
  if (out.result.summary.stopped_early) std::cout << " (stopped early)";
  std::cout << "\n";
  for (const auto& v : out.result.violations) {
    std::cout << "violation: rule#" << v.rule_index << " " << v.module << " " << v.metric
              << " " << v.bound << " value=" << v.value << " limit=" << v.limit << " at "
              << v.time.to_string() << (v.stop ? " [stop]" : "") << "\n";
  }
  return out.result.violations.empty() ? kExitOk : kExitViolation;
}

struct SweepRow {
  std::string value;
  std::string stream;
  std::string cls;
  std::int64_t max_latency_ps;
  std::int64_t jitter_ps;
};

int cmd_sweep(const std::string& path, RunConfig base, const std::string& param,
              const std::vector<std::string>& values) {
  struct Job {
    std::string value;
    std::uint32_t replica;
    RunConfig config;
    LoadedScenario scenario;
    int rc = kExitOk;
    std::string error;
    RunOutput out;
  };
  std::vector<Job> jobs;
  for (const auto& value : values) {
    for (std::uint32_t r = 0; r < std::max<std::uint32_t>(1, base.replicas); ++r) {
      Job job;
      job.value = value;
      job.replica = r;
      job.config = base;
      job.config.scenario_path = path;
      job.config.seed = base.seed + r;
      job.config.overrides.emplace_back(param, value);
      job.config.out_dir =
          (fs::path(base.out_dir) / (param + "_" + value + (r ? "_r" + std::to_string(r) : "")))
              .string();
      const int rc = load_scenario(path, job.config.overrides, job.scenario);
      if (rc != kExitOk) return rc;  // unknown parameter or bad scenario
      jobs.push_back(std::move(job));
    }
  }

  // isolated sub-runs, optionally concurrent
  const std::uint32_t workers = std::max<std::uint32_t>(1, base.jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i].rc = run_one(jobs[i].scenario, jobs[i].config, &jobs[i].out, &jobs[i].error);
    }
  };
  std::vector<std::thread> pool;
  for (std::uint32_t w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& job : jobs) {
    if (job.rc != kExitOk) {
      std::cerr << "error: sweep " << param << "=" << job.value << ": " << job.error << "\n";
      return job.rc;
    }
    if (!job.out.result.violations.empty()) return kExitViolation;
  }

  // merge in input order: one row per (value, stream), replicas aggregated
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    std::map<std::string, SweepRow> per_stream;
    for (const auto& job : jobs) {
      if (job.value != value) continue;
      // per-run CSVs carry integer picoseconds, so merging is lossless
      std::ifstream in(job.out.csv_path);
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string stream, cls, count, min_ps, max_ps, mean_ps, jitter_ps, drops;
        std::getline(ls, stream, ',');
        std::getline(ls, cls, ',');
        std::getline(ls, count, ',');
        std::getline(ls, min_ps, ',');
        std::getline(ls, max_ps, ',');
        std::getline(ls, mean_ps, ',');
        std::getline(ls, jitter_ps, ',');
        std::getline(ls, drops, ',');
        if (cls == "be" || cls == "?" || count == "0") continue;   // cross traffic rows vary
        if (stream.find(".p") != std::string::npos) continue;      // buffer rows
        auto& row = per_stream[stream];
        row.value = value;
        row.stream = stream;
        row.cls = cls;
        row.max_latency_ps = std::max<std::int64_t>(row.max_latency_ps, std::stoll(max_ps));
        row.jitter_ps = std::max<std::int64_t>(row.jitter_ps, std::stoll(jitter_ps));
      }
    }
    for (auto& [stream, row] : per_stream) rows.push_back(row);
  }

  fs::create_directories(base.out_dir);
  const std::string merged = (fs::path(base.out_dir) / "sweep.csv").string();
  std::ofstream out(merged, std::ios::binary);
  out << "value,stream,class,max_latency_ps,jitter_ps\n";
  for (const auto& row : rows) {
    out << row.value << ',' << row.stream << ',' << row.cls << ',' << row.max_latency_ps << ','
        << row.jitter_ps << '\n';
  }
  std::cout << "sweep finished: " << rows.size() << " rows in " << merged << "\n";
  return kExitOk;
}

int cmd_schedule(const std::string& path) {
  LoadedScenario scenario;
  const auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot open scenario file '" << path << "'\n";
    return kExitConfig;
  }
  const auto parsed = andl::parse(*text);
  if (!parsed.ok()) {
    std::cerr << path << ": " << andl::format_diagnostics(parsed.diagnostics);
    return kExitConfig;
  }
  const auto validated = andl::validate(*parsed.ast);
  if (!validated.ok()) {
    // distinguish an infeasible plan from plain config errors
    for (const auto& d : validated.diagnostics) {
      if (d.message.find("Infeasible") != std::string::npos ||
          d.message.find("LcmOverflow") != std::string::npos) {
        std::cerr << path << ": " << d.message << "\n";
        return kExitViolation;
      }
    }
    std::cerr << path << ": " << andl::format_diagnostics(validated.diagnostics);
    return kExitConfig;
  }
  const auto& model = *validated.model;
  const auto& schedule = model.schedule;
  if (schedule.actions.empty()) {
    std::cout << "no time-triggered messages; empty schedule\n";
    return kExitOk;
  }
  std::cout << "cycle " << schedule.cycle.to_string() << "\n";
  for (const auto& a : schedule.actions) {
    std::cout << model.devices[a.egress.device].name << ".p" << a.egress.port << " offset "
              << a.offset.to_string() << " ct " << a.ct_id << " window "
              << a.reserved.to_string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic in-vehicle network simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string until_str;
  std::uint64_t seed = 1;
  std::vector<std::string> override_raw;
  std::string constraints_path;
  std::string out_dir = "out";
  std::string format = "csv,json";
  bool pcap = false;
  std::string param;
  std::string values_str;
  std::uint32_t num_jobs = 1;
  std::uint32_t replicas = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", scenario, "scenario file (.andl)")->required();
  };
  auto add_run_opts = [&](CLI::App* cmd) {
    cmd->add_option("--until", until_str, "simulated duration, e.g. 200ms");
    cmd->add_option("--seed", seed, "run seed (all randomness derives from it)");
    cmd->add_option("--override", override_raw, "model override key=value")->take_all();
    cmd->add_option("--constraints", constraints_path, "constraint XML file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--format", format, "outputs to write: csv, json or csv,json");
    cmd->add_flag("--pcap", pcap, "write a packet trace (classic pcap)");
  };

  CLI::App* validate_cmd = app.add_subcommand("validate", "parse and validate a scenario");
  add_common(validate_cmd);

  CLI::App* run_cmd = app.add_subcommand("run", "run one simulation");
  add_common(run_cmd);
  add_run_opts(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep_cmd);
  add_run_opts(sweep_cmd);
  sweep_cmd->add_option("--param", param, "override key to sweep")->required();
  sweep_cmd->add_option("--values", values_str, "comma separated values")->required();
  sweep_cmd->add_option("--jobs", num_jobs, "concurrent sub-runs");
  sweep_cmd->add_option("--replicas", replicas, "replicas per value (seed, seed+1, ...)");

  CLI::App* schedule_cmd = app.add_subcommand("schedule", "print the generated TDMA plan");
  add_common(schedule_cmd);

  CLI11_PARSE(app, argc, argv);

  bool ok = true;
  RunConfig config;
  config.overrides = split_overrides(override_raw, ok);
  if (!ok) return kExitConfig;
  config.seed = seed;
  config.constraints_path = constraints_path;
  config.out_dir = out_dir;
  config.pcap = pcap;
  config.jobs = num_jobs;
  config.replicas = replicas;
  config.write_csv = format.find("csv") != std::string::npos;
  config.write_json = format.find("json") != std::string::npos;
  if (!config.write_csv && !config.write_json) {
    std::cerr << "error: --format must name csv and/or json\n";
    return kExitConfig;
  }

  // --until, falling back to the scenario's sim-time-limit, then 100 ms
  const bool until_given = !until_str.empty();
  if (until_given) {
    const auto q = andl::parse_quantity(until_str);
    if (!q || q->kind != andl::Quantity::Kind::Time || q->value <= 0) {
      std::cerr << "error: bad --until value '" << until_str << "'\n";
      return kExitConfig;
    }
    config.duration = SimTime::ps(q->value);
  }

  try {
    if (app.got_subcommand(validate_cmd)) return cmd_validate(scenario);
    if (app.got_subcommand(schedule_cmd)) return cmd_schedule(scenario);

    // run and sweep honor scenario ini defaults for seed and duration
    LoadedScenario probe;
    if (load_scenario(scenario, {}, probe, /*quiet=*/true) == kExitOk) {
      const bool seed_given = run_cmd->count("--seed") || sweep_cmd->count("--seed");
      apply_ini_defaults(probe.model, config.seed, config.duration, seed_given, until_given);
    }

    if (app.got_subcommand(run_cmd)) return cmd_run(scenario, config);
    if (app.got_subcommand(sweep_cmd)) {
      std::vector<std::string> values;
      std::istringstream vs(values_str);
      std::string v;
      while (std::getline(vs, v, ',')) {
        if (!v.empty()) values.push_back(v);
      }
      if (values.empty()) {
        std::cerr << "error: --values is empty\n";
        return kExitConfig;
      }
      return cmd_sweep(scenario, config, param, values);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
