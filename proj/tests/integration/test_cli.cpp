#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = IVNSIM_CLI_PATH;
const std::string kScenarios = IVNSIM_SCENARIO_DIR;

struct CmdResult {
  int exit_code;
  std::string output;  // stdout and stderr combined
};

CmdResult run_cmd(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[512];
  while (fgets(buf, sizeof buf, pipe)) output += buf;
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "ivnsim_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("validate accepts the reference scenario") {
  const auto r = run_cmd("validate " + kScenarios + "/listing1.andl");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("7 devices") != std::string::npos);
}

TEST_CASE("validate rejects an oversized CAN payload with a positioned diagnostic") {
  const auto dir = temp_dir("badpayload");
  std::string text = slurp(kScenarios + "/listing1.andl");
  const auto pos = text.find("payload 6B");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 10, "payload 9B");
  const fs::path bad = dir / "bad.andl";
  std::ofstream(bad) << text;
  const auto r = run_cmd("validate " + bad.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("8 B CAN maximum") != std::string::npos);
}

TEST_CASE("validate reports a missing file") {
  const auto r = run_cmd("validate /nonexistent/void.andl");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("cannot open") != std::string::npos);
}

TEST_CASE("a clean run exits zero and writes the stats files") {
  const auto dir = temp_dir("cleanrun");
  const auto r =
      run_cmd("run " + kScenarios + "/listing1.andl --until 30ms --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "stats.csv"));
  CHECK(fs::exists(dir / "stats.json"));
  CHECK_FALSE(fs::exists(dir / "trace.pcap"));  // pcap only on request
  CHECK(slurp(dir / "stats.csv").find("msg1,") != std::string::npos);
}

TEST_CASE("a violated stop constraint exits one and names the rule") {
  const auto dir = temp_dir("stoprun");
  const fs::path rules = dir / "rules.xml";
  std::ofstream(rules) << R"(<constraints>
  <constraint module="smallNetwork.node2" name="msg1:latency" action="stop">
    <max>0.001</max>
  </constraint>
</constraints>)";
  const auto r = run_cmd("run " + kScenarios + "/listing1.andl --until 60ms --constraints " +
                         rules.string() + " --out " + dir.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("rule#0") != std::string::npos);
  CHECK(r.output.find("[stop]") != std::string::npos);
  CHECK(r.output.find("stopped early") != std::string::npos);
  CHECK(fs::exists(dir / "violations.txt"));
}

TEST_CASE("the ini defaults for seed and duration are honored") {
  // control.andl carries sim-time-limit = 200ms; cap it with --until and
  // check the run reports the flag value instead
  const auto dir = temp_dir("inirun");
  const auto r =
      run_cmd("run " + kScenarios + "/control.andl --until 20ms --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("run finished at 20ms") != std::string::npos);
  const auto r2 = run_cmd("run " + kScenarios + "/control.andl --out " + dir.string());
  CHECK(r2.output.find("run finished at 200ms") != std::string::npos);
}

TEST_CASE("unknown overrides and sweep parameters exit two") {
  const auto dir = temp_dir("badoverride");
  const auto r = run_cmd("run " + kScenarios + "/control.andl --until 10ms --override bogus=1 --out " +
                         dir.string());
  CHECK(r.exit_code == 2);
  const auto r2 = run_cmd("sweep " + kScenarios + "/control.andl --param bogus --values 1,2 --out " +
                          dir.string());
  CHECK(r2.exit_code == 2);
}

TEST_CASE("a sweep emits one merged row per value and stream") {
  const auto dir = temp_dir("sweep");
  const auto r = run_cmd("sweep " + kScenarios + "/control.andl --until 40ms" +
                         " --param cross_traffic_frame_size --values 0,1518 --jobs 2 --out " +
                         dir.string());
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.find("value,stream,class,max_latency_ps,jitter_ps") == 0);
  for (const char* needle :
       {"0,ctl_tt,tt", "0,ctl_rc,rc", "0,ctl_avb,avb_a", "1518,ctl_tt,tt", "1518,ctl_rc,rc",
        "1518,ctl_avb,avb_a"}) {
    CHECK(csv.find(needle) != std::string::npos);
  }
}

TEST_CASE("sweep results are independent of the worker count") {
  const auto dir1 = temp_dir("sweep_j1");
  const auto dir4 = temp_dir("sweep_j4");
  const std::string common = "sweep " + kScenarios + "/control.andl --until 30ms" +
                             " --param cross_traffic_frame_size --values 64,800,1518" +
                             " --replicas 2";
  CHECK(run_cmd(common + " --jobs 1 --out " + dir1.string()).exit_code == 0);
  CHECK(run_cmd(common + " --jobs 4 --out " + dir4.string()).exit_code == 0);
  CHECK(slurp(dir1 / "sweep.csv") == slurp(dir4 / "sweep.csv"));
  CHECK_FALSE(slurp(dir1 / "sweep.csv").empty());
}

TEST_CASE("a single-value sweep matches the plain run") {
  const auto sweep_dir = temp_dir("sweep_single");
  const auto run_dir = temp_dir("run_single");
  CHECK(run_cmd("sweep " + kScenarios + "/control.andl --until 30ms --param cross_traffic_frame_size"
                " --values 800 --out " + sweep_dir.string()).exit_code == 0);
  CHECK(run_cmd("run " + kScenarios + "/control.andl --until 30ms --override"
                " cross_traffic_frame_size=800 --out " + run_dir.string()).exit_code == 0);
  CHECK(slurp(sweep_dir / "cross_traffic_frame_size_800" / "stats.csv") ==
        slurp(run_dir / "stats.csv"));
}

TEST_CASE("schedule prints the TDMA plan sorted and stable") {
  const auto r = run_cmd("schedule " + kScenarios + "/listing1.andl");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("cycle 5ms") != std::string::npos);
  CHECK(r.output.find("ct 102") != std::string::npos);
  // one action per backbone egress port towards the receiver
  CHECK(r.output.find("gw1.p0") != std::string::npos);
  CHECK(r.output.find("switch1.p1") != std::string::npos);
  const auto again = run_cmd("schedule " + kScenarios + "/listing1.andl");
  CHECK(r.output == again.output);
}

TEST_CASE("schedule with no TT messages prints an empty plan") {
  const auto dir = temp_dir("nott");
  const fs::path file = dir / "nott.andl";
  std::ofstream(file) << "types t { ethernetLink E { bandwidth 100Mb/s; } }\n"
                         "network x { devices{ node a; node b; }\n"
                         "connections{ segment s { a <--> {new t.E} <--> b; } }\n"
                         "communication{ message m { sender a; receivers b; payload 10B;\n"
                         "period 1ms; mapping{ s: be{}; } } } }";
  const auto r = run_cmd("schedule " + file.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("empty schedule") != std::string::npos);
}

TEST_CASE("an unschedulable port exits one") {
  const auto dir = temp_dir("saturated");
  const fs::path file = dir / "sat.andl";
  std::ostringstream msgs;
  for (int i = 0; i < 10; ++i) {
    msgs << "message z" << i << " { sender a; receivers b; payload 1500B; period 1ms;"
         << " mapping{ s: tt{ctID " << 10 + i << ";}; } }\n";
  }
  std::ofstream(file) << "types t { ethernetLink E { bandwidth 100Mb/s; } }\n"
                         "network x { devices{ node a; node b; }\n"
                         "connections{ segment s { a <--> {new t.E} <--> b; } }\n"
                         "communication{\n"
                      << msgs.str() << "} }";
  const auto r = run_cmd("schedule " + file.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("Infeasible") != std::string::npos);
}

TEST_CASE("pcap output appears only when requested") {
  const auto dir = temp_dir("pcaprun");
  const auto r = run_cmd("run " + kScenarios + "/control.andl --until 10ms --pcap --out " +
                         dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "trace.pcap"));
  CHECK(fs::file_size(dir / "trace.pcap") > 24);
}

TEST_CASE("format selection controls which stats files appear") {
  const auto dir = temp_dir("jsononly");
  const auto r = run_cmd("run " + kScenarios + "/listing1.andl --until 10ms --format json --out " +
                         dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "stats.json"));
  CHECK_FALSE(fs::exists(dir / "stats.csv"));
  const auto bad = run_cmd("run " + kScenarios + "/listing1.andl --format yaml --out " +
                           dir.string());
  CHECK(bad.exit_code == 2);
}
