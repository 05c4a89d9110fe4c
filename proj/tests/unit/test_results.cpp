#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ivnsim/constraints.hpp"
#include "ivnsim/rng.hpp"
#include "ivnsim/stats.hpp"
#include "ivnsim/writers.hpp"

using namespace ivn;
using namespace ivn::time_literals;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("latency accumulators track min max mean and jitter") {
  StatsCollector stats;
  stats.record_latency("s", 0_ps, 3_us, 1);
  stats.record_latency("s", 0_ps, 5_us, 1);
  stats.record_latency("s", 0_ps, 4_us, 1);
  const auto& s = stats.streams().at("s");
  CHECK(s.count() == 3);
  CHECK(s.min() == 3_us);
  CHECK(s.max() == 5_us);
  CHECK(s.mean_floor() == 4_us);
  CHECK(s.jitter() == 2_us);
  // sum is exact: mean*count + remainder == sum
  CHECK(s.sum_ps() == 12'000'000);
}

TEST_CASE("a single sample has zero jitter") {
  StatsCollector stats;
  stats.record_latency("s", 1_us, 2_us, 1);
  CHECK(stats.streams().at("s").jitter() == 0_ps);
}

TEST_CASE("incomplete hop trails are rejected") {
  StatsCollector stats;
  EthernetFrame f;
  f.created_at = 1_us;
  CHECK_THROWS_AS(stats.record_latency("s", f), SimError);
  f.hop_trail.push_back({0, 2_us, 2_us});
  f.hop_trail.push_back({1, 1_us, 1_us});  // goes backwards
  CHECK_THROWS_AS(stats.record_latency("s", f), SimError);
}

TEST_CASE("watermarks are monotone and keyed by queue") {
  StatsCollector stats;
  stats.record_queue_depth("sw.p0", "be", 0, 3, 300);
  stats.record_queue_depth("sw.p0", "be", 0, 1, 100);
  stats.record_queue_depth("sw.p0", "be", 0, 7, 700);
  const auto& wm = stats.watermarks().begin()->second;
  CHECK(wm.max_frames == 7);
  CHECK(wm.max_bytes == 700);
}

static const char* kListing2Xml = R"(<constraints>
  <constraint module="Network.node1" name="rxMessageAge:vector">
    <min>1.5</min>
    <max>1.7</max>
  </constraint>
  <constraint module="(.*)\.node2" moduleIsRegex="true"
    name="(rx|tx)MessageAge:vector" nameIsRegex="true">
    <avg_min samples="10">1.5</avg_min>
    <avg_max samples="10">1.7</avg_max>
  </constraint>
</constraints>)";

TEST_CASE("the reference constraint file parses") {
  const auto rules = parse_constraints_xml(kListing2Xml);
  REQUIRE(rules.size() == 2);
  CHECK(rules[0].module_pattern == "Network.node1");
  CHECK(rules[0].min == doctest::Approx(1.5));
  CHECK(rules[0].max == doctest::Approx(1.7));
  CHECK_FALSE(rules[0].module_is_regex);
  CHECK(rules[1].module_is_regex);
  CHECK(rules[1].avg_min_samples == 10);
  CHECK(rules[1].avg_max == doctest::Approx(1.7));
}

TEST_CASE("min max bounds flag exactly the out-of-range samples") {
  ConstraintChecker checker(parse_constraints_xml(kListing2Xml));
  CHECK_FALSE(checker.sample("Network.node1", "rxMessageAge:vector", 1.6, 1_ms));
  CHECK(checker.violations().empty());
  checker.sample("Network.node1", "rxMessageAge:vector", 1.8, 2_ms);
  REQUIRE(checker.violations().size() == 1);
  CHECK(checker.violations()[0].bound == "max");
  CHECK(checker.violations()[0].value == doctest::Approx(1.8));
  checker.sample("Network.node1", "rxMessageAge:vector", 1.4, 3_ms);
  REQUIRE(checker.violations().size() == 2);
  CHECK(checker.violations()[1].bound == "min");
  // non-matching module is ignored
  checker.sample("Network.other", "rxMessageAge:vector", 99.0, 4_ms);
  CHECK(checker.violations().size() == 2);
}

TEST_CASE("averaged bounds wait for the sample window") {
  // mean over 10 samples; nine in-range samples, the tenth pushes it over.
  ConstraintChecker checker(parse_constraints_xml(kListing2Xml));
  for (int i = 0; i < 9; ++i) {
    checker.sample("Network.node2", "rxMessageAge:vector", 1.7, SimTime::ms(i));
    CHECK(checker.violations().empty());  // window not filled yet
  }
  // nine 1.7s plus one 1.8 -> mean 1.71 > 1.7
  checker.sample("Network.node2", "rxMessageAge:vector", 1.8, 10_ms);
  REQUIRE_FALSE(checker.violations().empty());
  CHECK(checker.violations()[0].bound == "avg_max");
  CHECK(checker.violations()[0].value == doctest::Approx(1.71));
}

TEST_CASE("regex rules match both metric spellings") {
  ConstraintChecker checker(parse_constraints_xml(kListing2Xml));
  for (int i = 0; i < 10; ++i) {
    checker.sample("Network.node2", "txMessageAge:vector", 1.0, SimTime::ms(i));
  }
  REQUIRE_FALSE(checker.violations().empty());
  CHECK(checker.violations()[0].bound == "avg_min");
}

TEST_CASE("stop action raises the stop signal") {
  auto rules = parse_constraints_xml(
      R"(<constraints><constraint module="m" name="v" action="stop"><max>1</max></constraint></constraints>)");
  ConstraintChecker checker(std::move(rules));
  CHECK_FALSE(checker.sample("m", "v", 0.5, 1_ms));
  CHECK(checker.sample("m", "v", 2.0, 2_ms));
  CHECK(checker.stop_signalled());
}

TEST_CASE("interval and sum bounds use the documented semantics") {
  auto rules = parse_constraints_xml(
      R"(<constraints><constraint module="m" name="v">
           <interval_max window="10ms">2.0</interval_max>
           <sum_max>100</sum_max>
         </constraint></constraints>)");
  ConstraintChecker checker(std::move(rules));
  checker.sample("m", "v", 3.0, 1_ms);  // window not yet spanned
  CHECK(checker.violations().empty());
  checker.sample("m", "v", 3.0, 12_ms);  // trailing mean 3.0 > 2.0
  REQUIRE_FALSE(checker.violations().empty());
  CHECK(checker.violations()[0].bound == "interval_max");
  for (int i = 0; i < 40; ++i) checker.sample("m", "v", 3.0, SimTime::ms(13 + i));
  bool sum_hit = false;
  for (const auto& v : checker.violations()) sum_hit |= v.bound == "sum_max";
  CHECK(sum_hit);
}

TEST_CASE("malformed constraint files are rejected") {
  CHECK_THROWS_AS(parse_constraints_xml("<constraints><constraint/></constraints>"), SimError);
  CHECK_THROWS_AS(parse_constraints_xml("<wrong></wrong>"), SimError);
  CHECK_THROWS_AS(parse_constraints_xml("<constraints><constraint name='x'><max>oops</max></constraint></constraints>"), SimError);
  CHECK_THROWS_AS(parse_constraints_xml(""), SimError);
}

// Brute-force replay: with a random rule set and sample log, the checker's
// violations equal an independent re-evaluation over the log.
TEST_CASE("checker matches a replay oracle on random logs") {
  Rng rng(99);
  for (int round = 0; round < 20; ++round) {
    // bounds on the 0.25 grid survive the trip through the XML text exactly
    const double lo = 1.0 + 0.25 * static_cast<double>(rng.uniform_i64(0, 2));
    const double hi = lo + 0.25 * static_cast<double>(rng.uniform_i64(1, 2));
    const std::uint32_t n = static_cast<std::uint32_t>(rng.uniform_i64(2, 8));
    std::ostringstream xml;
    xml << "<constraints><constraint module=\"m\" name=\"v\"><min>" << lo << "</min><max>" << hi
        << "</max><avg_max samples=\"" << n << "\">" << hi << "</avg_max></constraint></constraints>";
    ConstraintChecker checker(parse_constraints_xml(xml.str()));
    std::vector<double> log;
    for (int i = 0; i < 200; ++i) {
      log.push_back(0.8 + 0.01 * static_cast<double>(rng.uniform_i64(0, 120)));
    }
    for (std::size_t i = 0; i < log.size(); ++i) {
      checker.sample("m", "v", log[i], SimTime::us(static_cast<std::int64_t>(i)));
    }
    std::size_t expected = 0;
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (log[i] < lo) ++expected;
      if (log[i] > hi) ++expected;
      if (i + 1 >= n) {
        double sum = 0;
        for (std::size_t k = i + 1 - n; k <= i; ++k) sum += log[k];
        if (sum / n > hi) ++expected;
      }
    }
    CHECK(checker.violations().size() == expected);
  }
}

TEST_CASE("csv writer emits the normative schema deterministically") {
  StatsCollector stats;
  const std::string path = temp_path("ivnsim_stats_test.csv");
  SUBCASE("empty run gives a header-only file") {
    write_stats_csv(stats, {}, path);
    CHECK(slurp(path) == "stream,class,count,min_ps,max_ps,mean_ps,jitter_ps,drops\n");
  }
  SUBCASE("rows carry integer picoseconds") {
    stats.record_latency("ctrl", 0_ps, 3_us, 1);
    stats.record_latency("ctrl", 0_ps, 5_us, 1);
    stats.record_latency("ctrl", 0_ps, 4_us, 1);
    write_stats_csv(stats, {{"ctrl", "tt"}}, path);
    CHECK(slurp(path) ==
          "stream,class,count,min_ps,max_ps,mean_ps,jitter_ps,drops\n"
          "ctrl,tt,3,3000000,5000000,4000000,2000000,0\n");
  }
  SUBCASE("identical runs give identical bytes") {
    stats.record_latency("a", 0_ps, 1_us, 1);
    stats.record_queue_depth("sw.p0", "be", 0, 4, 400);
    write_stats_csv(stats, {{"a", "be"}}, path);
    const std::string once = slurp(path);
    write_stats_csv(stats, {{"a", "be"}}, path);
    CHECK(once == slurp(path));
    CHECK(once.find("sw.p0,be,4,0,400,0,0,0") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("json writer mirrors the same data") {
  StatsCollector stats;
  stats.record_latency("a", 0_ps, 1_us, 1);
  stats.record_queue_depth("sw.p0", "rc", 5, 2, 128);
  const std::string path = temp_path("ivnsim_stats_test.json");
  write_stats_json(stats, {{"a", "rc"}}, "cafebabe", {{"note", "x"}}, path);
  const std::string text = slurp(path);
  CHECK(text.find("\"config_digest\": \"cafebabe\"") != std::string::npos);
  CHECK(text.find("\"streams\"") != std::string::npos);
  CHECK(text.find("\"buffers\"") != std::string::npos);
  CHECK(text.find("\"max_frames\": 2") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("pcap writer produces valid classic pcap") {
  PacketTrace trace;
  const std::string path = temp_path("ivnsim_trace_test.pcap");
  SUBCASE("no frames: just the 24 byte global header") {
    write_pcap(trace, path);
    CHECK(std::filesystem::file_size(path) == 24);
    CHECK(read_pcap(path).empty());
  }
  SUBCASE("timestamps divide down to whole microseconds") {
    EthernetFrame f;
    f.src = 1;
    f.dst = 2;
    f.priority = 6;
    f.payload_len = 100;
    trace.add(f, SimTime::ps(1'234'567'890));
    write_pcap(trace, path);
    const auto records = read_pcap(path);
    REQUIRE(records.size() == 1);
    CHECK(records[0].ts_sec == 0);
    CHECK(records[0].ts_usec == 1234);
    // 18 bytes of header+tag plus the 100 byte payload
    CHECK(records[0].bytes.size() == 118);
    // 802.1Q TCI carries the priority in the top three bits
    CHECK((records[0].bytes[14] >> 5) == 6);
  }
  SUBCASE("round trip preserves lengths and timestamps") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
      EthernetFrame f;
      f.src = static_cast<std::uint32_t>(i);
      f.dst = static_cast<std::uint32_t>(i + 1);
      f.payload_len = static_cast<std::uint32_t>(rng.uniform_i64(0, 1500));
      trace.add(f, SimTime::us(rng.uniform_i64(0, 1'000'000)));
    }
    write_pcap(trace, path);
    const auto records = read_pcap(path);
    REQUIRE(records.size() == 20);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& cap = trace.frames()[i];
      CHECK(records[i].bytes.size() == 18 + std::max<std::uint32_t>(cap.payload_len, 46));
      const std::int64_t ps = cap.timestamp.ticks();
      CHECK(records[i].ts_sec == ps / 1'000'000'000'000);
      CHECK(records[i].ts_usec == (ps % 1'000'000'000'000) / 1'000'000);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("config digest is stable and sensitive") {
  const auto d1 = config_digest("scenario", {{"a", "1"}}, 7, 1_ms);
  const auto d2 = config_digest("scenario", {{"a", "1"}}, 7, 1_ms);
  const auto d3 = config_digest("scenario", {{"a", "2"}}, 7, 1_ms);
  CHECK(d1 == d2);
  CHECK(d1 != d3);
  CHECK(d1.size() == 16);
  // override order does not matter
  CHECK(config_digest("s", {{"a", "1"}, {"b", "2"}}, 1, 1_ms) ==
        config_digest("s", {{"b", "2"}, {"a", "1"}}, 1, 1_ms));
}
