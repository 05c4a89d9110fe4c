#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "ivnsim/andl.hpp"
#include "ivnsim/can.hpp"
#include "ivnsim/cbs.hpp"
#include "ivnsim/event_queue.hpp"
#include "ivnsim/rng.hpp"
#include "ivnsim/simulation.hpp"

using namespace ivn;

namespace {

void BM_EventQueueScheduleAndPop(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  for (auto _ : state) {
    EventQueue q;
    for (int i = 0; i < n; ++i) {
      q.schedule(SimTime::ps(rng.uniform_i64(0, 1'000'000)), TieClass::Generic, [] {});
    }
    std::uint64_t popped = 0;
    while (auto ev = q.pop_next()) ++popped;
    benchmark::DoNotOptimize(popped);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EventQueueScheduleAndPop)->Arg(1'000)->Arg(100'000);

void BM_CbsAdvance(benchmark::State& state) {
  CbsState s;
  s.idle_slope_bps = 75'000'000;
  s.send_slope_bps = -25'000'000;
  std::int64_t t = 0;
  for (auto _ : state) {
    t += 1000;
    cbs_advance(s, SimTime::ps(t), t % 3 ? CbsMode::Waiting : CbsMode::Transmitting);
    benchmark::DoNotOptimize(s.credit);
  }
}
BENCHMARK(BM_CbsAdvance);

void BM_CanSerializeAndStuff(benchmark::State& state) {
  Rng rng(7);
  CanFrame f;
  f.id = 0x355;
  f.dlc = 8;
  for (int i = 0; i < 8; ++i) f.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng.next_u64());
  for (auto _ : state) {
    benchmark::DoNotOptimize(serialize_and_stuff(f));
  }
}
BENCHMARK(BM_CanSerializeAndStuff);

std::string load_scenario(const char* name) {
  std::ifstream in(std::string(IVNSIM_SCENARIO_DIR) + "/" + name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void BM_AndlParseValidate(benchmark::State& state) {
  const std::string text = load_scenario("control.andl");
  for (auto _ : state) {
    const auto parsed = andl::parse(text);
    const auto validated = andl::validate(*parsed.ast);
    benchmark::DoNotOptimize(validated.ok());
  }
}
BENCHMARK(BM_AndlParseValidate);

void BM_ControlScenarioRun(benchmark::State& state) {
  const auto parsed = andl::parse(load_scenario("control.andl"));
  const auto validated = andl::validate(*parsed.ast);
  for (auto _ : state) {
    Simulation sim(*validated.model, 1);
    const auto result = sim.run(SimTime::ms(50));
    benchmark::DoNotOptimize(result.summary.processed);
  }
}
BENCHMARK(BM_ControlScenarioRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
