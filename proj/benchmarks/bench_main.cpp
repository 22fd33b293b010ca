#include <benchmark/benchmark.h>

#include "r2c/analytics.hpp"
#include "r2c/sim.hpp"

using namespace r2c;

namespace {

void BM_GossipFlood(benchmark::State& state) {
  const wireless::GridNetwork net(std::uint32_t(state.range(0)), 10.0);
  const wireless::ChannelParams ch;
  const double eps = wireless::epsilon_gossip(ch, net);
  auto rng = sim::make_stream(1, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::disseminate_gossip(net, eps, 0, 1000, rng).transmissions);
  }
  state.SetItemsProcessed(state.iterations() * net.node_count());
}
BENCHMARK(BM_GossipFlood)->Arg(9)->Arg(20)->Arg(28);

void BM_Broadcast(benchmark::State& state) {
  const wireless::GridNetwork net(std::uint32_t(state.range(0)), 10.0);
  const wireless::ChannelParams ch;
  const sim::LinkTable links(ch, net);
  auto rng = sim::make_stream(2, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::disseminate_broadcast(net, links, 0, 7, rng).transmissions);
  }
  state.SetItemsProcessed(state.iterations() * net.node_count());
}
BENCHMARK(BM_Broadcast)->Arg(9)->Arg(20)->Arg(28);

void BM_ResiliencyExact(benchmark::State& state) {
  const auto n = std::uint32_t(state.range(0));
  for (auto _ : state) {
    for (std::uint32_t k = 1; k <= n; ++k) {
      benchmark::DoNotOptimize(analytics::resiliency_exact(n, n / 4, k));
    }
  }
}
BENCHMARK(BM_ResiliencyExact)->Arg(80)->Arg(783);

void BM_Round(benchmark::State& state) {
  const wireless::GridNetwork net(9, 10.0);
  const wireless::ChannelParams ch;
  const auto mode = state.range(0) == 0 ? ProtocolMode::rc : ProtocolMode::r2c;
  const auto d = state.range(1) == 0 ? Dissemination::gossip : Dissemination::broadcast;
  std::vector<Slots> windows(net.node_count(), 0);
  for (NodeId i = 0; i < net.node_count(); ++i) {
    windows[i] = d == Dissemination::gossip ? Slots(wireless::max_hops(net, i)) + 2
                                            : wireless::broadcast_window(ch, net, i, 0.9999);
  }
  const auto setup = sim::make_round_setup(net, ch, mode, d, 0, 20, 5, windows);
  auto rng = sim::make_stream(3, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_round(setup, rng).latency_slots);
}
BENCHMARK(BM_Round)->ArgNames({"r2c", "broadcast"})->ArgsProduct({{0, 1}, {0, 1}});

void BM_CalibrateGossip(benchmark::State& state) {
  const wireless::GridNetwork net(9, 10.0);
  const wireless::ChannelParams ch;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::calibrate_gossip_windows(net, ch, 0.9999, 1000, 5));
  }
}
BENCHMARK(BM_CalibrateGossip)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
