#include <benchmark/benchmark.h>

#include "dmbpn/memory.hpp"
#include "dmbpn/recurrent.hpp"

using namespace dmbpn;

namespace {

void BM_GruCellForward(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    ParamRegistry reg;
    Rng rng(1);
    GruParams p = make_gru(reg, "g", dim, dim, rng);
    std::vector<double> xv(static_cast<std::size_t>(dim), 0.1);

    Tape tape;
    for (auto _ : state) {
        tape.reset();
        Var x = tape.constant(xv);
        Var h = gru_cell(tape, x, tape.zeros(dim), p);
        benchmark::DoNotOptimize(tape.value(h).data());
    }
}
BENCHMARK(BM_GruCellForward)->Arg(16)->Arg(50);

void BM_GruCellBackward(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    ParamRegistry reg;
    Rng rng(1);
    GruParams p = make_gru(reg, "g", dim, dim, rng);
    std::vector<double> xv(static_cast<std::size_t>(dim), 0.1);

    Tape tape;
    for (auto _ : state) {
        tape.reset();
        reg.clear_grads();
        Var x = tape.constant(xv);
        Var h = gru_cell(tape, x, tape.zeros(dim), p);
        tape.backward(tape.dot(h, h));
        benchmark::DoNotOptimize(p.wz->grad.data());
    }
}
BENCHMARK(BM_GruCellBackward)->Arg(16)->Arg(50);

void BM_EpisodicMemory(benchmark::State& state) {
    const int n_facts = static_cast<int>(state.range(0));
    const int dim = 32;
    ParamRegistry reg;
    Rng rng(2);
    MemoryParams mem = make_memory(reg, "m", dim, dim, MemoryUpdate::Relu, rng);
    std::vector<double> v(static_cast<std::size_t>(dim), 0.05);

    Tape tape;
    for (auto _ : state) {
        tape.reset();
        std::vector<Var> facts;
        for (int i = 0; i < n_facts; ++i) facts.push_back(tape.constant(v));
        Var m = run_episodic_memory(tape, facts, tape.constant(v), 3, mem);
        benchmark::DoNotOptimize(tape.value(m).data());
    }
}
BENCHMARK(BM_EpisodicMemory)->Arg(5)->Arg(10)->Arg(25);

}  // namespace
