#include <benchmark/benchmark.h>

#include "dmbpn/harness.hpp"

using namespace dmbpn;

namespace {

struct EpisodeSetup {
    RunConfig cfg;
    PreparedData data;
    DmbPn model;
    Episode episode;

    static EpisodeSetup make() {
        RunConfig cfg;
        cfg.n_way = 5;
        cfg.k_shot = 5;
        cfg.q_query = 5;
        cfg.d_w = 32;
        cfg.d_p = 4;
        cfg.hidden = 16;
        cfg.memory_dim = 32;
        cfg.passes = 3;
        cfg.dropout = 0.0;
        cfg.seed = 7;
        cfg.train_frac = 0.5;
        cfg.val_frac = 0.25;
        cfg.test_frac = 0.25;
        SynthOptions opts;
        opts.sentence_len = 7;
        PreparedData data = prepare_data(cfg, synth_generate(20, 30, 80, 5, opts));
        DmbPn model = build_model(cfg, data);
        TypeSection section = data.split.train_section();
        Rng rng(3);
        Episode episode = sample_episode(section, cfg.episode_config(), rng);
        return {cfg, std::move(data), std::move(model), std::move(episode)};
    }
};

void BM_EpisodeForward(benchmark::State& state) {
    auto setup = EpisodeSetup::make();
    Tape tape;
    for (auto _ : state) {
        tape.reset();
        EpisodeResult res = setup.model.forward(tape, setup.episode, setup.data.vocab, false);
        benchmark::DoNotOptimize(tape.scalar(res.joint));
    }
    state.counters["tape_nodes"] = static_cast<double>(tape.node_count());
}
BENCHMARK(BM_EpisodeForward)->Unit(benchmark::kMillisecond);

void BM_EpisodeTrainStep(benchmark::State& state) {
    auto setup = EpisodeSetup::make();
    Tape tape;
    for (auto _ : state) {
        tape.reset();
        EpisodeResult res = setup.model.forward(tape, setup.episode, setup.data.vocab, false);
        tape.backward(res.joint);
        sgd_step(setup.model.params(), 1e-3);
        benchmark::DoNotOptimize(tape.scalar(res.joint));
    }
}
BENCHMARK(BM_EpisodeTrainStep)->Unit(benchmark::kMillisecond);

void BM_EpisodeSampling(benchmark::State& state) {
    auto setup = EpisodeSetup::make();
    TypeSection section = setup.data.split.train_section();
    Rng rng(9);
    for (auto _ : state) {
        Episode ep = sample_episode(section, setup.cfg.episode_config(), rng);
        benchmark::DoNotOptimize(ep.query.size());
    }
}
BENCHMARK(BM_EpisodeSampling);

}  // namespace
