#include <benchmark/benchmark.h>

#include "cir/stream_gen.hpp"
#include "cir/stream_io.hpp"

namespace {

cir::StreamConfig challenge_scale_config() {
    cir::StreamConfig cfg;
    cfg.n_experiences = 50;
    cfg.experience_size = 2000;
    cfg.n_classes = 100;
    cfg.samples_per_class = 500;
    cfg.first_occurrence = cir::FirstOccurrenceDist::geometric(0.6);
    cfg.repetition = cir::RepetitionSpec::zipf(0.8);
    cfg.seed = 1;
    return cfg;
}

void BM_GenerateChallengeScaleStream(benchmark::State& state) {
    auto cfg = challenge_scale_config();
    for (auto _ : state) {
        cfg.seed += 1;
        benchmark::DoNotOptimize(cir::generate_stream(cfg));
    }
}
BENCHMARK(BM_GenerateChallengeScaleStream);

void BM_SerializeStream(benchmark::State& state) {
    const auto stream = cir::generate_stream(challenge_scale_config());
    for (auto _ : state) benchmark::DoNotOptimize(cir::serialize_stream(stream));
}
BENCHMARK(BM_SerializeStream);

}  // namespace

BENCHMARK_MAIN();
