#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cir/stream_gen.hpp"

namespace {

using namespace cir;

// Closed-form truncated geometric pmf over experiences 1..N. Independent of
// the library's summation-based normalization.
std::vector<double> truncated_geometric(double p, std::size_t n) {
    std::vector<double> pmf(n);
    const double z = 1.0 - std::pow(1.0 - p, static_cast<double>(n));
    for (std::size_t t = 1; t <= n; ++t)
        pmf[t - 1] = p * std::pow(1.0 - p, static_cast<double>(t - 1)) / z;
    return pmf;
}

StreamConfig base_config() {
    StreamConfig cfg;
    cfg.n_experiences = 50;
    cfg.experience_size = 200;
    cfg.n_classes = 100;
    cfg.samples_per_class = 200;
    cfg.first_occurrence = FirstOccurrenceDist::geometric(0.5);
    cfg.repetition = RepetitionSpec::zipf(0.7);
    cfg.seed = 41;
    return cfg;
}

TEST(FirstOccurrence, TruncatedGeometricMatchesClosedForm) {
    const auto pmf = first_occurrence_pmf(FirstOccurrenceDist::geometric(0.9), 50);
    const auto expected = truncated_geometric(0.9, 50);
    ASSERT_EQ(pmf.size(), expected.size());
    for (std::size_t i = 0; i < pmf.size(); ++i) EXPECT_NEAR(pmf[i], expected[i], 1e-12);
    EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-9);
}

TEST(FirstOccurrence, SteepGeometricConcentratesOnFirstExperience) {
    StreamConfig cfg = base_config();
    cfg.n_classes = 100000;
    cfg.first_occurrence = FirstOccurrenceDist::geometric(0.9);
    cfg.seed = 7;
    const auto first = sample_first_occurrences(cfg);
    const double frac_at_one =
        static_cast<double>(std::count(first.begin(), first.end(), std::size_t{1})) /
        static_cast<double>(first.size());
    const double analytic = truncated_geometric(0.9, 50)[0];
    EXPECT_NEAR(frac_at_one, analytic, 0.01);
}

TEST(FirstOccurrence, AllMassOnExperienceOne) {
    StreamConfig cfg = base_config();
    std::vector<double> pmf(50, 0.0);
    pmf[0] = 1.0;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf(pmf);
    for (std::size_t f : sample_first_occurrences(cfg)) EXPECT_EQ(f, 1u);
}

TEST(FirstOccurrence, ShallowGeometricIsNearUniform) {
    const auto pmf = first_occurrence_pmf(FirstOccurrenceDist::geometric(0.001), 50);
    const auto [lo, hi] = std::minmax_element(pmf.begin(), pmf.end());
    // max/min = (1 - 0.001)^-(N-1)
    EXPECT_NEAR(*hi / *lo, std::pow(0.999, -49.0), 1e-9);
    EXPECT_LT(*hi / *lo, 1.06);
}

TEST(FirstOccurrence, EmpiricalTotalVariationBelowOnePercent) {
    StreamConfig cfg = base_config();
    cfg.n_classes = 100000;
    cfg.seed = 11;
    for (double p : {0.5, 0.001, 0.2}) {
        cfg.first_occurrence = FirstOccurrenceDist::geometric(p);
        const auto first = sample_first_occurrences(cfg);
        std::vector<double> hist(cfg.n_experiences, 0.0);
        for (std::size_t f : first) hist[f - 1] += 1.0 / static_cast<double>(first.size());
        const auto analytic = truncated_geometric(p, cfg.n_experiences);
        double tv = 0.0;
        for (std::size_t i = 0; i < hist.size(); ++i) tv += std::abs(hist[i] - analytic[i]);
        EXPECT_LT(tv / 2.0, 0.01) << "p=" << p;
    }
}

TEST(FirstOccurrence, InvalidPmfRejected) {
    EXPECT_THROW(first_occurrence_pmf(FirstOccurrenceDist::explicit_pmf({0.5, -0.1, 0.6}), 3),
                 ConfigError);
    EXPECT_THROW(first_occurrence_pmf(FirstOccurrenceDist::explicit_pmf({0.0, 0.0}), 2),
                 ConfigError);
    EXPECT_THROW(first_occurrence_pmf(FirstOccurrenceDist::geometric(0.0), 5), ConfigError);
}

TEST(RepetitionProbs, FixedFillsAllClasses) {
    const auto probs =
        realize_repetition_probs(RepetitionSpec::fixed(0.04), 100, std::vector<std::size_t>(100, 1));
    ASSERT_EQ(probs.size(), 100u);
    for (double p : probs) EXPECT_DOUBLE_EQ(p, 0.04);
}

TEST(RepetitionProbs, ZipfExponentZeroIsCumulativeLimit) {
    const auto probs =
        realize_repetition_probs(RepetitionSpec::zipf(0.0), 5, std::vector<std::size_t>(5, 1));
    for (double p : probs) EXPECT_DOUBLE_EQ(p, 1.0);
}

TEST(RepetitionProbs, ZipfHalfRanksByClassIdOnTies) {
    const auto probs =
        realize_repetition_probs(RepetitionSpec::zipf(0.5), 4, std::vector<std::size_t>(4, 1));
    EXPECT_DOUBLE_EQ(probs[0], 1.0);
    EXPECT_NEAR(probs[1], 0.7071067811865475, 1e-15);
    EXPECT_NEAR(probs[2], 0.5773502691896258, 1e-15);
    EXPECT_DOUBLE_EQ(probs[3], 0.5);
}

TEST(RepetitionProbs, ZipfRanksByFirstOccurrence) {
    // Class 2 first occurs earliest, so it takes rank 1.
    const auto probs = realize_repetition_probs(RepetitionSpec::zipf(1.0), 3, {5, 3, 1});
    EXPECT_DOUBLE_EQ(probs[2], 1.0);
    EXPECT_DOUBLE_EQ(probs[1], 0.5);
    EXPECT_NEAR(probs[0], 1.0 / 3.0, 1e-15);
}

TEST(RepetitionProbs, ExplicitLengthMismatchRejected) {
    EXPECT_THROW(realize_repetition_probs(RepetitionSpec::explicit_probs({0.1, 0.2}), 3, {1, 1, 1}),
                 ConfigError);
}

TEST(Schedule, ZeroRepetitionIsStandardClassIncremental) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 10;
    cfg.n_classes = 200;
    cfg.first_occurrence = FirstOccurrenceDist::uniform();
    cfg.repetition = RepetitionSpec::fixed(0.0);
    cfg.seed = 3;
    const auto sched = build_schedule(cfg);
    ASSERT_EQ(sched.fixup_insertions, 0u);  // seed chosen so every column gets a first occurrence
    std::size_t total = 0;
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        std::size_t count = 0;
        for (std::size_t t = 1; t <= cfg.n_experiences; ++t)
            if (sched.present(c, t)) ++count;
        EXPECT_EQ(count, 1u);
        total += count;
    }
    EXPECT_EQ(total, cfg.n_classes);
}

TEST(Schedule, FullRepetitionIsCumulativeClassIncremental) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 30;
    cfg.n_classes = 25;
    cfg.first_occurrence = FirstOccurrenceDist::geometric(0.3);
    cfg.repetition = RepetitionSpec::fixed(1.0);
    cfg.seed = 9;
    const auto sched = build_schedule(cfg);
    for (std::size_t c = 0; c < cfg.n_classes; ++c)
        for (std::size_t t = 1; t <= cfg.n_experiences; ++t)
            EXPECT_EQ(sched.present(c, t), t >= sched.first_occurrence_index[c]);
}

TEST(Schedule, RepetitionFrequencyConcentrates) {
    // Single class, first occurrence pinned at 1, fix-up disabled so the
    // Bernoulli rate is observable in isolation.
    StreamConfig cfg = base_config();
    cfg.n_experiences = 1000;
    cfg.n_classes = 1;
    std::vector<double> pmf(1000, 0.0);
    pmf[0] = 1.0;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf(pmf);
    cfg.repetition = RepetitionSpec::fixed(0.5);
    cfg.allow_empty_experiences = true;
    cfg.seed = 17;
    const auto sched = build_schedule(cfg);
    std::size_t hits = 0;
    for (std::size_t t = 2; t <= 1000; ++t) hits += sched.present(0, t);
    const double rate = static_cast<double>(hits) / 999.0;
    EXPECT_NEAR(rate, 0.5, 0.05);
}

TEST(Schedule, PerClassRatesMatchRealizedProbs) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 1000;
    cfg.n_classes = 10;
    std::vector<double> pmf(1000, 0.0);
    pmf[0] = 1.0;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf(pmf);
    cfg.repetition = RepetitionSpec::explicit_probs({1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1});
    cfg.seed = 23;
    const auto sched = build_schedule(cfg);
    ASSERT_EQ(sched.fixup_insertions + sched.fixup_moves, 0u);
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        std::size_t hits = 0;
        for (std::size_t t = 2; t <= 1000; ++t) hits += sched.present(c, t);
        EXPECT_NEAR(static_cast<double>(hits) / 999.0, sched.repetition_probs[c], 0.05) << "class " << c;
    }
}

TEST(Schedule, EmptyExperiencesAreFixedUp) {
    // All classes scheduled to first-occur at the last experience and never
    // repeat: every earlier column needs a fix-up.
    StreamConfig cfg = base_config();
    cfg.n_experiences = 10;
    cfg.n_classes = 4;
    std::vector<double> pmf(10, 0.0);
    pmf[9] = 1.0;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf(pmf);
    cfg.repetition = RepetitionSpec::fixed(0.0);
    const auto sched = build_schedule(cfg);
    for (std::size_t t = 1; t <= 10; ++t) {
        std::size_t count = 0;
        for (std::size_t c = 0; c < 4; ++c) count += sched.present(c, t);
        EXPECT_GE(count, 1u) << "experience " << t;
    }
    EXPECT_EQ(sched.fixup_moves, 1u);       // earliest class pulled to t=1
    EXPECT_EQ(sched.fixup_insertions, 8u);  // columns 2..9 refilled
    EXPECT_EQ(sched.first_occurrence_index[0], 1u);
}

TEST(AssignSamples, EvenSplitAcrossFourClasses) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 1;
    cfg.n_classes = 4;
    cfg.experience_size = 2000;
    cfg.samples_per_class = 600;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf({1.0});
    cfg.repetition = RepetitionSpec::fixed(0.0);
    const auto stream = generate_stream(cfg);
    ASSERT_EQ(stream.experiences.size(), 1u);
    const auto& exp = stream.experiences[0];
    ASSERT_EQ(exp.classes.size(), 4u);
    for (int c : exp.classes) EXPECT_EQ(exp.samples.at(c).size(), 500u);
    EXPECT_EQ(exp.total_samples(), 2000u);
}

TEST(AssignSamples, RemainderGoesToLowestClassIds) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 1;
    cfg.n_classes = 3;
    cfg.experience_size = 10;
    cfg.samples_per_class = 50;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf({1.0});
    cfg.repetition = RepetitionSpec::fixed(0.0);
    const auto stream = generate_stream(cfg);
    const auto& exp = stream.experiences[0];
    EXPECT_EQ(exp.samples.at(0).size(), 4u);
    EXPECT_EQ(exp.samples.at(1).size(), 3u);
    EXPECT_EQ(exp.samples.at(2).size(), 3u);
}

TEST(AssignSamples, WithoutReplacementWithinExperience) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 2;
    cfg.n_classes = 2;
    cfg.experience_size = 40;
    cfg.samples_per_class = 40;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf({1.0, 0.0});
    cfg.repetition = RepetitionSpec::fixed(1.0);
    const auto stream = generate_stream(cfg);
    for (const auto& exp : stream.experiences) {
        for (const auto& [c, ids] : exp.samples) {
            std::vector<std::size_t> sorted = ids;
            std::sort(sorted.begin(), sorted.end());
            EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
            for (std::size_t id : ids) EXPECT_LT(id, cfg.samples_per_class);
        }
    }
}

TEST(AssignSamples, FallsBackToReplacementWhenQuotaExceedsPool) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 1;
    cfg.n_classes = 1;
    cfg.experience_size = 30;
    cfg.samples_per_class = 10;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf({1.0});
    cfg.repetition = RepetitionSpec::fixed(0.0);
    const auto stream = generate_stream(cfg);
    EXPECT_EQ(stream.experiences[0].samples.at(0).size(), 30u);
}

TEST(AssignSamples, DeterministicAcrossRuns) {
    const StreamConfig cfg = base_config();
    const Stream a = generate_stream(cfg);
    const Stream b = generate_stream(cfg);
    ASSERT_EQ(a.experiences.size(), b.experiences.size());
    for (std::size_t i = 0; i < a.experiences.size(); ++i) {
        EXPECT_EQ(a.experiences[i].classes, b.experiences[i].classes);
        EXPECT_EQ(a.experiences[i].samples, b.experiences[i].samples);
    }
    EXPECT_EQ(a.schedule.presence, b.schedule.presence);
}

TEST(StreamStats, CumulativeClassCoversWholeStream) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 50;
    cfg.n_classes = 5;
    std::vector<double> pmf(50, 0.0);
    pmf[0] = 1.0;
    cfg.first_occurrence = FirstOccurrenceDist::explicit_pmf(pmf);
    cfg.repetition = RepetitionSpec::fixed(1.0);
    const auto stats = stream_stats(generate_stream(cfg));
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(stats.class_occurrences[c], 50u);
}

TEST(StreamStats, MatchesIndependentRecount) {
    const auto stream = generate_stream(base_config());
    const auto stats = stream_stats(stream);
    // Second pass over the experiences instead of the presence matrix.
    std::vector<std::size_t> occurrences(stream.config.n_classes, 0);
    std::vector<std::size_t> per_exp(stream.config.n_experiences, 0);
    for (const auto& exp : stream.experiences) {
        per_exp[exp.index - 1] = exp.classes.size();
        for (int c : exp.classes) ++occurrences[static_cast<std::size_t>(c)];
    }
    EXPECT_EQ(stats.class_occurrences, occurrences);
    EXPECT_EQ(stats.experience_class_counts, per_exp);
    for (std::size_t n : stats.experience_class_counts) EXPECT_GE(n, 1u);
}

TEST(StreamConfigValidation, RejectsDegenerateValues) {
    StreamConfig cfg = base_config();
    cfg.n_experiences = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = base_config();
    cfg.samples_per_class = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = base_config();
    cfg.repetition = RepetitionSpec::fixed(1.5);
    EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
