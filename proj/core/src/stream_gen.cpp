#include "cir/stream_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace cir {

void StreamConfig::validate() const {
    if (n_experiences < 1) throw ConfigError("stream: n_experiences must be >= 1");
    if (experience_size < 1) throw ConfigError("stream: experience_size must be >= 1");
    if (n_classes < 1) throw ConfigError("stream: n_classes must be >= 1");
    if (samples_per_class < 1) throw ConfigError("stream: samples_per_class must be >= 1");
    if (const auto* g = std::get_if<FirstOccurrenceDist::Geometric>(&first_occurrence.dist)) {
        if (!(g->p > 0.0) || g->p > 1.0)
            throw ConfigError("stream: geometric p must be in (0, 1]");
    }
    if (const auto* z = std::get_if<RepetitionSpec::Zipf>(&repetition.spec)) {
        if (z->exponent < 0.0) throw ConfigError("stream: zipf exponent must be >= 0");
    }
    if (const auto* f = std::get_if<RepetitionSpec::Fixed>(&repetition.spec)) {
        if (f->q < 0.0 || f->q > 1.0) throw ConfigError("stream: fixed repetition must be in [0, 1]");
    }
}

std::vector<int> Stream::seen_classes() const {
    std::set<int> seen;
    for (const auto& exp : experiences)
        for (int c : exp.classes) seen.insert(c);
    return {seen.begin(), seen.end()};
}

std::vector<double> first_occurrence_pmf(const FirstOccurrenceDist& dist, std::size_t n) {
    std::vector<double> pmf(n, 0.0);
    if (const auto* g = std::get_if<FirstOccurrenceDist::Geometric>(&dist.dist)) {
        if (!(g->p > 0.0) || g->p > 1.0) throw ConfigError("geometric p must be in (0, 1]");
        // pmf(t) = p (1-p)^(t-1), truncated to t in [1, N]
        for (std::size_t t = 0; t < n; ++t)
            pmf[t] = g->p * std::pow(1.0 - g->p, static_cast<double>(t));
    } else if (std::holds_alternative<FirstOccurrenceDist::Uniform>(dist.dist)) {
        std::fill(pmf.begin(), pmf.end(), 1.0);
    } else {
        const auto& e = std::get<FirstOccurrenceDist::Explicit>(dist.dist);
        if (e.pmf.size() != n)
            throw ConfigError("explicit first-occurrence pmf length != n_experiences");
        pmf = e.pmf;
        for (double v : pmf)
            if (v < 0.0) throw ConfigError("first-occurrence pmf has a negative entry");
    }
    const double mass = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    if (!(mass > 0.0)) throw ConfigError("first-occurrence pmf has zero total mass");
    for (double& v : pmf) v /= mass;
    return pmf;
}

namespace {

std::size_t draw_from_pmf(const std::vector<double>& pmf, Rng& rng) {
    const double u = rng.next_unit();
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        if (u < acc) return i;
    }
    return pmf.size() - 1;  // guard against accumulated rounding
}

}  // namespace

std::vector<std::size_t> sample_first_occurrences(const StreamConfig& config) {
    config.validate();
    const auto pmf = first_occurrence_pmf(config.first_occurrence, config.n_experiences);
    std::vector<std::size_t> first(config.n_classes);
    for (std::size_t c = 0; c < config.n_classes; ++c) {
        Rng rng = substream(config.seed, {rng_tag::first_occurrence, c});
        first[c] = draw_from_pmf(pmf, rng) + 1;
    }
    return first;
}

std::vector<double> realize_repetition_probs(const RepetitionSpec& spec, std::size_t n_classes,
                                             const std::vector<std::size_t>& first_occurrence) {
    std::vector<double> probs(n_classes, 0.0);
    if (const auto* f = std::get_if<RepetitionSpec::Fixed>(&spec.spec)) {
        if (f->q < 0.0 || f->q > 1.0) throw ConfigError("fixed repetition must be in [0, 1]");
        std::fill(probs.begin(), probs.end(), f->q);
    } else if (const auto* z = std::get_if<RepetitionSpec::Zipf>(&spec.spec)) {
        if (z->exponent < 0.0) throw ConfigError("zipf exponent must be >= 0");
        if (first_occurrence.size() != n_classes)
            throw ConfigError("zipf ranking needs one first occurrence per class");
        std::vector<std::size_t> order(n_classes);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return first_occurrence[a] < first_occurrence[b];
        });
        for (std::size_t rank = 0; rank < n_classes; ++rank)
            probs[order[rank]] = std::pow(static_cast<double>(rank + 1), -z->exponent);
    } else {
        const auto& e = std::get<RepetitionSpec::Explicit>(spec.spec);
        if (e.probs.size() != n_classes)
            throw ConfigError("explicit repetition probs length != n_classes");
        probs = e.probs;
    }
    for (double p : probs)
        if (p < 0.0 || p > 1.0)
            throw ConfigError("realized repetition probability outside [0, 1]");
    return probs;
}

ClassSchedule build_schedule(const StreamConfig& config) {
    config.validate();
    const std::size_t C = config.n_classes;
    const std::size_t N = config.n_experiences;

    ClassSchedule sched;
    sched.n_classes = C;
    sched.n_experiences = N;
    sched.presence.assign(C * N, 0);
    sched.first_occurrence_index = sample_first_occurrences(config);
    sched.repetition_probs =
        realize_repetition_probs(config.repetition, C, sched.first_occurrence_index);

    // Experiences are processed in order so that a fix-up that pulls a first
    // occurrence earlier governs all later columns.
    for (std::size_t t = 1; t <= N; ++t) {
        bool any = false;
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t first = sched.first_occurrence_index[c];
            if (first == t) {
                sched.set_present(c, t);
                any = true;
            } else if (first < t) {
                Rng rng = substream(config.seed, {rng_tag::repetition, c, t});
                if (rng.next_bernoulli(sched.repetition_probs[c])) {
                    sched.set_present(c, t);
                    any = true;
                }
            }
        }
        if (any || config.allow_empty_experiences) continue;

        // Fix-up: insert one already-introduced class chosen uniformly, or if
        // none exists yet, pull the earliest-scheduled first occurrence here.
        std::vector<std::size_t> introduced;
        for (std::size_t c = 0; c < C; ++c)
            if (sched.first_occurrence_index[c] < t) introduced.push_back(c);
        if (!introduced.empty()) {
            Rng rng = substream(config.seed, {rng_tag::fixup, t});
            const std::size_t pick = introduced[rng.next_below(introduced.size())];
            sched.set_present(pick, t);
            ++sched.fixup_insertions;
        } else {
            std::size_t pick = 0;
            for (std::size_t c = 1; c < C; ++c)
                if (sched.first_occurrence_index[c] < sched.first_occurrence_index[pick]) pick = c;
            sched.first_occurrence_index[pick] = t;
            sched.set_present(pick, t);
            ++sched.fixup_moves;
        }
    }
    return sched;
}

Stream assign_samples(const ClassSchedule& schedule, const StreamConfig& config) {
    if (schedule.n_classes != config.n_classes || schedule.n_experiences != config.n_experiences)
        throw ConfigError("schedule dimensions do not match config");
    if (config.samples_per_class == 0) throw ConfigError("class pool is empty");

    Stream stream;
    stream.config = config;
    stream.schedule = schedule;
    stream.experiences.reserve(config.n_experiences);

    const std::size_t pool = config.samples_per_class;
    for (std::size_t t = 1; t <= config.n_experiences; ++t) {
        Experience exp;
        exp.index = t;
        for (std::size_t c = 0; c < config.n_classes; ++c)
            if (schedule.present(c, t)) exp.classes.push_back(static_cast<int>(c));

        const std::size_t k = exp.classes.size();
        if (k == 0) {
            stream.experiences.push_back(std::move(exp));
            continue;
        }
        const std::size_t base = config.experience_size / k;
        const std::size_t remainder = config.experience_size % k;
        // exp.classes is ascending, so the remainder lands on the lowest ids.
        for (std::size_t i = 0; i < k; ++i) {
            const int c = exp.classes[i];
            const std::size_t quota = base + (i < remainder ? 1 : 0);
            Rng rng = substream(config.seed, {rng_tag::sample_draw,
                                              static_cast<std::uint64_t>(c), t});
            std::vector<std::size_t> ids;
            ids.reserve(quota);
            if (quota <= pool) {
                // Partial Fisher-Yates over the pool indices.
                std::vector<std::size_t> deck(pool);
                std::iota(deck.begin(), deck.end(), 0);
                for (std::size_t j = 0; j < quota; ++j) {
                    const std::size_t pick = j + rng.next_below(pool - j);
                    std::swap(deck[j], deck[pick]);
                    ids.push_back(deck[j]);
                }
            } else {
                for (std::size_t j = 0; j < quota; ++j) ids.push_back(rng.next_below(pool));
            }
            exp.samples.emplace(c, std::move(ids));
        }
        stream.experiences.push_back(std::move(exp));
    }
    return stream;
}

Stream generate_stream(const StreamConfig& config) {
    return assign_samples(build_schedule(config), config);
}

StreamStats stream_stats(const Stream& stream) {
    const auto& sched = stream.schedule;
    StreamStats stats;
    stats.class_occurrences.assign(sched.n_classes, 0);
    stats.experience_class_counts.assign(sched.n_experiences, 0);
    stats.first_occurrence_histogram.assign(sched.n_experiences, 0);
    for (std::size_t c = 0; c < sched.n_classes; ++c) {
        for (std::size_t t = 1; t <= sched.n_experiences; ++t) {
            if (sched.present(c, t)) {
                ++stats.class_occurrences[c];
                ++stats.experience_class_counts[t - 1];
            }
        }
        ++stats.first_occurrence_histogram[sched.first_occurrence_index[c] - 1];
    }
    return stats;
}

}  // namespace cir
