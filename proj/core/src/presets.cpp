#include "cir/presets.hpp"

#include <numeric>

namespace cir {

bool is_challenge_preset(const std::string& id) {
    return id.size() == 2 && id[0] == 'S' && id[1] >= '1' && id[1] <= '6';
}

StreamConfig challenge_stream_config(const std::string& id, const PresetScale& scale,
                                     std::uint64_t seed) {
    StreamConfig cfg;
    cfg.n_experiences = scale.n_experiences;
    cfg.experience_size = scale.experience_size;
    cfg.n_classes = scale.n_classes;
    cfg.samples_per_class = scale.samples_per_class;
    cfg.seed = seed;
    if (id == "S1") {
        cfg.first_occurrence = FirstOccurrenceDist::geometric(0.5);
        cfg.repetition = RepetitionSpec::zipf(0.7);
    } else if (id == "S2") {
        cfg.first_occurrence = FirstOccurrenceDist::geometric(0.001);
        cfg.repetition = RepetitionSpec::zipf(0.8);
    } else if (id == "S3") {
        cfg.first_occurrence = FirstOccurrenceDist::geometric(0.2);
        cfg.repetition = RepetitionSpec::fixed(0.04);
    } else if (id == "S4") {
        cfg.first_occurrence = FirstOccurrenceDist::geometric(0.6);
        cfg.repetition = RepetitionSpec::zipf(0.8);
    } else if (id == "S5") {
        cfg.first_occurrence = FirstOccurrenceDist::geometric(0.001);
        cfg.repetition = RepetitionSpec::zipf(0.6);
    } else if (id == "S6") {
        cfg.first_occurrence = FirstOccurrenceDist::geometric(0.1);
        cfg.repetition = RepetitionSpec::fixed(0.05);
    } else {
        throw ConfigError("unknown challenge preset: " + id);
    }
    return cfg;
}

Stream no_repetition_stream(std::size_t n_classes, std::size_t group_size,
                            std::size_t samples_per_class) {
    if (group_size < 1 || group_size > n_classes)
        throw ConfigError("no-repetition preset: need 1 <= group_size <= n_classes");
    const std::size_t n_experiences = (n_classes + group_size - 1) / group_size;

    Stream stream;
    stream.config.n_experiences = n_experiences;
    stream.config.experience_size = group_size * samples_per_class;
    stream.config.n_classes = n_classes;
    stream.config.samples_per_class = samples_per_class;
    stream.config.first_occurrence = FirstOccurrenceDist::uniform();
    stream.config.repetition = RepetitionSpec::fixed(0.0);
    stream.config.seed = 0;

    auto& sched = stream.schedule;
    sched.n_classes = n_classes;
    sched.n_experiences = n_experiences;
    sched.presence.assign(n_classes * n_experiences, 0);
    sched.first_occurrence_index.resize(n_classes);
    sched.repetition_probs.assign(n_classes, 0.0);

    for (std::size_t t = 0; t < n_experiences; ++t) {
        Experience exp;
        exp.index = t + 1;
        const std::size_t begin = t * group_size;
        const std::size_t end = std::min(begin + group_size, n_classes);
        for (std::size_t c = begin; c < end; ++c) {
            sched.first_occurrence_index[c] = t + 1;
            sched.set_present(c, t + 1);
            exp.classes.push_back(static_cast<int>(c));
            std::vector<std::size_t> ids(samples_per_class);
            std::iota(ids.begin(), ids.end(), 0);
            exp.samples.emplace(static_cast<int>(c), std::move(ids));
        }
        stream.experiences.push_back(std::move(exp));
    }
    return stream;
}

Stream make_preset_stream(const std::string& id, const PresetScale& scale, std::uint64_t seed) {
    if (is_challenge_preset(id)) return generate_stream(challenge_stream_config(id, scale, seed));
    if (id == kNoRepetitionPresetId)
        return no_repetition_stream(scale.n_classes, 5, scale.samples_per_class);
    throw ConfigError("unknown stream preset: " + id);
}

}  // namespace cir
