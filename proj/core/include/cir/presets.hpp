#pragma once

#include <string>

#include "cir/stream.hpp"
#include "cir/stream_gen.hpp"

namespace cir {

/// Geometry of a preset stream. Challenge scale reproduces the published
/// configuration (N=50, S=2000, 100 classes, 500-sample pools); desk scale
/// keeps the distribution parameters but shrinks everything to minutes.
struct PresetScale {
    std::size_t n_experiences = 20;
    std::size_t experience_size = 200;
    std::size_t n_classes = 20;
    std::size_t samples_per_class = 200;
};

inline constexpr PresetScale kDeskScale{20, 200, 20, 200};
inline constexpr PresetScale kChallengeScale{50, 2000, 100, 500};

bool is_challenge_preset(const std::string& id);  // S1..S6

/// First-occurrence / repetition parameters of the challenge streams:
///   S1 Geom(0.5)/Zipf(0.7)   S2 Geom(0.001)/Zipf(0.8)  S3 Geom(0.2)/Fixed(0.04)
///   S4 Geom(0.6)/Zipf(0.8)   S5 Geom(0.001)/Zipf(0.6)  S6 Geom(0.1)/Fixed(0.05)
StreamConfig challenge_stream_config(const std::string& id, const PresetScale& scale,
                                     std::uint64_t seed);

/// Disjoint-class benchmark without repetition: consecutive groups of
/// `group_size` classes, one experience per group, each class's full pool
/// assigned once. A trailing smaller group is kept (and worth logging).
Stream no_repetition_stream(std::size_t n_classes, std::size_t group_size,
                            std::size_t samples_per_class);

inline constexpr const char* kNoRepetitionPresetId = "NOREP-20x5";

/// Builds any preset id: S1..S6 (generated from the config and seed) or
/// NOREP-20x5 (deterministic, seed ignored).
Stream make_preset_stream(const std::string& id, const PresetScale& scale, std::uint64_t seed);

}  // namespace cir
