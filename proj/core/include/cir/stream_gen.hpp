#pragma once

#include <cstdint>
#include <vector>

#include "cir/rng.hpp"
#include "cir/stream.hpp"

namespace cir {

/// Realizes the first-occurrence distribution as a pmf over experiences
/// 1..N (index 0 of the result = experience 1), truncated and renormalized.
/// Throws ConfigError on negative entries or zero total mass.
std::vector<double> first_occurrence_pmf(const FirstOccurrenceDist& dist, std::size_t n_experiences);

/// Draws one first-occurrence index in [1, N] per class, i.i.d. from the
/// realized pmf. Class c uses substream (seed, first_occurrence, c).
std::vector<std::size_t> sample_first_occurrences(const StreamConfig& config);

/// Materializes per-class repetition probabilities. Zipf ranking: classes are
/// ordered by ascending first occurrence, ties broken by class id; the class
/// ranked k gets k^(-e). Fixed and Explicit ignore the ranking.
std::vector<double> realize_repetition_probs(const RepetitionSpec& spec, std::size_t n_classes,
                                             const std::vector<std::size_t>& first_occurrence);

/// Builds the presence matrix: first occurrences, then one independent
/// Bernoulli(repetition_probs[c]) draw per (class, experience) after the
/// first occurrence, then empty-experience fix-up unless disabled.
ClassSchedule build_schedule(const StreamConfig& config);

/// Distributes experience_size samples evenly over the classes present in
/// each experience (remainder to the lowest class ids) and draws pool
/// indices without replacement (with replacement once the quota exceeds the
/// pool). Fully determined by (config, seed).
Stream assign_samples(const ClassSchedule& schedule, const StreamConfig& config);

/// build_schedule + assign_samples.
Stream generate_stream(const StreamConfig& config);

struct StreamStats {
    std::vector<std::size_t> class_occurrences;       // per class: # experiences present
    std::vector<std::size_t> experience_class_counts; // per experience: # classes present
    std::vector<std::size_t> first_occurrence_histogram;  // per experience (1-based -> idx 0)
};

StreamStats stream_stats(const Stream& stream);

}  // namespace cir
