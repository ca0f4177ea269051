#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cir/errors.hpp"

namespace cir {

/// Discrete distribution over experiences 1..N governing when each class
/// first appears. Geometric and Explicit are truncated to [1, N] and
/// renormalized when realized.
struct FirstOccurrenceDist {
    struct Geometric {
        double p = 0.5;  // success probability in (0, 1]
    };
    struct Uniform {};
    struct Explicit {
        std::vector<double> pmf;  // one entry per experience, sums to 1
    };

    std::variant<Geometric, Uniform, Explicit> dist = Geometric{};

    static FirstOccurrenceDist geometric(double p) { return {Geometric{p}}; }
    static FirstOccurrenceDist uniform() { return {Uniform{}}; }
    static FirstOccurrenceDist explicit_pmf(std::vector<double> pmf) {
        return {Explicit{std::move(pmf)}};
    }
};

/// Per-class repetition probabilities. Zipf ranks classes (see
/// realize_repetition_probs) and assigns rank k probability k^(-e), so the
/// top-ranked class always repeats with probability 1.
struct RepetitionSpec {
    struct Zipf {
        double exponent = 0.7;  // >= 0
    };
    struct Fixed {
        double q = 0.04;  // in [0, 1]
    };
    struct Explicit {
        std::vector<double> probs;  // one entry per class
    };

    std::variant<Zipf, Fixed, Explicit> spec = Zipf{};

    static RepetitionSpec zipf(double e) { return {Zipf{e}}; }
    static RepetitionSpec fixed(double q) { return {Fixed{q}}; }
    static RepetitionSpec explicit_probs(std::vector<double> p) {
        return {Explicit{std::move(p)}};
    }
};

struct StreamConfig {
    std::size_t n_experiences = 20;    // N
    std::size_t experience_size = 200; // S, samples per experience
    std::size_t n_classes = 20;        // C
    std::size_t samples_per_class = 200;  // training-pool size per class
    FirstOccurrenceDist first_occurrence;
    RepetitionSpec repetition;
    std::uint64_t seed = 0;
    /// When true, experiences with no classes are left empty instead of being
    /// fixed up. Only statistical tests use this; the generated stream is not
    /// valid training input.
    bool allow_empty_experiences = false;

    void validate() const;
};

/// Realized class presence over the stream. presence is row-major C x N.
/// Experience indices are 1-based throughout, matching stream files.
struct ClassSchedule {
    std::size_t n_classes = 0;
    std::size_t n_experiences = 0;
    std::vector<std::uint8_t> presence;       // [c * N + (t-1)]
    std::vector<std::size_t> first_occurrence_index;  // per class, in [1, N]
    std::vector<double> repetition_probs;     // per class
    std::size_t fixup_insertions = 0;  // occurrences added to fill empty experiences
    std::size_t fixup_moves = 0;       // first occurrences pulled earlier

    bool present(std::size_t class_id, std::size_t experience_1based) const {
        return presence[class_id * n_experiences + (experience_1based - 1)] != 0;
    }
    void set_present(std::size_t class_id, std::size_t experience_1based) {
        presence[class_id * n_experiences + (experience_1based - 1)] = 1;
    }
};

struct Experience {
    std::size_t index = 0;  // 1-based position in the stream
    std::vector<int> classes;
    std::map<int, std::vector<std::size_t>> samples;  // class id -> pool indices

    std::size_t total_samples() const {
        std::size_t n = 0;
        for (const auto& [c, ids] : samples) n += ids.size();
        return n;
    }
};

struct Stream {
    StreamConfig config;
    ClassSchedule schedule;
    std::vector<Experience> experiences;

    /// Distinct classes present anywhere in the stream, ascending.
    std::vector<int> seen_classes() const;
};

}  // namespace cir
