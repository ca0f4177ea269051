#include "cir/optim.hpp"

#include <cmath>
#include <numeric>

#include "cir/errors.hpp"

namespace cir {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    if (augmentation_strength < 0.0) throw ConfigError("train: augmentation_strength must be >= 0");
}

void sgd_step(std::vector<double>& params, std::span<const double> grads, SgdState& state,
              const TrainConfig& config) {
    if (grads.size() != params.size() || state.velocity.size() != params.size())
        throw ConfigError("sgd_step: parameter/gradient size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + config.weight_decay * params[i];
        if (!std::isfinite(g)) throw RunError("non-finite gradient in sgd_step");
        state.velocity[i] = config.momentum * state.velocity[i] + g;
        params[i] -= config.learning_rate * state.velocity[i];
    }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + rng.next_below(n - i);
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

void for_each_batch(std::size_t n, std::size_t batch_size, Rng& shuffle_rng,
                    const std::function<void(std::span<const std::size_t>, std::size_t)>& fn) {
    const auto idx = shuffled_indices(n, shuffle_rng);
    std::size_t batch_number = 0;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t len = std::min(batch_size, n - start);
        fn(std::span<const std::size_t>(idx.data() + start, len), batch_number++);
    }
}

}  // namespace cir
