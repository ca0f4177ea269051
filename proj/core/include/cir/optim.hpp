#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cir/rng.hpp"

namespace cir {

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double augmentation_strength = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SgdState {
    std::vector<double> velocity;
    explicit SgdState(std::size_t n_params) : velocity(n_params, 0.0) {}
};

/// Momentum SGD: v <- momentum * v + (g + weight_decay * w); w <- w - lr * v.
/// Throws RunError on a non-finite gradient.
void sgd_step(std::vector<double>& params, std::span<const double> grads, SgdState& state,
              const TrainConfig& config);

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

/// Shuffles 0..n-1 and yields consecutive batches (last one may be short).
/// fn(batch_indices, batch_number).
void for_each_batch(std::size_t n, std::size_t batch_size, Rng& shuffle_rng,
                    const std::function<void(std::span<const std::size_t>, std::size_t)>& fn);

}  // namespace cir
