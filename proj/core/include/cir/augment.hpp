#pragma once

#include "cir/rng.hpp"
#include "cir/tensor.hpp"

namespace cir {

/// Stochastic label-preserving perturbation for vector inputs: additive
/// gaussian jitter plus random coordinate shrink-to-zero masking. Both
/// components scale with strength, so the expected perturbation magnitude is
/// linear in strength and strength 0 is the identity.
TensorBuffer augment(const TensorBuffer& batch, double strength, Rng& rng);

}  // namespace cir
