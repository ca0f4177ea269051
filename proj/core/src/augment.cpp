#include "cir/augment.hpp"

namespace cir {

namespace {
constexpr double kMaskRate = 0.1;
constexpr double kJitterScale = 0.3;
}  // namespace

TensorBuffer augment(const TensorBuffer& batch, double strength, Rng& rng) {
    TensorBuffer out = batch;
    for (double& x : out.values) {
        // Draw both variates unconditionally so the stream position does not
        // depend on the branch taken.
        const double g = rng.next_gaussian();
        const double u = rng.next_unit();
        if (u < kMaskRate)
            x *= 1.0 - strength;
        else
            x += strength * kJitterScale * g;
    }
    return out;
}

}  // namespace cir
