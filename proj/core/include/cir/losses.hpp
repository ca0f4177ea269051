#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cir/rng.hpp"
#include "cir/tensor.hpp"

namespace cir {

/// Numerically stable row-wise softmax.
TensorBuffer softmax_rows(const TensorBuffer& logits);

struct LossGrad {
    double loss = 0.0;
    TensorBuffer dlogits;
};

/// Mean cross-entropy over the batch; gradient rows each sum to zero.
LossGrad cross_entropy(const TensorBuffer& logits, std::span<const int> labels);

enum class Mining { Random, HardNegative };

struct TripletResult {
    double loss = 0.0;
    TensorBuffer dfeatures;
    std::size_t n_anchors = 0;
};

/// Margin loss summed over anchors:
///   sum_i max(0, D(a_i, p_i) - D(a_i, n_i) + margin)
/// where D is the squared Euclidean distance between L2-normalized feature
/// rows. Every sample with an in-batch positive is an anchor; the positive is
/// drawn uniformly, the negative uniformly or as the hardest (closest) one.
/// Returns nullopt when no anchor exists (e.g. a single-class batch) so the
/// caller can skip the batch.
std::optional<TripletResult> triplet_contrastive_loss(const TensorBuffer& features,
                                                      std::span<const int> labels, double margin,
                                                      Mining mining, Rng& rng);

/// Soft-target distillation against a frozen teacher, restricted to the
/// classes the teacher was trained on. Scaled by alpha * T^2 as usual.
LossGrad distillation_loss(const TensorBuffer& student_logits, const TensorBuffer& teacher_logits,
                           std::span<const int> teacher_classes, double temperature, double alpha);

}  // namespace cir
