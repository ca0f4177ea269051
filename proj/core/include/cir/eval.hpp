#pragma once

#include <span>
#include <vector>

#include "cir/tensor.hpp"

namespace cir {

/// Anything that maps a batch of inputs to predicted class ids.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::vector<int> predict(const TensorBuffer& batch) const = 0;
};

/// Fraction of correct predictions. Throws ConfigError on an empty test set.
double evaluate(const Classifier& model, const TensorBuffer& inputs, std::span<const int> labels);

/// Row-wise argmax of a logit matrix mapped through class ids.
std::vector<int> argmax_labels(const TensorBuffer& logits, std::span<const int> class_ids);

}  // namespace cir
