#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cir/stream.hpp"
#include "cir/tensor.hpp"

namespace cir {

/// Gaussian-blob classification data: one mean vector per class, isotropic
/// spread, disjoint train/test splits generated from separate substreams.
struct DatasetSpec {
    std::size_t n_classes = 20;
    std::size_t input_dim = 32;
    std::size_t train_per_class = 200;
    std::size_t test_per_class = 50;
    double mean_scale = 1.0;
    double spread = 0.6;
    std::uint64_t seed = 1;

    void validate() const;
};

struct LabeledSet {
    TensorBuffer x;
    std::vector<int> labels;
};

class SyntheticDataset {
public:
    explicit SyntheticDataset(const DatasetSpec& spec);

    const DatasetSpec& spec() const { return spec_; }

    std::span<const double> train_sample(int class_id, std::size_t pool_index) const;

    /// Held-out test samples for the given classes, in (class, index) order.
    LabeledSet test_set(std::span<const int> classes) const;

    /// Every training sample of the given classes (the joint upper bound).
    LabeledSet train_pool(std::span<const int> classes) const;

    /// Materializes one experience's training data from its sample-id lists.
    LabeledSet materialize(const Experience& experience) const;

private:
    DatasetSpec spec_;
    std::vector<double> train_;  // [class][pool_index][dim]
    std::vector<double> test_;   // [class][test_index][dim]
};

}  // namespace cir
