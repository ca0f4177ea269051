#include "cir/dataset.hpp"

#include "cir/errors.hpp"
#include "cir/rng.hpp"

namespace cir {

void DatasetSpec::validate() const {
    if (n_classes < 1) throw ConfigError("dataset: n_classes must be >= 1");
    if (input_dim < 1) throw ConfigError("dataset: input_dim must be >= 1");
    if (train_per_class < 1) throw ConfigError("dataset: train_per_class must be >= 1");
    if (test_per_class < 1) throw ConfigError("dataset: every class needs a test sample");
    if (spread < 0.0) throw ConfigError("dataset: spread must be >= 0");
}

SyntheticDataset::SyntheticDataset(const DatasetSpec& spec) : spec_(spec) {
    spec_.validate();
    const std::size_t d = spec_.input_dim;
    std::vector<double> means(spec_.n_classes * d);
    for (std::size_t c = 0; c < spec_.n_classes; ++c) {
        Rng rng = substream(spec_.seed, {rng_tag::dataset_means, c});
        for (std::size_t i = 0; i < d; ++i) means[c * d + i] = spec_.mean_scale * rng.next_gaussian();
    }

    auto fill = [&](std::vector<double>& out, std::size_t per_class, std::uint64_t tag) {
        out.resize(spec_.n_classes * per_class * d);
        for (std::size_t c = 0; c < spec_.n_classes; ++c) {
            for (std::size_t s = 0; s < per_class; ++s) {
                Rng rng = substream(spec_.seed, {tag, c, s});
                double* row = out.data() + (c * per_class + s) * d;
                for (std::size_t i = 0; i < d; ++i)
                    row[i] = means[c * d + i] + spec_.spread * rng.next_gaussian();
            }
        }
    };
    fill(train_, spec_.train_per_class, rng_tag::dataset_train);
    fill(test_, spec_.test_per_class, rng_tag::dataset_test);
}

std::span<const double> SyntheticDataset::train_sample(int class_id, std::size_t pool_index) const {
    const auto c = static_cast<std::size_t>(class_id);
    if (class_id < 0 || c >= spec_.n_classes) throw ConfigError("train_sample: class out of range");
    if (pool_index >= spec_.train_per_class) throw ConfigError("train_sample: pool index out of range");
    return {train_.data() + (c * spec_.train_per_class + pool_index) * spec_.input_dim,
            spec_.input_dim};
}

LabeledSet SyntheticDataset::test_set(std::span<const int> classes) const {
    LabeledSet set;
    set.x = TensorBuffer::matrix(classes.size() * spec_.test_per_class, spec_.input_dim);
    set.labels.reserve(set.x.rows());
    std::size_t r = 0;
    for (int class_id : classes) {
        const auto c = static_cast<std::size_t>(class_id);
        if (class_id < 0 || c >= spec_.n_classes) throw ConfigError("test_set: class out of range");
        for (std::size_t s = 0; s < spec_.test_per_class; ++s, ++r) {
            const double* src = test_.data() + (c * spec_.test_per_class + s) * spec_.input_dim;
            auto dst = set.x.row(r);
            for (std::size_t i = 0; i < spec_.input_dim; ++i) dst[i] = src[i];
            set.labels.push_back(class_id);
        }
    }
    return set;
}

LabeledSet SyntheticDataset::train_pool(std::span<const int> classes) const {
    LabeledSet set;
    set.x = TensorBuffer::matrix(classes.size() * spec_.train_per_class, spec_.input_dim);
    set.labels.reserve(set.x.rows());
    std::size_t r = 0;
    for (int class_id : classes) {
        for (std::size_t s = 0; s < spec_.train_per_class; ++s, ++r) {
            auto src = train_sample(class_id, s);
            auto dst = set.x.row(r);
            for (std::size_t i = 0; i < spec_.input_dim; ++i) dst[i] = src[i];
            set.labels.push_back(class_id);
        }
    }
    return set;
}

LabeledSet SyntheticDataset::materialize(const Experience& experience) const {
    std::size_t total = experience.total_samples();
    LabeledSet set;
    set.x = TensorBuffer::matrix(total, spec_.input_dim);
    set.labels.reserve(total);
    std::size_t r = 0;
    for (const auto& [class_id, pool_ids] : experience.samples) {
        for (std::size_t id : pool_ids) {
            auto src = train_sample(class_id, id);
            auto dst = set.x.row(r++);
            for (std::size_t i = 0; i < spec_.input_dim; ++i) dst[i] = src[i];
            set.labels.push_back(class_id);
        }
    }
    return set;
}

}  // namespace cir
