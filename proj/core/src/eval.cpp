#include "cir/eval.hpp"

#include "cir/errors.hpp"

namespace cir {

double evaluate(const Classifier& model, const TensorBuffer& inputs, std::span<const int> labels) {
    if (inputs.rows() == 0) throw ConfigError("evaluate: empty test set");
    if (labels.size() != inputs.rows()) throw ConfigError("evaluate: labels/batch size mismatch");
    const std::vector<int> predicted = model.predict(inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<int> argmax_labels(const TensorBuffer& logits, std::span<const int> class_ids) {
    std::vector<int> out(logits.rows(), -1);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        out[r] = class_ids.empty() ? static_cast<int>(best) : class_ids[best];
    }
    return out;
}

}  // namespace cir
