#include "cir/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cir/errors.hpp"

namespace cir {

TensorBuffer softmax_rows(const TensorBuffer& logits) {
    TensorBuffer probs = logits;
    const std::size_t cols = logits.cols();
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double* row = probs.values.data() + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
    }
    return probs;
}

LossGrad cross_entropy(const TensorBuffer& logits, std::span<const int> labels) {
    const std::size_t rows = logits.rows();
    const std::size_t cols = logits.cols();
    if (labels.size() != rows) throw ConfigError("cross_entropy: labels/batch size mismatch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= cols)
            throw ConfigError("cross_entropy: label out of range");

    LossGrad out;
    out.dlogits = softmax_rows(logits);
    const double inv_b = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.dlogits.values.data() + r * cols;
        const auto y = static_cast<std::size_t>(labels[r]);
        out.loss -= std::log(std::max(row[y], 1e-300));
        row[y] -= 1.0;
        for (std::size_t c = 0; c < cols; ++c) row[c] *= inv_b;
    }
    out.loss *= inv_b;
    return out;
}

namespace {

constexpr double kNormFloor = 1e-12;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

}  // namespace

std::optional<TripletResult> triplet_contrastive_loss(const TensorBuffer& features,
                                                      std::span<const int> labels, double margin,
                                                      Mining mining, Rng& rng) {
    const std::size_t n = features.rows();
    const std::size_t dim = features.cols();
    if (labels.size() != n) throw ConfigError("triplet loss: labels/batch size mismatch");

    // L2-normalize rows; keep the norms for the chain rule.
    TensorBuffer unit = features;
    std::vector<double> norms(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = unit.row(r);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        norms[r] = std::max(std::sqrt(sq), kNormFloor);
        for (double& v : row) v /= norms[r];
    }

    TensorBuffer dunit = TensorBuffer::matrix(n, dim);
    double loss = 0.0;
    std::size_t n_anchors = 0;
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<std::size_t> positives;
        std::vector<std::size_t> negatives;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a) continue;
            (labels[j] == labels[a] ? positives : negatives).push_back(j);
        }
        if (positives.empty() || negatives.empty()) continue;

        const std::size_t p = positives[rng.next_below(positives.size())];
        std::size_t neg = negatives[0];
        if (mining == Mining::HardNegative) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t cand : negatives) {
                const double d = squared_distance(unit.row(a), unit.row(cand));
                if (d < best) {
                    best = d;
                    neg = cand;
                }
            }
        } else {
            neg = negatives[rng.next_below(negatives.size())];
        }

        ++n_anchors;
        const double d_ap = squared_distance(unit.row(a), unit.row(p));
        const double d_an = squared_distance(unit.row(a), unit.row(neg));
        const double hinge = d_ap - d_an + margin;
        if (hinge <= 0.0) continue;
        loss += hinge;
        auto ua = unit.row(a);
        auto up = unit.row(p);
        auto un = unit.row(neg);
        auto ga = dunit.row(a);
        auto gp = dunit.row(p);
        auto gn = dunit.row(neg);
        for (std::size_t i = 0; i < dim; ++i) {
            ga[i] += 2.0 * (un[i] - up[i]);
            gp[i] += -2.0 * (ua[i] - up[i]);
            gn[i] += 2.0 * (ua[i] - un[i]);
        }
    }
    if (n_anchors == 0) return std::nullopt;

    // Chain through the normalization: df = (g - u (u . g)) / ||f||.
    TripletResult result;
    result.loss = loss;
    result.n_anchors = n_anchors;
    result.dfeatures = TensorBuffer::matrix(n, dim);
    for (std::size_t r = 0; r < n; ++r) {
        auto u = unit.row(r);
        auto g = dunit.row(r);
        auto out = result.dfeatures.row(r);
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += u[i] * g[i];
        for (std::size_t i = 0; i < dim; ++i) out[i] = (g[i] - u[i] * dot) / norms[r];
    }
    return result;
}

LossGrad distillation_loss(const TensorBuffer& student_logits, const TensorBuffer& teacher_logits,
                           std::span<const int> teacher_classes, double temperature, double alpha) {
    const std::size_t rows = student_logits.rows();
    if (teacher_logits.rows() != rows)
        throw ConfigError("distillation: student/teacher batch mismatch");
    const std::size_t k = teacher_classes.size();
    if (k == 0) throw ConfigError("distillation: teacher has no classes");

    TensorBuffer soft_s = TensorBuffer::matrix(rows, k);
    TensorBuffer soft_t = TensorBuffer::matrix(rows, k);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            const auto c = static_cast<std::size_t>(teacher_classes[i]);
            soft_s.at(r, i) = student_logits.at(r, c) / temperature;
            soft_t.at(r, i) = teacher_logits.at(r, c) / temperature;
        }
    }
    soft_s = softmax_rows(soft_s);
    soft_t = softmax_rows(soft_t);

    LossGrad out;
    out.dlogits = TensorBuffer::matrix(rows, student_logits.cols());
    const double scale = alpha * temperature * temperature;
    const double inv_b = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            out.loss -= soft_t.at(r, i) * std::log(std::max(soft_s.at(r, i), 1e-300));
            const auto c = static_cast<std::size_t>(teacher_classes[i]);
            out.dlogits.at(r, c) =
                scale * inv_b * (soft_s.at(r, i) - soft_t.at(r, i)) / temperature;
        }
    }
    out.loss *= scale * inv_b;
    return out;
}

}  // namespace cir
