#include "cir/horde.hpp"

#include <algorithm>
#include <cmath>

#include "cir/augment.hpp"

namespace cir {

namespace {
constexpr double kSigmaFloor = 1e-6;
}

EstimationHeuristic heuristic_from_string(const std::string& name) {
    if (name == "zeros") return EstimationHeuristic::Zeros;
    if (name == "random") return EstimationHeuristic::Random;
    if (name == "original") return EstimationHeuristic::OriginalFeatures;
    throw ConfigError("unknown estimation heuristic: " + name);
}

bool should_add_fe(bool first_experience, std::size_t n_experience_classes,
                   std::size_t n_classes_seen_before, std::size_t total_classes,
                   std::size_t ensemble_size, std::size_t min_classes_for_fe,
                   double seen_fraction_stop, std::size_t max_ensemble_size) {
    if (first_experience) return true;
    if (n_experience_classes < min_classes_for_fe) return false;
    const double seen_fraction =
        static_cast<double>(n_classes_seen_before) / static_cast<double>(total_classes);
    if (seen_fraction >= seen_fraction_stop) return false;
    return ensemble_size < max_ensemble_size;
}

void ClassStatsTable::add_extractor(std::size_t feature_dim) {
    per_extractor_.emplace_back(n_classes_);
    dims_.push_back(feature_dim);
}

const ClassStatsTable::Entry& ClassStatsTable::at(int class_id, std::size_t fe_index) const {
    if (fe_index >= per_extractor_.size()) throw ConfigError("stats: extractor index out of range");
    if (class_id < 0 || static_cast<std::size_t>(class_id) >= n_classes_)
        throw ConfigError("stats: class out of range");
    return per_extractor_[fe_index][static_cast<std::size_t>(class_id)];
}

void ClassStatsTable::set(int class_id, std::size_t fe_index, std::vector<double> mu,
                          std::vector<double> sigma) {
    if (fe_index >= per_extractor_.size()) throw ConfigError("stats: extractor index out of range");
    if (mu.size() != dims_[fe_index] || sigma.size() != dims_[fe_index])
        throw ConfigError("stats: dimension mismatch");
    for (double& s : sigma) s = std::max(s, kSigmaFloor);
    Entry& e = per_extractor_[fe_index][static_cast<std::size_t>(class_id)];
    e.mu = std::move(mu);
    e.sigma = std::move(sigma);
    e.known = true;
}

MeanStd feature_mean_std(const TensorBuffer& features) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (n == 0) throw ConfigError("feature_mean_std: empty feature matrix");
    MeanStd out;
    out.mu.assign(d, 0.0);
    out.sigma.assign(d, kSigmaFloor);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = features.row(r);
        for (std::size_t i = 0; i < d; ++i) out.mu[i] += row[i];
    }
    for (double& m : out.mu) m /= static_cast<double>(n);
    if (n > 1) {
        std::vector<double> acc(d, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            auto row = features.row(r);
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = row[i] - out.mu[i];
                acc[i] += diff * diff;
            }
        }
        for (std::size_t i = 0; i < d; ++i)
            out.sigma[i] = std::max(std::sqrt(acc[i] / static_cast<double>(n - 1)), kSigmaFloor);
    }
    return out;
}

double adaptive_alpha(double mean_ce, double mean_ml) {
    const double total = mean_ce + mean_ml;
    if (!(total > 0.0)) return 0.5;
    return mean_ml / total;
}

std::vector<double> pseudo_project(std::span<const double> concat_features, int from_class,
                                   int to_class, const ClassStatsTable& stats,
                                   std::span<const FeBlockView> blocks,
                                   EstimationHeuristic heuristic, Rng& rng) {
    std::vector<double> out(concat_features.begin(), concat_features.end());
    for (const auto& block : blocks) {
        const auto& from = stats.at(from_class, block.fe_index);
        if (!from.known)
            throw ConfigError("pseudo_project: source class stats unknown for extractor " +
                              std::to_string(block.fe_index));
        const auto& to = stats.at(to_class, block.fe_index);
        for (std::size_t i = 0; i < block.dim; ++i) {
            const double a = concat_features[block.offset + i];
            const double z = (a - from.mu[i]) / std::max(from.sigma[i], kSigmaFloor);
            double mu_hat;
            double sigma_hat;
            if (to.known) {
                mu_hat = to.mu[i];
                sigma_hat = to.sigma[i];
            } else {
                sigma_hat = 1.0;
                switch (heuristic) {
                    case EstimationHeuristic::Zeros: mu_hat = 0.0; break;
                    case EstimationHeuristic::Random: mu_hat = rng.next_gaussian(); break;
                    case EstimationHeuristic::OriginalFeatures: mu_hat = a; break;
                    default: throw ConfigError("pseudo_project: bad heuristic");
                }
            }
            out[block.offset + i] = mu_hat + z * sigma_hat;
        }
    }
    return out;
}

int HordeStrategy::UnifiedHead::row_of(int class_id) const {
    for (std::size_t r = 0; r < class_order.size(); ++r)
        if (class_order[r] == class_id) return static_cast<int>(r);
    return -1;
}

void HordeStrategy::UnifiedHead::ensure_class(int class_id) {
    if (row_of(class_id) >= 0) return;
    class_order.push_back(class_id);
    w.resize(class_order.size() * in, 0.0);  // new row is zero-initialized
    b.push_back(0.0);
}

void HordeStrategy::UnifiedHead::grow_input(std::size_t new_in) {
    if (new_in < in) throw ConfigError("unified head: input may only grow");
    if (new_in == in) return;
    std::vector<double> grown(rows() * new_in, 0.0);
    for (std::size_t r = 0; r < rows(); ++r)
        std::copy_n(w.data() + r * in, in, grown.data() + r * new_in);
    w = std::move(grown);
    in = new_in;
}

TensorBuffer HordeStrategy::UnifiedHead::forward(const TensorBuffer& features) const {
    TensorBuffer logits = TensorBuffer::matrix(features.rows(), rows());
    for (std::size_t r = 0; r < features.rows(); ++r) {
        auto f = features.row(r);
        for (std::size_t o = 0; o < rows(); ++o) {
            double acc = b[o];
            const double* wr = w.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += wr[i] * f[i];
            logits.at(r, o) = acc;
        }
    }
    return logits;
}

HordeStrategy::HordeStrategy(const HordeConfig& cfg, const StrategyContext& ctx)
    : cfg_(cfg), ctx_(ctx), stats_(ctx.n_classes) {
    ctx_.train.validate();
    if (cfg_.max_fes < 1) throw ConfigError("horde: max_fes must be >= 1");
    if (cfg_.seen_fraction_stop <= 0.0 || cfg_.seen_fraction_stop > 1.0)
        throw ConfigError("horde: seen_fraction_stop must be in (0, 1]");
    if (!cfg_.alpha_adaptive && (cfg_.alpha_fixed < 0.0 || cfg_.alpha_fixed > 1.0))
        throw ConfigError("horde: fixed alpha must be in [0, 1]");
}

void HordeStrategy::train_new_extractor(const ExperienceData& experience) {
    MlpSpec spec;
    spec.input_dim = ctx_.input_dim;
    spec.hidden = ctx_.hidden;
    spec.n_outputs = ctx_.n_classes;
    spec.projection_dim = spec.feature_dim() / 2;
    const std::uint64_t fe_seed =
        substream(ctx_.seed, {rng_tag::strategy_seed, extractors_.size()}).next_u64();
    MlpNetwork net(spec, fe_seed);
    SgdState state(net.param_count());
    const TrainConfig& tc = ctx_.train;
    const std::size_t n = experience.labels.size();

    const bool metric_usable = experience.classes.size() >= 2;
    if (!metric_usable)
        note("experience " + std::to_string(experience.index) +
             ": degenerate experience, extractor trained with cross-entropy only");

    double alpha = cfg_.alpha_adaptive ? 0.5 : cfg_.alpha_fixed;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        double ce_sum = 0.0, ml_sum = 0.0;
        std::size_t ce_batches = 0, ml_batches = 0;
        Rng shuffle = substream(fe_seed, {rng_tag::shuffle, epoch});
        for_each_batch(n, tc.batch_size, shuffle, [&](std::span<const std::size_t> idx, std::size_t b) {
            TensorBuffer xb = gather_rows(experience.x, idx);
            Rng aug_rng = substream(fe_seed, {rng_tag::augment, epoch, b});
            xb = augment(xb, tc.augmentation_strength, aug_rng);
            std::vector<int> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = experience.labels[idx[i]];

            const auto trace = net.forward_trace(xb, true);
            auto ce = cross_entropy(trace.logits, yb);
            ce_sum += ce.loss;
            ++ce_batches;
            for (double& g : ce.dlogits.values) g *= 1.0 - alpha;

            const TensorBuffer* dproj = nullptr;
            TensorBuffer scaled_proj;
            if (metric_usable) {
                Rng mine_rng = substream(fe_seed, {rng_tag::mining, epoch, b});
                const auto ml =
                    triplet_contrastive_loss(trace.projection, yb, cfg_.margin, cfg_.mining, mine_rng);
                if (ml.has_value()) {
                    ml_sum += ml->loss;
                    ++ml_batches;
                    scaled_proj = ml->dfeatures;
                    for (double& g : scaled_proj.values) g *= alpha;
                    dproj = &scaled_proj;
                }
            }
            const auto grads = net.backward(trace, &ce.dlogits, dproj);
            sgd_step(net.params(), grads, state, tc);
        });
        if (cfg_.alpha_adaptive && ml_batches > 0 && ce_batches > 0)
            alpha = adaptive_alpha(ce_sum / static_cast<double>(ce_batches),
                                   ml_sum / static_cast<double>(ml_batches));
    }

    FeatureExtractorEntry entry;
    entry.backbone = net.backbone_only();
    entry.id = extractors_.size();
    entry.classes_trained_on.insert(experience.classes.begin(), experience.classes.end());
    entry.feature_dim = entry.backbone.feature_dim();
    extractors_.push_back(std::move(entry));
    stats_.add_extractor(extractors_.back().feature_dim);
}

TensorBuffer HordeStrategy::concat_features(const TensorBuffer& batch) const {
    std::size_t total = 0;
    for (const auto& fe : extractors_) total += fe.feature_dim;
    TensorBuffer out = TensorBuffer::matrix(batch.rows(), total);
    std::size_t offset = 0;
    for (const auto& fe : extractors_) {
        const auto fwd = fe.backbone.forward(batch);
        for (std::size_t r = 0; r < batch.rows(); ++r) {
            auto src = fwd.features.row(r);
            auto dst = out.row(r);
            for (std::size_t i = 0; i < fe.feature_dim; ++i) dst[offset + i] = src[i];
        }
        offset += fe.feature_dim;
    }
    return out;
}

std::vector<FeBlockView> HordeStrategy::blocks() const {
    std::vector<FeBlockView> views;
    std::size_t offset = 0;
    for (const auto& fe : extractors_) {
        views.push_back({fe.id, offset, fe.feature_dim});
        offset += fe.feature_dim;
    }
    return views;
}

void HordeStrategy::update_class_stats(const ExperienceData& experience) {
    // Group sample rows per class, then refresh (class, extractor) stats from
    // this experience's data.
    std::map<int, std::vector<std::size_t>> rows_of_class;
    for (std::size_t r = 0; r < experience.labels.size(); ++r)
        rows_of_class[experience.labels[r]].push_back(r);

    for (std::size_t fe = 0; fe < extractors_.size(); ++fe) {
        const auto fwd = extractors_[fe].backbone.forward(experience.x);
        for (const auto& [class_id, rows] : rows_of_class) {
            TensorBuffer class_features = TensorBuffer::matrix(rows.size(), extractors_[fe].feature_dim);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto src = fwd.features.row(rows[i]);
                auto dst = class_features.row(i);
                std::copy(src.begin(), src.end(), dst.begin());
            }
            auto ms = feature_mean_std(class_features);
            stats_.set(class_id, fe, std::move(ms.mu), std::move(ms.sigma));
        }
    }
}

void HordeStrategy::train_unified_head(const ExperienceData& experience,
                                       const std::set<int>& previously_learned) {
    const TensorBuffer features = concat_features(experience.x);
    const auto block_views = blocks();
    const std::vector<int> old_classes(previously_learned.begin(), previously_learned.end());

    // Flat head parameters for the optimizer: rows*in weights then biases.
    const std::size_t n_w = head_.rows() * head_.in;
    std::vector<double> params(n_w + head_.rows());
    std::copy(head_.w.begin(), head_.w.end(), params.begin());
    std::copy(head_.b.begin(), head_.b.end(), params.begin() + static_cast<std::ptrdiff_t>(n_w));
    SgdState state(params.size());

    TrainConfig tc = ctx_.train;
    if (cfg_.head_epochs > 0) tc.epochs = cfg_.head_epochs;
    const std::uint64_t head_seed =
        substream(ctx_.seed, {rng_tag::strategy_seed, 0xbead, experience.index}).next_u64();

    const std::size_t n = experience.labels.size();
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle = substream(head_seed, {rng_tag::shuffle, epoch});
        for_each_batch(n, tc.batch_size, shuffle, [&](std::span<const std::size_t> idx, std::size_t b) {
            const bool with_projection = !old_classes.empty();
            const std::size_t rows = idx.size() * (with_projection ? 2 : 1);
            TensorBuffer batch = TensorBuffer::matrix(rows, head_.in);
            std::vector<int> row_labels(rows);

            Rng target_rng = substream(head_seed, {rng_tag::projection_target, epoch, b});
            for (std::size_t i = 0; i < idx.size(); ++i) {
                auto src = features.row(idx[i]);
                auto dst = batch.row(i);
                std::copy(src.begin(), src.end(), dst.begin());
                row_labels[i] = head_.row_of(experience.labels[idx[i]]);
                if (with_projection) {
                    const int target =
                        old_classes[target_rng.next_below(old_classes.size())];
                    Rng estimate_rng = substream(head_seed, {rng_tag::projection_target, epoch, b, i});
                    const auto projected =
                        pseudo_project(src, experience.labels[idx[i]], target, stats_, block_views,
                                       cfg_.heuristic, estimate_rng);
                    auto pdst = batch.row(idx.size() + i);
                    std::copy(projected.begin(), projected.end(), pdst.begin());
                    row_labels[idx.size() + i] = head_.row_of(target);
                }
            }

            // Forward through the flat parameter copy.
            TensorBuffer logits = TensorBuffer::matrix(rows, head_.rows());
            for (std::size_t r = 0; r < rows; ++r) {
                auto f = batch.row(r);
                for (std::size_t o = 0; o < head_.rows(); ++o) {
                    double acc = params[n_w + o];
                    const double* wr = params.data() + o * head_.in;
                    for (std::size_t i = 0; i < head_.in; ++i) acc += wr[i] * f[i];
                    logits.at(r, o) = acc;
                }
            }
            const auto lg = cross_entropy(logits, row_labels);
            std::vector<double> grads(params.size(), 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                auto f = batch.row(r);
                for (std::size_t o = 0; o < head_.rows(); ++o) {
                    const double g = lg.dlogits.at(r, o);
                    double* wg = grads.data() + o * head_.in;
                    for (std::size_t i = 0; i < head_.in; ++i) wg[i] += g * f[i];
                    grads[n_w + o] += g;
                }
            }
            sgd_step(params, grads, state, tc);
        });
    }

    std::copy_n(params.begin(), n_w, head_.w.begin());
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(n_w), head_.rows(), head_.b.begin());
}

void HordeStrategy::observe(const ExperienceData& experience) {
    if (experience.labels.empty()) throw ConfigError("horde: empty experience");
    const bool first = experiences_observed_ == 0;
    ++experiences_observed_;

    const std::set<int> previously_learned = classes_seen_;
    if (should_add_fe(first, experience.classes.size(), previously_learned.size(), ctx_.n_classes,
                      extractors_.size(), cfg_.min_classes_for_fe, cfg_.seen_fraction_stop,
                      cfg_.max_fes)) {
        train_new_extractor(experience);
        note("experience " + std::to_string(experience.index) + ": extractor " +
             std::to_string(extractors_.size() - 1) + " added");
    }
    classes_seen_.insert(experience.classes.begin(), experience.classes.end());
    if (extractors_.empty()) throw RunError("horde: no extractor after first experience");

    update_class_stats(experience);

    std::size_t concat_dim = 0;
    for (const auto& fe : extractors_) concat_dim += fe.feature_dim;
    head_.grow_input(concat_dim);
    for (int c : classes_seen_) head_.ensure_class(c);

    train_unified_head(experience, previously_learned);
}

std::vector<int> HordeStrategy::predict(const TensorBuffer& batch) const {
    if (head_.rows() == 0) throw RunError("horde: predict called before any training");
    const TensorBuffer logits = head_.forward(concat_features(batch));
    return argmax_labels(logits, head_.class_order);
}

}  // namespace cir
