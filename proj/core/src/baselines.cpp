#include "cir/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "cir/augment.hpp"
#include "cir/losses.hpp"

namespace cir {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw ConfigError("replay buffer: capacity must be >= 1");
}

std::map<int, std::size_t> ReplayBuffer::class_counts() const {
    std::map<int, std::size_t> counts;
    for (const auto& item : items_) ++counts[item.label];
    return counts;
}

void ReplayBuffer::observe_sample(std::span<const double> x, int label, Rng& rng) {
    ++seen_[label];
    if (items_.size() < capacity_) {
        items_.push_back({std::vector<double>(x.begin(), x.end()), label});
        return;
    }
    const auto counts = class_counts();
    auto largest = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > largest->second) largest = it;

    const std::size_t own = counts.count(label) ? counts.at(label) : 0;
    if (own < largest->second) {
        // Evict a random member of the largest class, insert the newcomer.
        std::vector<std::size_t> victims;
        for (std::size_t i = 0; i < items_.size(); ++i)
            if (items_[i].label == largest->first) victims.push_back(i);
        const std::size_t victim = victims[rng.next_below(victims.size())];
        items_[victim] = {std::vector<double>(x.begin(), x.end()), label};
    } else {
        // Incoming class already (tied-)largest: per-class reservoir step.
        const double keep = static_cast<double>(own) / static_cast<double>(seen_[label]);
        if (rng.next_unit() < keep) {
            std::vector<std::size_t> slots;
            for (std::size_t i = 0; i < items_.size(); ++i)
                if (items_[i].label == label) slots.push_back(i);
            items_[slots[rng.next_below(slots.size())]] = {std::vector<double>(x.begin(), x.end()),
                                                           label};
        }
    }
}

LabeledSet ReplayBuffer::sample_batch(std::size_t k, Rng& rng) const {
    if (items_.empty()) throw ConfigError("replay buffer: cannot sample from an empty buffer");
    const std::size_t dim = items_.front().x.size();
    LabeledSet out;
    out.x = TensorBuffer::matrix(k, dim);
    out.labels.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Item& item = items_[rng.next_below(items_.size())];
        std::copy(item.x.begin(), item.x.end(), out.x.row(i).begin());
        out.labels[i] = item.label;
    }
    return out;
}

double ewc_penalty(std::span<const double> params, std::span<const double> anchor,
                   std::span<const double> fisher, double lambda) {
    double acc = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double d = params[i] - anchor[i];
        acc += fisher[i] * d * d;
    }
    return lambda * acc;
}

void add_ewc_penalty_grad(std::span<const double> params, std::span<const double> anchor,
                          std::span<const double> fisher, double lambda,
                          std::vector<double>& grads) {
    for (std::size_t i = 0; i < params.size(); ++i)
        grads[i] += 2.0 * lambda * fisher[i] * (params[i] - anchor[i]);
}

namespace {

MlpNetwork make_baseline_net(const StrategyContext& ctx) {
    MlpSpec spec;
    spec.input_dim = ctx.input_dim;
    spec.hidden = ctx.hidden;
    spec.n_outputs = ctx.n_classes;
    return MlpNetwork(spec, substream(ctx.seed, {rng_tag::net_init}).next_u64());
}

std::vector<int> batch_labels(const ExperienceData& exp, std::span<const std::size_t> idx) {
    std::vector<int> yb(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = exp.labels[idx[i]];
    return yb;
}

}  // namespace

NaiveStrategy::NaiveStrategy(const StrategyContext& ctx, std::string name)
    : ctx_(ctx), net_(make_baseline_net(ctx)), name_(std::move(name)) {
    ctx_.train.validate();
}

void NaiveStrategy::observe(const ExperienceData& experience) {
    const TrainConfig& tc = ctx_.train;
    SgdState state(net_.param_count());
    const std::uint64_t run_seed =
        substream(ctx_.seed, {rng_tag::strategy_seed, experience.index}).next_u64();
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle = substream(run_seed, {rng_tag::shuffle, epoch});
        for_each_batch(experience.labels.size(), tc.batch_size, shuffle,
                       [&](std::span<const std::size_t> idx, std::size_t b) {
                           TensorBuffer xb = gather_rows(experience.x, idx);
                           Rng aug = substream(run_seed, {rng_tag::augment, epoch, b});
                           xb = augment(xb, tc.augmentation_strength, aug);
                           const auto yb = batch_labels(experience, idx);
                           const auto trace = net_.forward_trace(xb);
                           const auto lg = cross_entropy(trace.logits, yb);
                           const auto grads = net_.backward(trace, &lg.dlogits, nullptr);
                           sgd_step(net_.params(), grads, state, tc);
                       });
    }
}

std::vector<int> NaiveStrategy::predict(const TensorBuffer& batch) const {
    return argmax_labels(net_.forward(batch).logits, {});
}

ReplayStrategy::ReplayStrategy(std::size_t capacity, const StrategyContext& ctx, std::string name)
    : ctx_(ctx), net_(make_baseline_net(ctx)), buffer_(capacity), name_(std::move(name)) {
    ctx_.train.validate();
}

void ReplayStrategy::observe(const ExperienceData& experience) {
    const TrainConfig& tc = ctx_.train;
    SgdState state(net_.param_count());
    const std::uint64_t run_seed =
        substream(ctx_.seed, {rng_tag::strategy_seed, experience.index}).next_u64();
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle = substream(run_seed, {rng_tag::shuffle, epoch});
        for_each_batch(experience.labels.size(), tc.batch_size, shuffle,
                       [&](std::span<const std::size_t> idx, std::size_t b) {
                           TensorBuffer current = gather_rows(experience.x, idx);
                           Rng aug = substream(run_seed, {rng_tag::augment, epoch, b});
                           current = augment(current, tc.augmentation_strength, aug);
                           auto yb = batch_labels(experience, idx);

                           // 50/50 mix once the buffer can match the batch.
                           if (buffer_.size() > 0) {
                               Rng draw = substream(run_seed, {rng_tag::replay, epoch, b});
                               const std::size_t k = std::min(idx.size(), buffer_.size());
                               const LabeledSet replay = buffer_.sample_batch(k, draw);
                               TensorBuffer merged =
                                   TensorBuffer::matrix(current.rows() + k, current.cols());
                               std::copy(current.values.begin(), current.values.end(),
                                         merged.values.begin());
                               std::copy(replay.x.values.begin(), replay.x.values.end(),
                                         merged.values.begin() +
                                             static_cast<std::ptrdiff_t>(current.numel()));
                               current = std::move(merged);
                               yb.insert(yb.end(), replay.labels.begin(), replay.labels.end());
                           }

                           const auto trace = net_.forward_trace(current);
                           const auto lg = cross_entropy(trace.logits, yb);
                           const auto grads = net_.backward(trace, &lg.dlogits, nullptr);
                           sgd_step(net_.params(), grads, state, tc);
                       });
    }

    // Buffer ingests the experience after training on it.
    Rng insert_rng = substream(ctx_.seed, {rng_tag::replay, experience.index});
    for (std::size_t r = 0; r < experience.labels.size(); ++r)
        buffer_.observe_sample(experience.x.row(r), experience.labels[r], insert_rng);
}

std::vector<int> ReplayStrategy::predict(const TensorBuffer& batch) const {
    return argmax_labels(net_.forward(batch).logits, {});
}

EwcStrategy::EwcStrategy(double lambda, const StrategyContext& ctx)
    : ctx_(ctx), net_(make_baseline_net(ctx)), lambda_(lambda) {
    ctx_.train.validate();
    if (lambda_ < 0.0) throw ConfigError("ewc: lambda must be >= 0");
    fisher_.assign(net_.param_count(), 0.0);
    anchor_.assign(net_.param_count(), 0.0);
}

void EwcStrategy::observe(const ExperienceData& experience) {
    const TrainConfig& tc = ctx_.train;
    SgdState state(net_.param_count());
    const std::uint64_t run_seed =
        substream(ctx_.seed, {rng_tag::strategy_seed, experience.index}).next_u64();
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle = substream(run_seed, {rng_tag::shuffle, epoch});
        for_each_batch(experience.labels.size(), tc.batch_size, shuffle,
                       [&](std::span<const std::size_t> idx, std::size_t b) {
                           TensorBuffer xb = gather_rows(experience.x, idx);
                           Rng aug = substream(run_seed, {rng_tag::augment, epoch, b});
                           xb = augment(xb, tc.augmentation_strength, aug);
                           const auto yb = batch_labels(experience, idx);
                           const auto trace = net_.forward_trace(xb);
                           const auto lg = cross_entropy(trace.logits, yb);
                           const auto grads = net_.backward(trace, &lg.dlogits, nullptr);
                           sgd_step(net_.params(), grads, state, tc);
                           if (has_anchor_ && lambda_ > 0.0) {
                               // Implicit step on the quadratic penalty: stable
                               // for any lambda, exact anchor recovery as
                               // lambda -> infinity, identity at lambda = 0.
                               auto& params = net_.params();
                               for (std::size_t i = 0; i < params.size(); ++i) {
                                   const double k = tc.learning_rate * 2.0 * lambda_ * fisher_[i];
                                   params[i] = (params[i] + k * anchor_[i]) / (1.0 + k);
                               }
                           }
                       });
    }

    // Diagonal importance: mean of per-sample squared gradients over one
    // clean pass, accumulated as a running sum across experiences.
    const std::size_t n = experience.labels.size();
    std::vector<double> importance(net_.param_count(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t idx[] = {s};
        TensorBuffer xb = gather_rows(experience.x, idx);
        const int yb[] = {experience.labels[s]};
        const auto trace = net_.forward_trace(xb);
        const auto lg = cross_entropy(trace.logits, yb);
        const auto grads = net_.backward(trace, &lg.dlogits, nullptr);
        for (std::size_t i = 0; i < grads.size(); ++i) importance[i] += grads[i] * grads[i];
    }
    for (std::size_t i = 0; i < importance.size(); ++i)
        fisher_[i] += importance[i] / static_cast<double>(n);
    anchor_ = net_.params();
    has_anchor_ = true;
}

std::vector<int> EwcStrategy::predict(const TensorBuffer& batch) const {
    return argmax_labels(net_.forward(batch).logits, {});
}

LwfStrategy::LwfStrategy(double alpha, double temperature, const StrategyContext& ctx)
    : ctx_(ctx), net_(make_baseline_net(ctx)), alpha_(alpha), temperature_(temperature) {
    ctx_.train.validate();
    if (!(temperature_ > 0.0)) throw ConfigError("lwf: temperature must be > 0");
}

void LwfStrategy::observe(const ExperienceData& experience) {
    const TrainConfig& tc = ctx_.train;
    SgdState state(net_.param_count());
    const std::uint64_t run_seed =
        substream(ctx_.seed, {rng_tag::strategy_seed, experience.index}).next_u64();
    const std::vector<int> old_classes(teacher_classes_.begin(), teacher_classes_.end());
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle = substream(run_seed, {rng_tag::shuffle, epoch});
        for_each_batch(experience.labels.size(), tc.batch_size, shuffle,
                       [&](std::span<const std::size_t> idx, std::size_t b) {
                           TensorBuffer xb = gather_rows(experience.x, idx);
                           Rng aug = substream(run_seed, {rng_tag::augment, epoch, b});
                           xb = augment(xb, tc.augmentation_strength, aug);
                           const auto yb = batch_labels(experience, idx);
                           const auto trace = net_.forward_trace(xb);
                           auto lg = cross_entropy(trace.logits, yb);
                           if (teacher_.has_value() && !old_classes.empty()) {
                               const auto teacher_logits = teacher_->forward(xb).logits;
                               const auto dist = distillation_loss(trace.logits, teacher_logits,
                                                                   old_classes, temperature_, alpha_);
                               for (std::size_t i = 0; i < lg.dlogits.numel(); ++i)
                                   lg.dlogits.values[i] += dist.dlogits.values[i];
                           }
                           const auto grads = net_.backward(trace, &lg.dlogits, nullptr);
                           sgd_step(net_.params(), grads, state, tc);
                       });
    }
    teacher_ = net_;
    teacher_classes_.insert(experience.classes.begin(), experience.classes.end());
}

std::vector<int> LwfStrategy::predict(const TensorBuffer& batch) const {
    return argmax_labels(net_.forward(batch).logits, {});
}

}  // namespace cir
