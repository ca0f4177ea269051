#include "cir/dwgrnet.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "cir/augment.hpp"
#include "cir/losses.hpp"

namespace cir {

std::vector<double> fuse_logits(std::span<const BranchVote> votes, const FusionConfig& fusion,
                                std::size_t n_total_classes, std::vector<bool>* covered) {
    std::vector<double> fused(n_total_classes, 0.0);
    std::vector<std::size_t> contributors(n_total_classes, 0);
    for (const auto& vote : votes) {
        if (vote.classes.size() != vote.logits.size())
            throw ConfigError("fuse_logits: class/logit arity mismatch");
        for (std::size_t local = 0; local < vote.classes.size(); ++local) {
            const auto k = static_cast<std::size_t>(vote.classes[local]);
            if (k >= n_total_classes) throw ConfigError("fuse_logits: class id out of range");
            double value = vote.logits[local];
            if (fusion.use_entropy) value /= std::max(vote.entropy, fusion.entropy_floor);
            if (fusion.use_class_count) value *= static_cast<double>(vote.classes.size());
            if (fusion.use_feature_norm) value *= vote.feature_norm;
            if (fusion.reduce == FusionConfig::Reduce::Max) {
                if (contributors[k] == 0 || value > fused[k]) fused[k] = value;
            } else {
                fused[k] += value;
            }
            ++contributors[k];
        }
    }
    if (fusion.reduce == FusionConfig::Reduce::Mean)
        for (std::size_t k = 0; k < n_total_classes; ++k)
            if (contributors[k] > 0) fused[k] /= static_cast<double>(contributors[k]);
    if (covered != nullptr) {
        covered->assign(n_total_classes, false);
        for (std::size_t k = 0; k < n_total_classes; ++k) (*covered)[k] = contributors[k] > 0;
    }
    return fused;
}

BranchSignals branch_signals(const MlpNetwork& net, const TensorBuffer& batch, double entropy_floor) {
    BranchSignals out;
    const auto fwd = net.forward(batch);
    out.logits = fwd.logits;
    const TensorBuffer probs = softmax_rows(fwd.logits);
    out.entropy.resize(batch.rows());
    out.feature_norm.resize(batch.rows());
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        double h = 0.0;
        for (double p : probs.row(r))
            if (p > 0.0) h -= p * std::log(p);
        out.entropy[r] = std::max(h, entropy_floor);
        double sq = 0.0;
        for (double f : fwd.features.row(r)) sq += f * f;
        out.feature_norm[r] = std::sqrt(sq);
    }
    return out;
}

DwgrnetStrategy::DwgrnetStrategy(const DwgrnetConfig& cfg, const StrategyContext& ctx)
    : cfg_(cfg), ctx_(ctx) {
    ctx_.train.validate();
    if (!(cfg_.fusion.entropy_floor > 0.0))
        throw ConfigError("dwgrnet: entropy_floor must be > 0");
    if (cfg_.mix_coefficient < 0.0 || cfg_.mix_coefficient > 1.0)
        throw ConfigError("dwgrnet: mix_coefficient must be in [0, 1]");
}

void DwgrnetStrategy::observe(const ExperienceData& experience) {
    if (experience.labels.empty()) throw ConfigError("dwgrnet: empty experience");

    // Local label space: position of each global class in the branch output.
    std::vector<int> local_labels(experience.labels.size());
    for (std::size_t i = 0; i < experience.labels.size(); ++i) {
        const auto it =
            std::find(experience.classes.begin(), experience.classes.end(), experience.labels[i]);
        if (it == experience.classes.end())
            throw ConfigError("dwgrnet: label outside the experience class list");
        local_labels[i] = static_cast<int>(it - experience.classes.begin());
    }

    MlpSpec spec;
    spec.input_dim = ctx_.input_dim;
    spec.hidden = ctx_.hidden;
    spec.n_outputs = experience.classes.size();
    const std::uint64_t branch_seed =
        substream(ctx_.seed, {rng_tag::strategy_seed, branches_.size()}).next_u64();
    MlpNetwork net(spec, branch_seed);
    SgdState state(net.param_count());
    const TrainConfig& tc = ctx_.train;
    const std::size_t n = experience.labels.size();
    const double m = cfg_.mix_coefficient;

    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle = substream(branch_seed, {rng_tag::shuffle, epoch});
        for_each_batch(n, tc.batch_size, shuffle, [&](std::span<const std::size_t> idx, std::size_t b) {
            TensorBuffer xb = gather_rows(experience.x, idx);
            if (m > 0.0) {
                // Two augmented views blended per sample, then mixed back
                // toward the raw input by the mix coefficient.
                Rng aug1 = substream(branch_seed, {rng_tag::augment, epoch, b, 1});
                Rng aug2 = substream(branch_seed, {rng_tag::augment, epoch, b, 2});
                const TensorBuffer v1 = augment(xb, tc.augmentation_strength, aug1);
                const TensorBuffer v2 = augment(xb, tc.augmentation_strength, aug2);
                Rng mix_rng = substream(branch_seed, {rng_tag::mix, epoch, b});
                for (std::size_t r = 0; r < xb.rows(); ++r) {
                    const double lambda = mix_rng.next_unit();
                    auto row = xb.row(r);
                    auto a = v1.row(r);
                    auto c = v2.row(r);
                    for (std::size_t i = 0; i < row.size(); ++i) {
                        const double mixed = lambda * a[i] + (1.0 - lambda) * c[i];
                        row[i] = (1.0 - m) * row[i] + m * mixed;
                    }
                }
            }
            std::vector<int> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = local_labels[idx[i]];
            const auto trace = net.forward_trace(xb);
            const auto lg = cross_entropy(trace.logits, yb);
            const auto grads = net.backward(trace, &lg.dlogits, nullptr);
            sgd_step(net.params(), grads, state, tc);
        });
    }

    Branch branch;
    branch.net = std::move(net);
    branch.experience_index = experience.index;
    branch.classes = experience.classes;
    branches_.push_back(std::move(branch));
}

TensorBuffer DwgrnetStrategy::fused_logits(const TensorBuffer& batch, const FusionConfig& fusion,
                                           std::vector<bool>* covered) const {
    if (branches_.empty()) throw RunError("dwgrnet: predict called before any training");
    const std::size_t rows = batch.rows();

    // Gated execution: one branch at a time over the whole batch.
    std::vector<BranchSignals> signals;
    signals.reserve(branches_.size());
    for (const auto& branch : branches_)
        signals.push_back(branch_signals(branch.net, batch, fusion.entropy_floor));

    TensorBuffer fused = TensorBuffer::matrix(rows, ctx_.n_classes);
    std::vector<bool> row_covered;
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<BranchVote> votes;
        votes.reserve(branches_.size());
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            BranchVote vote;
            vote.classes = branches_[i].classes;
            const auto logit_row = signals[i].logits.row(r);
            vote.logits.assign(logit_row.begin(), logit_row.end());
            vote.entropy = signals[i].entropy[r];
            vote.feature_norm = signals[i].feature_norm[r];
            votes.push_back(std::move(vote));
        }
        const auto row = fuse_logits(votes, fusion, ctx_.n_classes, &row_covered);
        std::copy(row.begin(), row.end(), fused.row(r).begin());
    }
    if (covered != nullptr) *covered = row_covered;  // coverage is input-independent
    return fused;
}

TensorBuffer DwgrnetStrategy::fused_logits_sequential(const TensorBuffer& batch,
                                                      const FusionConfig& fusion,
                                                      std::vector<bool>* covered) const {
    if (branches_.empty()) throw RunError("dwgrnet: predict called before any training");
    TensorBuffer fused = TensorBuffer::matrix(batch.rows(), ctx_.n_classes);
    std::vector<bool> row_covered;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        TensorBuffer one = TensorBuffer::matrix(1, batch.cols());
        std::copy(batch.row(r).begin(), batch.row(r).end(), one.row(0).begin());
        std::vector<BranchVote> votes;
        for (const auto& branch : branches_) {
            const auto sig = branch_signals(branch.net, one, fusion.entropy_floor);
            BranchVote vote;
            vote.classes = branch.classes;
            vote.logits.assign(sig.logits.row(0).begin(), sig.logits.row(0).end());
            vote.entropy = sig.entropy[0];
            vote.feature_norm = sig.feature_norm[0];
            votes.push_back(std::move(vote));
        }
        const auto row = fuse_logits(votes, fusion, ctx_.n_classes, &row_covered);
        std::copy(row.begin(), row.end(), fused.row(r).begin());
    }
    if (covered != nullptr) *covered = row_covered;
    return fused;
}

std::vector<int> DwgrnetStrategy::argmax_covered(const TensorBuffer& fused,
                                                 const std::vector<bool>& covered) const {
    bool any_uncovered = false;
    for (bool c : covered) any_uncovered |= !c;
    if (any_uncovered && !warned_uncovered_) {
        warned_uncovered_ = true;
        std::cerr << "[dwgrnet] some classes are covered by no branch; excluded from argmax\n";
    }
    std::vector<int> out(fused.rows(), -1);
    for (std::size_t r = 0; r < fused.rows(); ++r) {
        auto row = fused.row(r);
        int best = -1;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (!covered[k]) continue;
            if (best < 0 || row[k] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
        }
        out[r] = best;
    }
    return out;
}

std::vector<int> DwgrnetStrategy::predict(const TensorBuffer& batch) const {
    std::vector<bool> covered;
    const TensorBuffer fused = fused_logits(batch, cfg_.fusion, &covered);
    return argmax_covered(fused, covered);
}

std::vector<AblationResult> ablation_run(const DwgrnetStrategy& strategy, const TensorBuffer& x,
                                         std::span<const int> labels) {
    std::vector<AblationResult> results;
    FusionConfig fusion = strategy.config().fusion;
    fusion.use_entropy = false;
    fusion.use_class_count = false;
    fusion.use_feature_norm = false;
    fusion.reduce = FusionConfig::Reduce::Mean;
    const char* names[] = {"mean", "+entropy", "+class_count", "+feature_norm"};
    for (int step = 0; step < 4; ++step) {
        if (step == 1) {
            fusion.use_entropy = true;
            fusion.reduce = FusionConfig::Reduce::Max;
        }
        if (step == 2) fusion.use_class_count = true;
        if (step == 3) fusion.use_feature_norm = true;

        std::vector<bool> covered;
        const TensorBuffer fused = strategy.fused_logits(x, fusion, &covered);
        std::size_t correct = 0;
        for (std::size_t r = 0; r < fused.rows(); ++r) {
            auto row = fused.row(r);
            int best = -1;
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (!covered[k]) continue;
                if (best < 0 || row[k] > row[static_cast<std::size_t>(best)])
                    best = static_cast<int>(k);
            }
            correct += best == labels[r];
        }
        results.push_back(
            {names[step], fusion, static_cast<double>(correct) / static_cast<double>(fused.rows())});
    }
    return results;
}

}  // namespace cir
