#include "cir/hatcir.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "cir/augment.hpp"

namespace cir {

ReplicaPlan plan_fragments(std::size_t n_experiences, std::size_t n_fragments) {
    if (n_fragments < 1 || n_fragments > n_experiences)
        throw ConfigError("plan_fragments: need 1 <= F <= N");
    ReplicaPlan plan;
    plan.n_fragments = n_fragments;
    plan.fragment_of_experience.resize(n_experiences);
    const std::size_t base = n_experiences / n_fragments;
    const std::size_t extra = n_experiences % n_fragments;
    std::size_t exp = 0;
    for (std::size_t f = 0; f < n_fragments; ++f) {
        const std::size_t span = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < span; ++i) plan.fragment_of_experience[exp++] = f;
    }
    return plan;
}

void MomentumRule::validate() const {
    if (window < 1) throw ConfigError("momentum rule: window must be >= 1");
    if (weights.size() != window)
        throw ConfigError("momentum rule: weights length must equal window");
    for (double w : weights)
        if (!(w > 0.0)) throw ConfigError("momentum rule: weights must be positive");
}

double momentum_score(std::vector<FragmentClaim> claims, const MomentumRule& rule) {
    rule.validate();
    if (claims.empty()) throw ConfigError("momentum_score: no claims");
    std::sort(claims.begin(), claims.end(), [](const FragmentClaim& a, const FragmentClaim& b) {
        if (a.last_experience != b.last_experience) return a.last_experience < b.last_experience;
        return a.fragment_id < b.fragment_id;
    });
    const std::size_t used = std::min(rule.window, claims.size());
    const std::size_t first_claim = claims.size() - used;
    const std::size_t first_weight = rule.window - used;
    double numerator = 0.0;
    double denominator = 0.0;
    for (std::size_t i = 0; i < used; ++i) {
        const double w = rule.weights[first_weight + i];
        numerator += w * claims[first_claim + i].logit;
        denominator += w;
    }
    return numerator / denominator;
}

HatCirStrategy::HatCirStrategy(const HatCirConfig& cfg, const StrategyContext& ctx)
    : cfg_(cfg), ctx_(ctx) {
    ctx_.train.validate();
    cfg_.momentum.validate();
    if (cfg_.ensembles < 1) throw ConfigError("hatcir: ensembles must be >= 1");
    if (cfg_.tta_views < 1) throw ConfigError("hatcir: tta_views must be >= 1");
    if (cfg_.phase_split < 0.0 || cfg_.phase_split > 1.0)
        throw ConfigError("hatcir: phase_split must be in [0, 1]");
    const std::size_t n_fragments = cfg_.fragments == 0 ? ctx_.n_experiences : cfg_.fragments;
    plan_ = plan_fragments(ctx_.n_experiences, n_fragments);

    MlpSpec spec;
    spec.input_dim = ctx_.input_dim;
    spec.hidden = ctx_.hidden;
    spec.n_outputs = ctx_.n_classes;
    spec.projection_dim = spec.feature_dim() / 2;
    fragments_.resize(plan_.n_fragments);
    for (std::size_t f = 0; f < fragments_.size(); ++f) {
        for (std::size_t e = 0; e < cfg_.ensembles; ++e) {
            const std::uint64_t member_seed = substream(ctx_.seed, {rng_tag::net_init, f, e}).next_u64();
            fragments_[f].members.emplace_back(spec, member_seed);
        }
    }
}

void HatCirStrategy::train_member(MlpNetwork& net, std::uint64_t member_seed,
                                  const ExperienceData& experience, bool skip_contrastive) {
    const TrainConfig& tc = ctx_.train;
    const std::size_t n = experience.labels.size();
    const std::size_t phase1_epochs =
        skip_contrastive ? 0
                         : static_cast<std::size_t>(
                               std::llround(cfg_.phase_split * static_cast<double>(tc.epochs)));
    const std::size_t phase2_epochs = tc.epochs - std::min(phase1_epochs, tc.epochs);

    // Phase 1: margin loss through the projection head.
    SgdState state(net.param_count());
    for (std::size_t epoch = 0; epoch < phase1_epochs; ++epoch) {
        Rng shuffle = substream(member_seed, {rng_tag::shuffle, 1, epoch});
        for_each_batch(n, tc.batch_size, shuffle, [&](std::span<const std::size_t> idx, std::size_t b) {
            TensorBuffer xb = gather_rows(experience.x, idx);
            Rng aug_rng = substream(member_seed, {rng_tag::augment, 1, epoch, b});
            xb = augment(xb, tc.augmentation_strength, aug_rng);
            std::vector<int> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = experience.labels[idx[i]];

            const auto trace = net.forward_trace(xb, true);
            Rng mine_rng = substream(member_seed, {rng_tag::mining, epoch, b});
            const auto res =
                triplet_contrastive_loss(trace.projection, yb, cfg_.margin, cfg_.mining, mine_rng);
            if (!res.has_value()) return;  // batch without a usable anchor
            const auto grads = net.backward(trace, nullptr, &res->dfeatures);
            sgd_step(net.params(), grads, state, tc);
        });
    }

    // Phase 2: cross-entropy through the classification head.
    SgdState ce_state(net.param_count());
    for (std::size_t epoch = 0; epoch < phase2_epochs; ++epoch) {
        Rng shuffle = substream(member_seed, {rng_tag::shuffle, 2, epoch});
        for_each_batch(n, tc.batch_size, shuffle, [&](std::span<const std::size_t> idx, std::size_t b) {
            TensorBuffer xb = gather_rows(experience.x, idx);
            Rng aug_rng = substream(member_seed, {rng_tag::augment, 2, epoch, b});
            xb = augment(xb, tc.augmentation_strength, aug_rng);
            std::vector<int> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = experience.labels[idx[i]];

            const auto trace = net.forward_trace(xb);
            const auto lg = cross_entropy(trace.logits, yb);
            const auto grads = net.backward(trace, &lg.dlogits, nullptr);
            sgd_step(net.params(), grads, ce_state, tc);
        });
    }
}

void HatCirStrategy::observe(const ExperienceData& experience) {
    if (experience.index < 1 || experience.index > ctx_.n_experiences)
        throw ConfigError("hatcir: experience index outside the planned stream");
    if (experience.labels.empty()) throw ConfigError("hatcir: empty experience");
    Fragment& fragment = fragments_[plan_.fragment_of_experience[experience.index - 1]];

    const bool single_class = experience.classes.size() < 2;
    if (single_class)
        note("experience " + std::to_string(experience.index) +
             ": single class, contrastive phase skipped");

    for (std::size_t e = 0; e < fragment.members.size(); ++e) {
        const std::uint64_t member_seed =
            substream(ctx_.seed, {rng_tag::strategy_seed, experience.index, e}).next_u64();
        train_member(fragment.members[e], member_seed, experience, single_class);
    }
    fragment.classes_seen.insert(experience.classes.begin(), experience.classes.end());
    fragment.experience_indices.push_back(experience.index);
    fragment.trained_on.emplace_back(experience.index, experience.classes);
}

std::vector<int> HatCirStrategy::predict(const TensorBuffer& batch) const {
    const std::size_t rows = batch.rows();

    // Augmented views are shared by all fragments and members.
    std::vector<TensorBuffer> views;
    views.push_back(batch);
    for (std::size_t v = 1; v < cfg_.tta_views; ++v) {
        Rng rng = substream(ctx_.seed, {rng_tag::tta, v});
        views.push_back(augment(batch, ctx_.train.augmentation_strength, rng));
    }

    // Mean logits per trained fragment over members x views.
    std::vector<int> trained;
    std::vector<TensorBuffer> mean_logits(fragments_.size());
    for (std::size_t f = 0; f < fragments_.size(); ++f) {
        if (fragments_[f].trained_on.empty()) continue;
        trained.push_back(static_cast<int>(f));
        TensorBuffer acc = TensorBuffer::matrix(rows, ctx_.n_classes);
        for (const auto& member : fragments_[f].members)
            for (const auto& view : views) {
                const auto out = member.forward(view);
                for (std::size_t i = 0; i < acc.numel(); ++i) acc.values[i] += out.logits.values[i];
            }
        const double scale = 1.0 / static_cast<double>(fragments_[f].members.size() * views.size());
        for (double& v : acc.values) v *= scale;
        mean_logits[f] = std::move(acc);
    }
    if (trained.empty()) throw RunError("hatcir: predict called before any training");

    // Per class: the fragments that saw it, with per-class recency.
    std::vector<std::vector<std::pair<std::size_t, int>>> claims(ctx_.n_classes);
    for (int f : trained) {
        for (const auto& [exp_index, classes] : fragments_[f].trained_on)
            for (int c : classes) {
                auto& list = claims[static_cast<std::size_t>(c)];
                auto it = std::find_if(list.begin(), list.end(),
                                       [&](const auto& p) { return p.second == f; });
                if (it == list.end())
                    list.emplace_back(exp_index, f);
                else
                    it->first = std::max(it->first, exp_index);
            }
    }
    bool any_unclaimed = false;
    for (std::size_t c = 0; c < claims.size(); ++c) any_unclaimed |= claims[c].empty();
    if (any_unclaimed && !warned_unclaimed_) {
        warned_unclaimed_ = true;
        std::cerr << "[hatcir] some classes are claimed by no fragment; excluded from argmax\n";
    }

    std::vector<int> predictions(rows, -1);
    for (std::size_t r = 0; r < rows; ++r) {
        double best = 0.0;
        int best_class = -1;
        for (std::size_t c = 0; c < claims.size(); ++c) {
            if (claims[c].empty()) continue;
            std::vector<FragmentClaim> fc;
            fc.reserve(claims[c].size());
            for (const auto& [recency, f] : claims[c])
                fc.push_back({f, recency, mean_logits[static_cast<std::size_t>(f)].at(r, c)});
            const double score = momentum_score(std::move(fc), cfg_.momentum);
            if (best_class < 0 || score > best) {
                best = score;
                best_class = static_cast<int>(c);
            }
        }
        predictions[r] = best_class;
    }
    return predictions;
}

}  // namespace cir
