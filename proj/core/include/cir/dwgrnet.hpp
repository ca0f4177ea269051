#pragma once

#include "cir/net.hpp"
#include "cir/strategy.hpp"

namespace cir {

/// Which per-branch factors weight the logits during fusion, and how the
/// per-branch contributions collapse into one score per class.
struct FusionConfig {
    bool use_entropy = true;
    bool use_class_count = true;
    bool use_feature_norm = true;
    double entropy_floor = 1e-4;
    enum class Reduce { Max, Mean };
    Reduce reduce = Reduce::Max;
};

/// One branch's output for one sample. Entropy and feature norm are
/// per-branch-per-sample quantities (the distribution has no per-class
/// entropy), so each class of the branch shares them.
struct BranchVote {
    std::vector<int> classes;    // global ids, in the branch's output order
    std::vector<double> logits;  // same order
    double entropy = 1.0;
    double feature_norm = 1.0;
};

/// Fused logit per global class:
///   reduce over branches containing k of ((logit / entropy) * N_C * norm),
/// each factor replaced by its neutral element when disabled. Classes covered
/// by no branch are reported through `covered` and must be excluded from any
/// argmax by the caller.
std::vector<double> fuse_logits(std::span<const BranchVote> votes, const FusionConfig& fusion,
                                std::size_t n_total_classes, std::vector<bool>* covered = nullptr);

struct BranchSignals {
    TensorBuffer logits;               // batch x branch classes
    std::vector<double> entropy;       // per sample, clamped below at the floor
    std::vector<double> feature_norm;  // per sample, L2 of penultimate features
};

BranchSignals branch_signals(const MlpNetwork& net, const TensorBuffer& batch, double entropy_floor);

struct DwgrnetConfig {
    FusionConfig fusion;
    double mix_coefficient = 1.0;  // 0 = plain inputs, 1 = fully mixed views
};

class DwgrnetStrategy : public Strategy {
public:
    DwgrnetStrategy(const DwgrnetConfig& cfg, const StrategyContext& ctx);

    void observe(const ExperienceData& experience) override;
    std::vector<int> predict(const TensorBuffer& batch) const override;
    std::string name() const override { return "dwgrnet"; }

    struct Branch {
        MlpNetwork net;  // frozen once trained
        std::size_t experience_index = 0;
        std::vector<int> classes;  // global ids in output order
    };

    const std::vector<Branch>& branches() const { return branches_; }
    const DwgrnetConfig& config() const { return cfg_; }

    /// Fused logits for the whole batch under an explicit fusion config;
    /// branches are evaluated one at a time (gated execution).
    TensorBuffer fused_logits(const TensorBuffer& batch, const FusionConfig& fusion,
                              std::vector<bool>* covered = nullptr) const;

    /// Same result computed sample-by-sample; execution order is not part of
    /// the fusion semantics.
    TensorBuffer fused_logits_sequential(const TensorBuffer& batch, const FusionConfig& fusion,
                                         std::vector<bool>* covered = nullptr) const;

private:
    DwgrnetConfig cfg_;
    StrategyContext ctx_;
    std::vector<Branch> branches_;
    mutable bool warned_uncovered_ = false;

    std::vector<int> argmax_covered(const TensorBuffer& fused, const std::vector<bool>& covered) const;
};

struct AblationResult {
    std::string setting;
    FusionConfig fusion;
    double accuracy = 0.0;
};

/// Evaluates the trained branch set under the cumulative fusion ladder:
/// mean-of-raw-logits, +entropy, +N_C, +feature_norm. Training happens once;
/// fusion is inference-only.
std::vector<AblationResult> ablation_run(const DwgrnetStrategy& strategy, const TensorBuffer& x,
                                         std::span<const int> labels);

}  // namespace cir
