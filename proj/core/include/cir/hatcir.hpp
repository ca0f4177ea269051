#pragma once

#include <set>

#include "cir/net.hpp"
#include "cir/losses.hpp"
#include "cir/strategy.hpp"

namespace cir {

/// Maps each experience to exactly one fragment: contiguous balanced groups,
/// the first N mod F fragments covering one extra experience.
struct ReplicaPlan {
    std::size_t n_fragments = 0;
    std::vector<std::size_t> fragment_of_experience;  // index: experience - 1
};

ReplicaPlan plan_fragments(std::size_t n_experiences, std::size_t n_fragments);

/// Test-time fusion window: the last `window` fragments that saw a class,
/// weighted oldest -> newest.
struct MomentumRule {
    std::size_t window = 3;
    std::vector<double> weights = {1.0, 2.0, 3.0};

    void validate() const;
};

struct FragmentClaim {
    int fragment_id = 0;
    std::size_t last_experience = 0;  // most recent experience of that fragment containing the class
    double logit = 0.0;
};

/// Weighted average of the <= window most recent claims. Claims are ordered
/// by (last_experience, fragment_id); with fewer claims than the window, the
/// trailing weights apply so the newest claim always gets the largest weight.
/// Normalized by the sum of the weights actually used.
double momentum_score(std::vector<FragmentClaim> claims, const MomentumRule& rule);

struct HatCirConfig {
    std::size_t fragments = 0;  // 0 = one fragment per experience
    std::size_t ensembles = 2;
    MomentumRule momentum;
    std::size_t tta_views = 2;  // view 0 is the unaugmented input
    double phase_split = 0.6;   // fraction of epochs spent on the contrastive phase
    double margin = 0.5;
    Mining mining = Mining::HardNegative;
};

class HatCirStrategy : public Strategy {
public:
    HatCirStrategy(const HatCirConfig& cfg, const StrategyContext& ctx);

    void observe(const ExperienceData& experience) override;
    std::vector<int> predict(const TensorBuffer& batch) const override;
    std::string name() const override { return "hatcir"; }

    struct Fragment {
        std::vector<MlpNetwork> members;  // one per ensemble replica
        std::set<int> classes_seen;
        std::vector<std::size_t> experience_indices;
        // per trained experience: (index, classes), for per-class recency
        std::vector<std::pair<std::size_t, std::vector<int>>> trained_on;
    };

    const ReplicaPlan& plan() const { return plan_; }
    const std::vector<Fragment>& fragments() const { return fragments_; }

private:
    HatCirConfig cfg_;
    StrategyContext ctx_;
    ReplicaPlan plan_;
    std::vector<Fragment> fragments_;
    mutable bool warned_unclaimed_ = false;

    void train_member(MlpNetwork& net, std::uint64_t member_seed, const ExperienceData& experience,
                      bool skip_contrastive);
};

}  // namespace cir
