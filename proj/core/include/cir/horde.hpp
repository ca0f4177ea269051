#pragma once

#include <set>

#include "cir/losses.hpp"
#include "cir/net.hpp"
#include "cir/strategy.hpp"

namespace cir {

enum class EstimationHeuristic { Zeros, Random, OriginalFeatures };

EstimationHeuristic heuristic_from_string(const std::string& name);

/// FE-addition rule: always on the first experience; afterwards only when the
/// experience is diverse enough, most classes are still unseen, and the
/// ensemble has room. `n_classes_seen_before` counts classes seen strictly
/// before the current experience.
bool should_add_fe(bool first_experience, std::size_t n_experience_classes,
                   std::size_t n_classes_seen_before, std::size_t total_classes,
                   std::size_t ensemble_size, std::size_t min_classes_for_fe,
                   double seen_fraction_stop, std::size_t max_ensemble_size);

/// Per-(class, extractor) feature statistics. Unknown entries are estimated
/// at projection time.
class ClassStatsTable {
public:
    struct Entry {
        std::vector<double> mu;
        std::vector<double> sigma;
        bool known = false;
    };

    ClassStatsTable() = default;
    explicit ClassStatsTable(std::size_t n_classes) : n_classes_(n_classes) {}

    void add_extractor(std::size_t feature_dim);
    std::size_t n_extractors() const { return per_extractor_.size(); }
    std::size_t n_classes() const { return n_classes_; }

    const Entry& at(int class_id, std::size_t fe_index) const;
    /// Overwrites (latest experience wins). Sigma entries are floored at 1e-6.
    void set(int class_id, std::size_t fe_index, std::vector<double> mu, std::vector<double> sigma);

private:
    std::size_t n_classes_ = 0;
    std::vector<std::vector<Entry>> per_extractor_;  // [fe][class]
    std::vector<std::size_t> dims_;
};

struct MeanStd {
    std::vector<double> mu;
    std::vector<double> sigma;
};

/// Column-wise mean and sample standard deviation (denominator n-1; a single
/// row or constant column gives the 1e-6 floor).
MeanStd feature_mean_std(const TensorBuffer& features);

/// alpha = mean_ml / (mean_ce + mean_ml); balances the two losses by their
/// observed magnitudes. Falls back to 0.5 when both vanish.
double adaptive_alpha(double mean_ce, double mean_ml);

struct FeBlockView {
    std::size_t fe_index = 0;
    std::size_t offset = 0;  // position of this extractor's block in the concat
    std::size_t dim = 0;
};

/// Projects a concatenated representation of class `from_class` onto class
/// `to_class`, block by block:  a_hat = mu_j + ((a - mu_i) / sigma_i) * sigma_j.
/// Unknown target stats are replaced per the heuristic with sigma_hat = 1.
/// Stats for `from_class` must be known for every block.
std::vector<double> pseudo_project(std::span<const double> concat_features, int from_class,
                                   int to_class, const ClassStatsTable& stats,
                                   std::span<const FeBlockView> blocks,
                                   EstimationHeuristic heuristic, Rng& rng);

struct HordeConfig {
    std::size_t min_classes_for_fe = 5;
    double seen_fraction_stop = 0.85;
    std::size_t max_fes = 10;
    EstimationHeuristic heuristic = EstimationHeuristic::OriginalFeatures;
    bool alpha_adaptive = true;
    double alpha_fixed = 0.5;  // used when alpha_adaptive is false
    double margin = 0.5;
    Mining mining = Mining::HardNegative;
    std::size_t head_epochs = 0;  // 0 = same as the shared train config
};

class HordeStrategy : public Strategy {
public:
    HordeStrategy(const HordeConfig& cfg, const StrategyContext& ctx);

    void observe(const ExperienceData& experience) override;
    std::vector<int> predict(const TensorBuffer& batch) const override;
    std::string name() const override { return "horde"; }

    struct FeatureExtractorEntry {
        MlpNetwork backbone;  // heads removed, frozen
        std::size_t id = 0;
        std::set<int> classes_trained_on;
        std::size_t feature_dim = 0;
    };

    /// Unified linear head over the concatenated extractor features. Output
    /// rows grow as classes appear; input columns grow as extractors join.
    struct UnifiedHead {
        std::size_t in = 0;
        std::vector<int> class_order;  // row -> class id
        std::vector<double> w;         // rows x in, row-major
        std::vector<double> b;

        std::size_t rows() const { return class_order.size(); }
        int row_of(int class_id) const;
        void ensure_class(int class_id);
        void grow_input(std::size_t new_in);
        TensorBuffer forward(const TensorBuffer& features) const;
    };

    const std::vector<FeatureExtractorEntry>& extractors() const { return extractors_; }
    const ClassStatsTable& stats() const { return stats_; }
    const UnifiedHead& head() const { return head_; }
    const std::set<int>& classes_seen() const { return classes_seen_; }

    /// Concatenated frozen-extractor features for a batch.
    TensorBuffer concat_features(const TensorBuffer& batch) const;
    std::vector<FeBlockView> blocks() const;

private:
    HordeConfig cfg_;
    StrategyContext ctx_;
    std::vector<FeatureExtractorEntry> extractors_;
    ClassStatsTable stats_;
    UnifiedHead head_;
    std::set<int> classes_seen_;
    std::size_t experiences_observed_ = 0;

    void train_new_extractor(const ExperienceData& experience);
    void update_class_stats(const ExperienceData& experience);
    void train_unified_head(const ExperienceData& experience,
                            const std::set<int>& previously_learned);
};

}  // namespace cir
