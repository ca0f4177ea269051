#pragma once

#include <map>
#include <optional>
#include <set>

#include "cir/net.hpp"
#include "cir/strategy.hpp"

namespace cir {

/// Class-balanced reservoir: insert while there is room; once full, evict
/// from the largest class when the incoming class is smaller, otherwise
/// reservoir-replace within the incoming class. Size never exceeds capacity
/// and per-class counts stay within one of each other under balanced exposure.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void observe_sample(std::span<const double> x, int label, Rng& rng);
    LabeledSet sample_batch(std::size_t k, Rng& rng) const;

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::map<int, std::size_t> class_counts() const;

private:
    struct Item {
        std::vector<double> x;
        int label;
    };
    std::size_t capacity_;
    std::vector<Item> items_;
    std::map<int, std::size_t> seen_;  // per-class stream counts for the reservoir rule
};

/// lambda * sum_j fisher_j * (w_j - anchor_j)^2; zero at the anchor,
/// non-negative everywhere.
double ewc_penalty(std::span<const double> params, std::span<const double> anchor,
                   std::span<const double> fisher, double lambda);

/// grads += d(penalty)/dw = 2 * lambda * fisher * (w - anchor).
void add_ewc_penalty_grad(std::span<const double> params, std::span<const double> anchor,
                          std::span<const double> fisher, double lambda,
                          std::vector<double>& grads);

/// Sequential fine-tuning without any continual-learning mechanism.
class NaiveStrategy : public Strategy {
public:
    NaiveStrategy(const StrategyContext& ctx, std::string name = "naive");
    void observe(const ExperienceData& experience) override;
    std::vector<int> predict(const TensorBuffer& batch) const override;
    std::string name() const override { return name_; }

    const MlpNetwork& net() const { return net_; }

protected:
    StrategyContext ctx_;
    MlpNetwork net_;
    std::string name_;
};

/// Naive training on the merged stream: the iid upper bound.
class JointStrategy : public NaiveStrategy {
public:
    explicit JointStrategy(const StrategyContext& ctx) : NaiveStrategy(ctx, "joint") {}
    bool wants_merged_stream() const override { return true; }
};

class ReplayStrategy : public Strategy {
public:
    ReplayStrategy(std::size_t capacity, const StrategyContext& ctx, std::string name);
    void observe(const ExperienceData& experience) override;
    std::vector<int> predict(const TensorBuffer& batch) const override;
    std::string name() const override { return name_; }

    const ReplayBuffer& buffer() const { return buffer_; }

private:
    StrategyContext ctx_;
    MlpNetwork net_;
    ReplayBuffer buffer_;
    std::string name_;
};

class EwcStrategy : public Strategy {
public:
    EwcStrategy(double lambda, const StrategyContext& ctx);
    void observe(const ExperienceData& experience) override;
    std::vector<int> predict(const TensorBuffer& batch) const override;
    std::string name() const override { return "ewc"; }

    const std::vector<double>& fisher() const { return fisher_; }
    const std::vector<double>& anchor() const { return anchor_; }
    const MlpNetwork& net() const { return net_; }

private:
    StrategyContext ctx_;
    MlpNetwork net_;
    double lambda_;
    std::vector<double> fisher_;
    std::vector<double> anchor_;
    bool has_anchor_ = false;
};

class LwfStrategy : public Strategy {
public:
    LwfStrategy(double alpha, double temperature, const StrategyContext& ctx);
    void observe(const ExperienceData& experience) override;
    std::vector<int> predict(const TensorBuffer& batch) const override;
    std::string name() const override { return "lwf"; }

    const MlpNetwork& net() const { return net_; }

private:
    StrategyContext ctx_;
    MlpNetwork net_;
    double alpha_;
    double temperature_;
    std::optional<MlpNetwork> teacher_;
    std::set<int> teacher_classes_;
};

}  // namespace cir
