#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cir/config.hpp"
#include "cir/dataset.hpp"
#include "cir/eval.hpp"
#include "cir/optim.hpp"

namespace cir {

/// One experience's training data, the only thing a strategy ever sees.
/// The harness materializes it per experience and discards it afterwards.
struct ExperienceData {
    std::size_t index = 0;  // 1-based position in the stream
    std::vector<int> classes;
    TensorBuffer x;
    std::vector<int> labels;
};

/// Everything a strategy may know up front: the data geometry, the stream
/// length, the shared training configuration and its private seed.
struct StrategyContext {
    std::size_t input_dim = 32;
    std::size_t n_classes = 20;      // total class count of the dataset
    std::size_t n_experiences = 20;  // N
    std::vector<std::size_t> hidden = {64, 64};  // backbone widths
    TrainConfig train;
    std::uint64_t seed = 0;
};

class Strategy : public Classifier {
public:
    /// Train on one experience. Called once per experience, in stream order.
    virtual void observe(const ExperienceData& experience) = 0;

    virtual std::string name() const = 0;

    /// Joint upper bound opts in: the harness then merges the whole stream
    /// into a single observe() call instead of stepping through experiences.
    virtual bool wants_merged_stream() const { return false; }

    /// Per-run notes (skipped phases, unclaimed classes, ...).
    const std::vector<std::string>& log() const { return log_; }

protected:
    void note(std::string message) { log_.push_back(std::move(message)); }

private:
    std::vector<std::string> log_;
};

/// Registry keyed by the CLI strategy ids: naive, er200, er2000, er, ewc,
/// lwf, joint, hatcir, horde, dwgrnet.
std::unique_ptr<Strategy> make_strategy(const std::string& id, const ConfigSection& cfg,
                                        const StrategyContext& ctx);

std::vector<std::string> strategy_ids();

}  // namespace cir
