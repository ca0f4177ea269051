#include "cir/strategy.hpp"

#include <sstream>

#include "cir/baselines.hpp"
#include "cir/dwgrnet.hpp"
#include "cir/hatcir.hpp"
#include "cir/horde.hpp"

namespace cir {

namespace {

std::vector<double> parse_weights(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("momentum_weights: '" + item + "' is not a number");
        }
    }
    return out;
}

Mining parse_mining(const std::string& name) {
    if (name == "random") return Mining::Random;
    if (name == "hard") return Mining::HardNegative;
    throw ConfigError("unknown mining mode: " + name);
}

std::unique_ptr<Strategy> make_hatcir(const ConfigSection& cfg, const StrategyContext& ctx) {
    HatCirConfig hc;
    hc.fragments = static_cast<std::size_t>(get_int_or(cfg, "fragments", 0));
    hc.ensembles = static_cast<std::size_t>(get_int_or(cfg, "ensembles", 2));
    hc.momentum.window = static_cast<std::size_t>(get_int_or(cfg, "momentum_window", 3));
    if (cfg.count("momentum_weights"))
        hc.momentum.weights = parse_weights(get_string(cfg, "momentum_weights"));
    else if (hc.momentum.window != 3) {
        hc.momentum.weights.resize(hc.momentum.window);
        for (std::size_t i = 0; i < hc.momentum.window; ++i)
            hc.momentum.weights[i] = static_cast<double>(i + 1);
    }
    hc.tta_views = static_cast<std::size_t>(get_int_or(cfg, "tta_views", 2));
    hc.phase_split = get_double_or(cfg, "phase_split", 0.6);
    hc.margin = get_double_or(cfg, "margin", 0.5);
    hc.mining = parse_mining(get_string_or(cfg, "mining", "hard"));
    return std::make_unique<HatCirStrategy>(hc, ctx);
}

std::unique_ptr<Strategy> make_horde(const ConfigSection& cfg, const StrategyContext& ctx) {
    HordeConfig hc;
    hc.min_classes_for_fe = static_cast<std::size_t>(get_int_or(cfg, "min_classes_for_fe", 5));
    hc.seen_fraction_stop = get_double_or(cfg, "seen_fraction_stop", 0.85);
    hc.max_fes = static_cast<std::size_t>(get_int_or(cfg, "max_fes", 10));
    hc.heuristic = heuristic_from_string(get_string_or(cfg, "estimation_heuristic", "original"));
    const std::string alpha_mode = get_string_or(cfg, "alpha_mode", "adaptive");
    if (alpha_mode == "adaptive") {
        hc.alpha_adaptive = true;
    } else if (alpha_mode.rfind("fixed:", 0) == 0) {
        hc.alpha_adaptive = false;
        try {
            hc.alpha_fixed = std::stod(alpha_mode.substr(6));
        } catch (const std::exception&) {
            throw ConfigError("alpha_mode: bad fixed value in '" + alpha_mode + "'");
        }
    } else {
        throw ConfigError("alpha_mode must be 'adaptive' or 'fixed:<value>'");
    }
    hc.margin = get_double_or(cfg, "margin", 0.5);
    hc.mining = parse_mining(get_string_or(cfg, "mining", "hard"));
    hc.head_epochs = static_cast<std::size_t>(get_int_or(cfg, "head_epochs", 0));
    return std::make_unique<HordeStrategy>(hc, ctx);
}

std::unique_ptr<Strategy> make_dwgrnet(const ConfigSection& cfg, const StrategyContext& ctx) {
    DwgrnetConfig dc;
    dc.fusion.use_entropy = get_bool_or(cfg, "use_entropy", true);
    dc.fusion.use_class_count = get_bool_or(cfg, "use_class_count", true);
    dc.fusion.use_feature_norm = get_bool_or(cfg, "use_feature_norm", true);
    dc.fusion.entropy_floor = get_double_or(cfg, "entropy_floor", 1e-4);
    const std::string reduce = get_string_or(cfg, "fusion_reduce", "max");
    if (reduce == "max")
        dc.fusion.reduce = FusionConfig::Reduce::Max;
    else if (reduce == "mean")
        dc.fusion.reduce = FusionConfig::Reduce::Mean;
    else
        throw ConfigError("fusion_reduce must be 'max' or 'mean'");
    dc.mix_coefficient = get_double_or(cfg, "mix_coefficient", 1.0);
    return std::make_unique<DwgrnetStrategy>(dc, ctx);
}

}  // namespace

std::unique_ptr<Strategy> make_strategy(const std::string& id, const ConfigSection& cfg,
                                        const StrategyContext& ctx) {
    if (id == "naive") return std::make_unique<NaiveStrategy>(ctx);
    if (id == "joint") return std::make_unique<JointStrategy>(ctx);
    if (id == "er200") return std::make_unique<ReplayStrategy>(200, ctx, "er200");
    if (id == "er2000") return std::make_unique<ReplayStrategy>(2000, ctx, "er2000");
    if (id == "er") {
        const auto capacity = static_cast<std::size_t>(get_int_or(cfg, "buffer_capacity", 200));
        return std::make_unique<ReplayStrategy>(capacity, ctx, "er");
    }
    if (id == "ewc") return std::make_unique<EwcStrategy>(get_double_or(cfg, "lambda", 1.0), ctx);
    if (id == "lwf")
        return std::make_unique<LwfStrategy>(get_double_or(cfg, "alpha", 1.0),
                                             get_double_or(cfg, "temperature", 2.0), ctx);
    if (id == "hatcir") return make_hatcir(cfg, ctx);
    if (id == "horde") return make_horde(cfg, ctx);
    if (id == "dwgrnet") return make_dwgrnet(cfg, ctx);
    throw ConfigError("unknown strategy id: " + id);
}

std::vector<std::string> strategy_ids() {
    return {"naive", "joint", "er", "er200", "er2000", "ewc", "lwf", "hatcir", "horde", "dwgrnet"};
}

}  // namespace cir
