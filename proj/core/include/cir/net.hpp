#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cir/tensor.hpp"

namespace cir {

enum class Activation { Tanh, Relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Architecture of the minimal trainable network: a stack of fully connected
/// hidden layers, a classification head, and an optional projection head.
/// Either head may be absent (dim 0); the feature dimension is the last
/// hidden width (or the input when there are no hidden layers).
struct MlpSpec {
    std::size_t input_dim = 32;
    std::vector<std::size_t> hidden = {64, 64};
    Activation activation = Activation::Tanh;
    std::size_t n_outputs = 0;       // classification head width, 0 = headless
    std::size_t projection_dim = 0;  // projection head width, 0 = none

    std::size_t feature_dim() const { return hidden.empty() ? input_dim : hidden.back(); }
};

/// All parameters live in one flat vector so that optimizer state, Fisher
/// estimates, and bit-identity checks are plain vector operations.
class MlpNetwork {
public:
    struct LayerView {
        std::size_t w_offset = 0;  // row-major out x in
        std::size_t b_offset = 0;
        std::size_t in = 0;
        std::size_t out = 0;
    };

    MlpNetwork() = default;
    MlpNetwork(const MlpSpec& spec, std::uint64_t init_seed);

    const MlpSpec& spec() const { return spec_; }
    std::size_t feature_dim() const { return spec_.feature_dim(); }
    std::size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    struct Forward {
        TensorBuffer features;  // batch x feature_dim
        TensorBuffer logits;    // batch x n_outputs (empty when headless)
    };
    Forward forward(const TensorBuffer& batch) const;

    /// Forward pass retaining every intermediate needed for backward.
    struct Trace {
        TensorBuffer input;
        std::vector<TensorBuffer> pre;   // per hidden layer, before activation
        std::vector<TensorBuffer> post;  // per hidden layer, after activation
        TensorBuffer logits;
        TensorBuffer projection;
        const TensorBuffer& features() const { return post.empty() ? input : post.back(); }
    };
    Trace forward_trace(const TensorBuffer& batch, bool want_projection = false) const;

    /// Backpropagates loss gradients w.r.t. the head outputs into a flat
    /// parameter gradient. Either of dlogits / dprojection may be null; when
    /// both are given the feature gradients add up (joint losses).
    std::vector<double> backward(const Trace& trace, const TensorBuffer* dlogits,
                                 const TensorBuffer* dprojection) const;

    /// Copy with both heads removed; hidden-layer weights are shared values.
    MlpNetwork backbone_only() const;

    std::span<const LayerView> hidden_layers() const { return hidden_; }
    const LayerView& head() const { return head_; }
    const LayerView& projection_head() const { return projection_; }

private:
    MlpSpec spec_;
    std::vector<double> params_;
    std::vector<LayerView> hidden_;
    LayerView head_;
    LayerView projection_;

    void build_layout();
};

/// Versioned binary checkpoint: dims header + little-endian 64-bit floats.
void save_checkpoint(const MlpNetwork& net, const std::string& path);
MlpNetwork load_checkpoint(const std::string& path);

}  // namespace cir
