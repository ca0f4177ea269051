#include "cir/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "cir/errors.hpp"
#include "cir/rng.hpp"

namespace cir {

std::string to_string(Activation a) {
    return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    throw ConfigError("unknown activation: " + name);
}

namespace {

double activate(Activation a, double z) {
    return a == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

double activate_grad(Activation a, double z) {
    if (a == Activation::Tanh) {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    return z > 0.0 ? 1.0 : 0.0;
}

// out[b, :] = in[b, :] * W^T + bias
void linear_forward(const TensorBuffer& in, std::span<const double> w, std::span<const double> b,
                    std::size_t out_dim, TensorBuffer& out) {
    const std::size_t in_dim = in.cols();
    for (std::size_t r = 0; r < in.rows(); ++r) {
        const double* x = in.values.data() + r * in_dim;
        double* y = out.values.data() + r * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = b[o];
            const double* wr = w.data() + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) acc += wr[i] * x[i];
            y[o] = acc;
        }
    }
}

}  // namespace

MlpNetwork::MlpNetwork(const MlpSpec& spec, std::uint64_t init_seed) : spec_(spec) {
    if (spec_.input_dim == 0) throw ConfigError("network input_dim must be positive");
    for (std::size_t h : spec_.hidden)
        if (h == 0) throw ConfigError("hidden layer width must be positive");
    build_layout();

    // Xavier-scaled gaussian init, one substream per layer.
    std::size_t layer_index = 0;
    auto init_layer = [&](const LayerView& v) {
        Rng rng = substream(init_seed, {rng_tag::net_init, layer_index++});
        const double scale = std::sqrt(2.0 / static_cast<double>(v.in + v.out));
        for (std::size_t i = 0; i < v.in * v.out; ++i)
            params_[v.w_offset + i] = scale * rng.next_gaussian();
        for (std::size_t i = 0; i < v.out; ++i) params_[v.b_offset + i] = 0.0;
    };
    for (const auto& v : hidden_) init_layer(v);
    if (head_.out > 0) init_layer(head_);
    if (projection_.out > 0) init_layer(projection_);
}

void MlpNetwork::build_layout() {
    hidden_.clear();
    std::size_t offset = 0;
    std::size_t in = spec_.input_dim;
    for (std::size_t width : spec_.hidden) {
        LayerView v{offset, offset + in * width, in, width};
        offset += in * width + width;
        hidden_.push_back(v);
        in = width;
    }
    const std::size_t feat = spec_.feature_dim();
    head_ = LayerView{offset, offset + feat * spec_.n_outputs, feat, spec_.n_outputs};
    if (spec_.n_outputs > 0) offset += feat * spec_.n_outputs + spec_.n_outputs;
    projection_ = LayerView{offset, offset + feat * spec_.projection_dim, feat, spec_.projection_dim};
    if (spec_.projection_dim > 0) offset += feat * spec_.projection_dim + spec_.projection_dim;
    params_.assign(offset, 0.0);
}

MlpNetwork::Trace MlpNetwork::forward_trace(const TensorBuffer& batch, bool want_projection) const {
    if (batch.cols() != spec_.input_dim)
        throw ConfigError("batch width " + std::to_string(batch.cols()) +
                          " does not match network input " + std::to_string(spec_.input_dim));
    Trace trace;
    trace.input = batch;
    const TensorBuffer* current = &trace.input;
    for (const auto& v : hidden_) {
        TensorBuffer z = TensorBuffer::matrix(batch.rows(), v.out);
        linear_forward(*current,
                       {params_.data() + v.w_offset, v.in * v.out},
                       {params_.data() + v.b_offset, v.out}, v.out, z);
        TensorBuffer h = z;
        for (double& x : h.values) x = activate(spec_.activation, x);
        trace.pre.push_back(std::move(z));
        trace.post.push_back(std::move(h));
        current = &trace.post.back();
    }
    if (head_.out > 0) {
        trace.logits = TensorBuffer::matrix(batch.rows(), head_.out);
        linear_forward(*current,
                       {params_.data() + head_.w_offset, head_.in * head_.out},
                       {params_.data() + head_.b_offset, head_.out}, head_.out, trace.logits);
    }
    if (want_projection && projection_.out > 0) {
        trace.projection = TensorBuffer::matrix(batch.rows(), projection_.out);
        linear_forward(*current,
                       {params_.data() + projection_.w_offset, projection_.in * projection_.out},
                       {params_.data() + projection_.b_offset, projection_.out}, projection_.out,
                       trace.projection);
    }
    return trace;
}

MlpNetwork::Forward MlpNetwork::forward(const TensorBuffer& batch) const {
    Trace trace = forward_trace(batch);
    return Forward{trace.features(), std::move(trace.logits)};
}

std::vector<double> MlpNetwork::backward(const Trace& trace, const TensorBuffer* dlogits,
                                         const TensorBuffer* dprojection) const {
    const std::size_t rows = trace.input.rows();
    std::vector<double> grads(params_.size(), 0.0);
    TensorBuffer dfeat = TensorBuffer::matrix(rows, spec_.feature_dim());

    auto backprop_head = [&](const LayerView& v, const TensorBuffer& dout) {
        const TensorBuffer& feat = trace.features();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = dout.values.data() + r * v.out;
            const double* f = feat.values.data() + r * v.in;
            for (std::size_t o = 0; o < v.out; ++o) {
                double* wg = grads.data() + v.w_offset + o * v.in;
                for (std::size_t i = 0; i < v.in; ++i) wg[i] += g[o] * f[i];
                grads[v.b_offset + o] += g[o];
            }
            const double* w = params_.data() + v.w_offset;
            double* df = dfeat.values.data() + r * v.in;
            for (std::size_t o = 0; o < v.out; ++o)
                for (std::size_t i = 0; i < v.in; ++i) df[i] += g[o] * w[o * v.in + i];
        }
    };
    if (dlogits != nullptr) backprop_head(head_, *dlogits);
    if (dprojection != nullptr) backprop_head(projection_, *dprojection);

    TensorBuffer delta = std::move(dfeat);
    for (std::size_t li = hidden_.size(); li-- > 0;) {
        const auto& v = hidden_[li];
        const TensorBuffer& z = trace.pre[li];
        const TensorBuffer& below = li == 0 ? trace.input : trace.post[li - 1];
        for (std::size_t i = 0; i < delta.numel(); ++i)
            delta.values[i] *= activate_grad(spec_.activation, z.values[i]);

        TensorBuffer next = TensorBuffer::matrix(rows, v.in);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* g = delta.values.data() + r * v.out;
            const double* x = below.values.data() + r * v.in;
            double* nx = next.values.data() + r * v.in;
            for (std::size_t o = 0; o < v.out; ++o) {
                double* wg = grads.data() + v.w_offset + o * v.in;
                for (std::size_t i = 0; i < v.in; ++i) wg[i] += g[o] * x[i];
                grads[v.b_offset + o] += g[o];
            }
            const double* w = params_.data() + v.w_offset;
            for (std::size_t o = 0; o < v.out; ++o)
                for (std::size_t i = 0; i < v.in; ++i) nx[i] += g[o] * w[o * v.in + i];
        }
        delta = std::move(next);
    }
    return grads;
}

MlpNetwork MlpNetwork::backbone_only() const {
    MlpSpec spec = spec_;
    spec.n_outputs = 0;
    spec.projection_dim = 0;
    MlpNetwork net(spec, 0);
    for (std::size_t li = 0; li < hidden_.size(); ++li) {
        const auto& src = hidden_[li];
        const auto& dst = net.hidden_[li];
        std::copy_n(params_.data() + src.w_offset, src.in * src.out,
                    net.params_.data() + dst.w_offset);
        std::copy_n(params_.data() + src.b_offset, src.out, net.params_.data() + dst.b_offset);
    }
    return net;
}

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4352494e;  // "NIRC" little-endian
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;
    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        require(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void require(std::size_t n) {
        if (pos + n > bytes.size()) throw ParseError("checkpoint truncated", pos);
    }
};

}  // namespace

void save_checkpoint(const MlpNetwork& net, const std::string& path) {
    std::string out;
    put_u32(out, kCheckpointMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, net.spec().activation == Activation::Tanh ? 0u : 1u);
    put_u64(out, net.spec().input_dim);
    put_u64(out, net.spec().hidden.size());
    for (std::size_t h : net.spec().hidden) put_u64(out, h);
    put_u64(out, net.spec().n_outputs);
    put_u64(out, net.spec().projection_dim);
    for (double p : net.params()) put_f64(out, p);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw RunError("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw RunError("failed writing " + path);
}

MlpNetwork load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{bytes};
    if (r.u32() != kCheckpointMagic) throw ParseError("not a network checkpoint", 0);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    MlpSpec spec;
    spec.activation = r.u32() == 0 ? Activation::Tanh : Activation::Relu;
    spec.input_dim = r.u64();
    spec.hidden.resize(r.u64());
    for (std::size_t& h : spec.hidden) h = r.u64();
    spec.n_outputs = r.u64();
    spec.projection_dim = r.u64();

    MlpNetwork net(spec, 0);
    for (double& p : net.params()) p = r.f64();
    if (r.pos != bytes.size()) throw ParseError("trailing bytes after checkpoint payload", r.pos);
    return net;
}

}  // namespace cir
