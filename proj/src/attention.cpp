#include "fgsan/attention.hpp"

#include <cmath>

namespace fgsan {

namespace {

void check_layer_input(const Tensor2& h, const AttentionLayerParams& params, const StaticGraphView& view) {
    if (h.cols() != params.in_dim()) {
        throw ShapeError("attention: input width " + std::to_string(h.cols()) +
                         " differs from layer input " + std::to_string(params.in_dim()));
    }
    if (params.attn_vector.size() != 2 * params.out_dim()) {
        throw ShapeError("attention: attention vector must have length 2 * d_out");
    }
    if (static_cast<std::size_t>(h.rows()) != view.size() || view.spd_bucket.rows() != h.rows()) {
        throw ShapeError("attention: node count differs from graph view");
    }
}

// Fills trace.scores and trace.alpha from trace.projected.
void compute_alpha(const AttentionLayerParams& params, const StaticGraphView& view,
                   const SpatialEncodingTable& spatial, LayerTrace& trace) {
    const auto n = trace.projected.rows();
    const auto d = params.out_dim();
    const Vector self_term = trace.projected * params.attn_vector.head(d);
    const Vector neighbor_term = trace.projected * params.attn_vector.tail(d);
    trace.scores.setZero(n, n);
    trace.alpha.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!view.adjacency(i, j)) {
                continue;
            }
            const int bucket = view.spd_bucket(i, j);
            if (bucket < 0 || bucket >= spatial.bias.size()) {
                throw ShapeError("attention: spd bucket outside the spatial table");
            }
            trace.scores(i, j) = std::tanh(self_term[i] + neighbor_term[j] + spatial.bias[bucket]);
        }
        masked_softmax_row({trace.scores.row(i).data(), static_cast<std::size_t>(n)},
                           {view.adjacency.row(i).data(), static_cast<std::size_t>(n)},
                           {trace.alpha.row(i).data(), static_cast<std::size_t>(n)});
    }
}

}  // namespace

void EncoderParams::validate() const {
    if (layers.empty()) {
        throw ShapeError("encoder: at least one layer required");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].attn_vector.size() != 2 * layers[l].out_dim()) {
            throw ShapeError("encoder: layer " + std::to_string(l) + " attention vector misshapen");
        }
        if (l > 0 && layers[l].in_dim() != layers[l - 1].out_dim()) {
            throw ShapeError("encoder: layer widths do not chain at layer " + std::to_string(l));
        }
    }
    if (spatial.bias.size() < 1) {
        throw ShapeError("encoder: spatial table is empty");
    }
}

EncoderParams init_encoder(const std::vector<Eigen::Index>& widths, int max_bucket,
                           Activation activation, Rng& rng) {
    if (widths.size() < 2) {
        throw ShapeError("init_encoder: need input width plus at least one layer width");
    }
    EncoderParams params;
    params.activation = activation;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const auto fan_in = widths[l];
        const auto fan_out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        AttentionLayerParams layer;
        layer.weight.resize(fan_in, fan_out);
        for (Eigen::Index k = 0; k < layer.weight.size(); ++k) {
            layer.weight.data()[k] = rng.uniform(-limit, limit);
        }
        layer.attn_vector = Vector::Zero(2 * fan_out);
        params.layers.push_back(std::move(layer));
    }
    params.spatial.bias = Vector::Zero(max_bucket + 1);
    return params;
}

EncoderParams zeros_like(const EncoderParams& params) {
    EncoderParams out = params;
    for (auto& layer : out.layers) {
        layer.weight.setZero();
        layer.attn_vector.setZero();
    }
    out.spatial.bias.setZero();
    return out;
}

void append_registry(EncoderParams& params, ParamRegistry& registry) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        const std::string prefix = "encoder.layer" + std::to_string(l);
        registry.push_back({prefix + ".weight",
                            {layer.weight.data(), static_cast<std::size_t>(layer.weight.size())},
                            true});
        registry.push_back({prefix + ".attn",
                            {layer.attn_vector.data(), static_cast<std::size_t>(layer.attn_vector.size())},
                            true});
    }
    registry.push_back({"encoder.spatial",
                        {params.spatial.bias.data(), static_cast<std::size_t>(params.spatial.bias.size())},
                        false});
}

Tensor2 attention_coefficients(const Tensor2& h, const AttentionLayerParams& params,
                               const StaticGraphView& view, const SpatialEncodingTable& spatial) {
    check_layer_input(h, params, view);
    LayerTrace trace;
    trace.projected = h * params.weight;
    compute_alpha(params, view, spatial, trace);
    return trace.alpha;
}

Tensor2 layer_forward(const Tensor2& h, const Tensor2& alpha, const AttentionLayerParams& params,
                      Activation activation) {
    if (h.cols() != params.in_dim()) {
        throw ShapeError("layer_forward: input width differs from layer input");
    }
    if (alpha.rows() != h.rows() || alpha.cols() != h.rows()) {
        throw ShapeError("layer_forward: alpha must be N x N");
    }
    Tensor2 out = alpha * (h * params.weight);
    apply_activation(activation, out);
    return out;
}

const Tensor2& encoder_forward(const Tensor2& x, const StaticGraphView& view,
                               const EncoderParams& params, EncoderTrace& trace) {
    trace.layers.resize(params.layers.size());
    const Tensor2* current = &x;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        auto& lt = trace.layers[l];
        check_layer_input(*current, layer, view);
        lt.input = *current;
        lt.projected.noalias() = lt.input * layer.weight;
        compute_alpha(layer, view, params.spatial, lt);
        lt.preact.noalias() = lt.alpha * lt.projected;
        lt.output = lt.preact;
        apply_activation(params.activation, lt.output);
        current = &lt.output;
    }
    trace.output = trace.layers.back().output;
    if (!trace.output.allFinite()) {
        throw NumericError("encoder_forward: non-finite output");
    }
    return trace.output;
}

Tensor2 encoder_forward(const Tensor2& x, const StaticGraphView& view, const EncoderParams& params) {
    EncoderTrace trace;
    return encoder_forward(x, view, params, trace);
}

void encoder_backward(const EncoderTrace& trace, const StaticGraphView& view,
                      const EncoderParams& params, const Tensor2& grad_output, EncoderParams& grads) {
    Tensor2 grad_h = grad_output;
    const auto n = grad_output.rows();
    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const auto& layer = params.layers[li];
        const auto& lt = trace.layers[li];
        auto& g = grads.layers[li];
        const auto d = layer.out_dim();

        Tensor2 grad_pre = grad_h;
        for (Eigen::Index k = 0; k < grad_pre.size(); ++k) {
            grad_pre.data()[k] *= activate_grad_from_output(params.activation, lt.output.data()[k]);
        }

        Tensor2 grad_alpha = grad_pre * lt.projected.transpose();
        Tensor2 grad_proj = lt.alpha.transpose() * grad_pre;

        Vector grad_self = Vector::Zero(n);
        Vector grad_neighbor = Vector::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double dot = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                dot += lt.alpha(i, j) * grad_alpha(i, j);
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!view.adjacency(i, j)) {
                    continue;
                }
                const double s = lt.scores(i, j);
                const double grad_score = lt.alpha(i, j) * (grad_alpha(i, j) - dot) * (1.0 - s * s);
                grad_self[i] += grad_score;
                grad_neighbor[j] += grad_score;
                grads.spatial.bias[view.spd_bucket(i, j)] += grad_score;
            }
        }
        grad_proj.noalias() += grad_self * layer.attn_vector.head(d).transpose();
        grad_proj.noalias() += grad_neighbor * layer.attn_vector.tail(d).transpose();
        g.attn_vector.head(d).noalias() += lt.projected.transpose() * grad_self;
        g.attn_vector.tail(d).noalias() += lt.projected.transpose() * grad_neighbor;
        g.weight.noalias() += lt.input.transpose() * grad_proj;

        if (li > 0) {
            grad_h.noalias() = grad_proj * layer.weight.transpose();
        }
    }
}

}  // namespace fgsan
