#include "fgsan/model.hpp"

#include <stdexcept>

namespace fgsan {

Variant parse_variant(std::string_view name) {
    if (name == "full") return Variant::full;
    if (name == "no_selector") return Variant::no_selector;
    if (name == "no_spatial") return Variant::no_spatial;
    throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_selector: return "no_selector";
        case Variant::no_spatial: return "no_spatial";
    }
    return "unknown";
}

Eigen::Index ModelConfig::mlp_hidden_dim() const {
    return mlp_hidden > 0 ? mlp_hidden : std::max<Eigen::Index>(1, embedding_dim() / 2);
}

void ModelConfig::validate() const {
    if (hidden_widths.empty()) {
        throw std::invalid_argument("model: at least one encoder layer required");
    }
    for (auto w : hidden_widths) {
        if (w < 1) {
            throw std::invalid_argument("model: encoder widths must be positive");
        }
    }
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("model: temperature must be > 0");
    }
    if (!(prior_prob > 0.0 && prior_prob < 1.0)) {
        throw std::invalid_argument("model: prior_prob must lie in (0, 1)");
    }
    if (!(kl_weight >= 0.0)) {
        throw std::invalid_argument("model: kl_weight must be >= 0");
    }
    if (!(graph.tau > 0.0 && graph.tau < 1.0) || graph.max_bucket < 1) {
        throw std::invalid_argument("model: invalid graph options");
    }
}

nlohmann::json to_json(const ModelConfig& c) {
    return {{"hidden_widths", c.hidden_widths},
            {"layer_activation", activation_name(c.layer_activation)},
            {"readout_activation", activation_name(c.readout_activation)},
            {"mlp_hidden", c.mlp_hidden_dim()},
            {"tau", c.graph.tau},
            {"max_bucket", c.graph.max_bucket},
            {"temperature", c.temperature},
            {"prior_prob", c.prior_prob},
            {"kl_weight", c.kl_weight},
            {"variant", variant_name(c.variant)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.hidden_widths = j.at("hidden_widths").get<std::vector<Eigen::Index>>();
    c.layer_activation = parse_activation(j.at("layer_activation").get<std::string>());
    c.readout_activation = parse_activation(j.at("readout_activation").get<std::string>());
    c.mlp_hidden = j.at("mlp_hidden").get<Eigen::Index>();
    c.graph.tau = j.at("tau").get<double>();
    c.graph.max_bucket = j.at("max_bucket").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.prior_prob = j.at("prior_prob").get<double>();
    c.kl_weight = j.at("kl_weight").get<double>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.validate();
    return c;
}

ParamRegistry FgsanParams::registry() {
    ParamRegistry reg;
    append_registry(encoder, reg);
    reg.push_back({"selector.gate_logits",
                   {selector.gate_logits.data(), static_cast<std::size_t>(selector.gate_logits.size())},
                   false});
    append_registry(mlp, reg);
    return reg;
}

FgsanParams init_params(const ModelConfig& config, Eigen::Index feature_dim, std::size_t regions, Rng& rng) {
    config.validate();
    std::vector<Eigen::Index> widths{feature_dim};
    widths.insert(widths.end(), config.hidden_widths.begin(), config.hidden_widths.end());
    FgsanParams p;
    p.encoder = init_encoder(widths, config.graph.max_bucket, config.layer_activation, rng);
    p.selector = init_selector(regions, config.prior_prob, config.temperature);
    p.mlp = init_mlp(config.embedding_dim(), config.mlp_hidden_dim(), rng);
    return p;
}

FgsanParams zeros_like(const FgsanParams& params) {
    FgsanParams z;
    z.encoder = zeros_like(params.encoder);
    z.selector = params.selector;
    z.selector.gate_logits.setZero();
    z.mlp = zeros_like(params.mlp);
    return z;
}

std::vector<PreparedSample> prepare(const Dataset& dataset, const GraphViewOptions& options) {
    std::vector<PreparedSample> out;
    out.reserve(dataset.samples.size());
    for (const auto& g : dataset.samples) {
        out.push_back({&g.node_features, build_view(g, options), g.label});
    }
    return out;
}

Vector evaluation_mask(const FgsanParams& params, const ModelConfig& config) {
    if (config.variant == Variant::no_selector) {
        return Vector::Ones(params.selector.gate_logits.size());
    }
    return deterministic_mask(params.selector);
}

double forward_probability(const FgsanParams& params, const ModelConfig& config, const Tensor2& x,
                           const StaticGraphView& view, const Vector& mask) {
    const Tensor2 h = encoder_forward(x, view, params.encoder);
    const Vector e = readout(apply_mask(h, mask), config.readout_activation);
    return predict(e, params.mlp);
}

LossBreakdown batch_loss(const FgsanParams& params, const ModelConfig& config,
                         const std::vector<const PreparedSample*>& batch, const Vector& noise,
                         FgsanParams* grads, double kl_scale) {
    const bool gated = config.variant != Variant::no_selector;
    const auto regions = params.selector.gate_logits.size();
    const Vector mask = gated ? mask_from_noise(params.selector, noise) : Vector::Ones(regions);
    Vector grad_mask = Vector::Zero(regions);

    LossBreakdown loss;
    EncoderTrace trace;
    for (const PreparedSample* sample : batch) {
        const Tensor2& h = encoder_forward(*sample->features, sample->view, params.encoder, trace);
        const Tensor2 masked = mask.asDiagonal() * h;
        const Vector mean = masked.colwise().mean().transpose();
        Vector e(mean.size());
        for (Eigen::Index k = 0; k < e.size(); ++k) {
            e[k] = activate(config.readout_activation, mean[k]);
        }
        const double logit_value = predict_logit(e, params.mlp);
        loss.bce += bce_with_logit(logit_value, sample->label);
        if (grads == nullptr) {
            continue;
        }
        const double grad_logit = sigmoid(logit_value) - static_cast<double>(sample->label);
        Vector grad_e = predict_logit_backward(e, params.mlp, grad_logit, grads->mlp);
        for (Eigen::Index k = 0; k < grad_e.size(); ++k) {
            grad_e[k] *= activate_grad_from_output(config.readout_activation, e[k]);
        }
        const double inv_n = 1.0 / static_cast<double>(h.rows());
        // d mean / d masked row i = 1/N for every row.
        grad_mask.noalias() += inv_n * (h * grad_e);
        const Tensor2 grad_h = inv_n * (mask * grad_e.transpose());
        encoder_backward(trace, sample->view, params.encoder, grad_h, grads->encoder);
    }

    if (gated) {
        loss.kl = bernoulli_kl(params.selector.probabilities(), params.selector.prior_prob);
    }
    const double kl_coef = kl_scale * config.kl_weight;
    loss.total = loss.bce + kl_coef * loss.kl;

    if (grads != nullptr) {
        if (gated) {
            grads->selector.gate_logits += mask_grad_to_logits(params.selector, noise, grad_mask);
            grads->selector.gate_logits += kl_coef * bernoulli_kl_grad_logits(params.selector);
        }
        if (config.variant == Variant::no_spatial) {
            grads->encoder.spatial.bias.setZero();
        }
    }
    return loss;
}

}  // namespace fgsan
