#ifndef FGSAN_MODEL_HPP
#define FGSAN_MODEL_HPP

#include "fgsan/attention.hpp"
#include "fgsan/classifier.hpp"
#include "fgsan/graphdata.hpp"
#include "fgsan/selector.hpp"

#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fgsan {

/// full: encoder + gates + KL. no_selector: mask fixed to ones and no KL.
/// no_spatial: spatial table frozen at zero.
enum class Variant { full, no_selector, no_spatial };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

struct ModelConfig {
    std::vector<Eigen::Index> hidden_widths{16, 16, 16};
    Activation layer_activation = Activation::tanh;
    Activation readout_activation = Activation::sigmoid;
    /// 0 means half the embedding width.
    Eigen::Index mlp_hidden = 0;
    GraphViewOptions graph;
    double temperature = 0.5;
    double prior_prob = 0.1;
    double kl_weight = 1.0;
    Variant variant = Variant::full;

    Eigen::Index embedding_dim() const { return hidden_widths.back(); }
    Eigen::Index mlp_hidden_dim() const;
    void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct FgsanParams {
    EncoderParams encoder;
    SelectorState selector;
    MlpParams mlp;

    /// Groups in a fixed order: encoder layers, spatial table, gate logits, MLP.
    ParamRegistry registry();
};

FgsanParams init_params(const ModelConfig& config, Eigen::Index feature_dim, std::size_t regions, Rng& rng);
FgsanParams zeros_like(const FgsanParams& params);

/// A sample with its graph view precomputed.
struct PreparedSample {
    const Tensor2* features = nullptr;
    StaticGraphView view;
    int label = 0;
};

std::vector<PreparedSample> prepare(const Dataset& dataset, const GraphViewOptions& options);

/// The mask used at evaluation time for the configured variant.
Vector evaluation_mask(const FgsanParams& params, const ModelConfig& config);

/// Predicted probability for one sample under an explicit mask.
double forward_probability(const FgsanParams& params, const ModelConfig& config, const Tensor2& x,
                           const StaticGraphView& view, const Vector& mask);

struct LossBreakdown {
    double total = 0.0;
    double bce = 0.0;
    double kl = 0.0;
};

/// Total loss over `batch` (BCE summed over samples plus
/// kl_scale * kl_weight * KL) for one shared noise vector. A minibatch passes
/// kl_scale = batch size / training set size so that one epoch covers the
/// full-batch objective exactly once. `noise` is ignored for no_selector.
/// When `grads` is non-null the analytic gradient is accumulated into it.
LossBreakdown batch_loss(const FgsanParams& params, const ModelConfig& config,
                         const std::vector<const PreparedSample*>& batch, const Vector& noise,
                         FgsanParams* grads, double kl_scale = 1.0);

}  // namespace fgsan

#endif  // FGSAN_MODEL_HPP
