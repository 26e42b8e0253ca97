#ifndef FGSAN_CLASSIFIER_HPP
#define FGSAN_CLASSIFIER_HPP

#include "fgsan/numcore.hpp"
#include "fgsan/rng.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace fgsan {

/// d -> d_h (tanh) -> 1 (sigmoid) prediction head.
struct MlpParams {
    Tensor2 hidden_weight;  // d x d_h
    Vector hidden_bias;     // d_h
    Vector out_weight;      // d_h
    double out_bias = 0.0;

    void validate() const;
};

MlpParams init_mlp(Eigen::Index in_dim, Eigen::Index hidden_dim, Rng& rng);
MlpParams zeros_like(const MlpParams& params);
void append_registry(MlpParams& params, ParamRegistry& registry);

/// act( mean over rows ). Throws std::invalid_argument for an empty input.
Vector readout(const Tensor2& masked_embeddings, Activation activation = Activation::sigmoid);

/// Logit before the final sigmoid.
double predict_logit(const Vector& graph_embedding, const MlpParams& params);
/// y_hat = sigmoid(out_weight . tanh(W^T e + b) + out_bias).
double predict(const Vector& graph_embedding, const MlpParams& params);

/// Backward through predict_logit: accumulates parameter gradients and
/// returns d / d graph_embedding, scaled by grad_logit.
Vector predict_logit_backward(const Vector& graph_embedding, const MlpParams& params, double grad_logit,
                              MlpParams& grads);

/// Per-sample BCE computed from the logit, -[y log s(l) + (1-y) log(1-s(l))].
double bce_with_logit(double logit_value, int label);

/// Sum-over-samples BCE on clamped predictions plus kl_weight * KL(Ber(z)||Ber(s)).
double total_loss(const std::vector<double>& predictions, const std::vector<int>& labels,
                  const Vector& z, double s, double kl_weight);

struct MetricsReport {
    double acc = 0.0;
    double prec = 0.0;
    double sen = 0.0;
    double spec = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    /// Names of metrics whose denominator was zero (reported as 0.0).
    std::vector<std::string> degenerate;
};

/// Throws std::invalid_argument on empty or mismatched inputs and on
/// non-binary entries.
MetricsReport compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth);

std::vector<int> threshold_predictions(const std::vector<double>& probabilities, double threshold = 0.5);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);
/// "ACC,PREC,SEN,SPEC" header row; values scaled by 100.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);

}  // namespace fgsan

#endif  // FGSAN_CLASSIFIER_HPP
