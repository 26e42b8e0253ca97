#include "fgsan/classifier.hpp"

#include "fgsan/selector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fgsan {

void MlpParams::validate() const {
    if (hidden_bias.size() != hidden_weight.cols() || out_weight.size() != hidden_weight.cols()) {
        throw ShapeError("mlp: hidden width inconsistent across parameters");
    }
}

MlpParams init_mlp(Eigen::Index in_dim, Eigen::Index hidden_dim, Rng& rng) {
    MlpParams p;
    const double hidden_limit = std::sqrt(6.0 / static_cast<double>(in_dim + hidden_dim));
    p.hidden_weight.resize(in_dim, hidden_dim);
    for (Eigen::Index k = 0; k < p.hidden_weight.size(); ++k) {
        p.hidden_weight.data()[k] = rng.uniform(-hidden_limit, hidden_limit);
    }
    p.hidden_bias = Vector::Zero(hidden_dim);
    const double out_limit = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
    p.out_weight.resize(hidden_dim);
    for (Eigen::Index k = 0; k < hidden_dim; ++k) {
        p.out_weight[k] = rng.uniform(-out_limit, out_limit);
    }
    p.out_bias = 0.0;
    return p;
}

MlpParams zeros_like(const MlpParams& params) {
    MlpParams z = params;
    z.hidden_weight.setZero();
    z.hidden_bias.setZero();
    z.out_weight.setZero();
    z.out_bias = 0.0;
    return z;
}

void append_registry(MlpParams& params, ParamRegistry& registry) {
    registry.push_back({"mlp.hidden_weight",
                        {params.hidden_weight.data(), static_cast<std::size_t>(params.hidden_weight.size())},
                        true});
    registry.push_back({"mlp.hidden_bias",
                        {params.hidden_bias.data(), static_cast<std::size_t>(params.hidden_bias.size())},
                        false});
    registry.push_back({"mlp.out_weight",
                        {params.out_weight.data(), static_cast<std::size_t>(params.out_weight.size())},
                        true});
    registry.push_back({"mlp.out_bias", {&params.out_bias, 1}, false});
}

Vector readout(const Tensor2& masked_embeddings, Activation activation) {
    if (masked_embeddings.rows() == 0) {
        throw std::invalid_argument("readout: no nodes");
    }
    Vector mean = masked_embeddings.colwise().mean().transpose();
    for (Eigen::Index k = 0; k < mean.size(); ++k) {
        mean[k] = activate(activation, mean[k]);
    }
    return mean;
}

double predict_logit(const Vector& e, const MlpParams& params) {
    if (e.size() != params.hidden_weight.rows()) {
        throw ShapeError("predict: embedding width differs from MLP input");
    }
    const Vector hidden = (params.hidden_weight.transpose() * e + params.hidden_bias).array().tanh().matrix();
    return params.out_weight.dot(hidden) + params.out_bias;
}

double predict(const Vector& e, const MlpParams& params) { return sigmoid(predict_logit(e, params)); }

Vector predict_logit_backward(const Vector& e, const MlpParams& params, double grad_logit, MlpParams& grads) {
    const Vector hidden = (params.hidden_weight.transpose() * e + params.hidden_bias).array().tanh().matrix();
    grads.out_bias += grad_logit;
    grads.out_weight.noalias() += grad_logit * hidden;
    const Vector grad_pre =
        (grad_logit * params.out_weight.array() * (1.0 - hidden.array().square())).matrix();
    grads.hidden_bias += grad_pre;
    grads.hidden_weight.noalias() += e * grad_pre.transpose();
    return params.hidden_weight * grad_pre;
}

double bce_with_logit(double logit_value, int label) {
    // -log s(l) = softplus(-l); -log(1 - s(l)) = softplus(l).
    return label == 1 ? softplus(-logit_value) : softplus(logit_value);
}

double total_loss(const std::vector<double>& predictions, const std::vector<int>& labels, const Vector& z,
                  double s, double kl_weight) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("total_loss: predictions and labels differ in length");
    }
    double bce = 0.0;
    for (std::size_t n = 0; n < predictions.size(); ++n) {
        if (labels[n] != 0 && labels[n] != 1) {
            throw std::invalid_argument("total_loss: labels must be 0 or 1");
        }
        const double p = std::clamp(predictions[n], kProbGuard, 1.0 - kProbGuard);
        bce -= labels[n] == 1 ? std::log(p) : std::log1p(-p);
    }
    const double kl = z.size() == 0 ? 0.0 : bernoulli_kl(z, s);
    return bce + kl_weight * kl;
}

MetricsReport compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.empty()) {
        throw std::invalid_argument("compute_metrics: empty input");
    }
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("compute_metrics: length mismatch");
    }
    MetricsReport r;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const int p = predicted[i];
        const int t = truth[i];
        if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
            throw std::invalid_argument("compute_metrics: entries must be binary");
        }
        if (p == 1 && t == 1) ++r.tp;
        if (p == 1 && t == 0) ++r.fp;
        if (p == 0 && t == 0) ++r.tn;
        if (p == 0 && t == 1) ++r.fn;
    }
    auto ratio = [&r](std::size_t num, std::size_t den, const char* name) {
        if (den == 0) {
            r.degenerate.emplace_back(name);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.acc = ratio(r.tp + r.tn, predicted.size(), "acc");
    r.prec = ratio(r.tp, r.tp + r.fp, "prec");
    r.sen = ratio(r.tp, r.tp + r.fn, "sen");
    r.spec = ratio(r.tn, r.tn + r.fp, "spec");
    return r;
}

std::vector<int> threshold_predictions(const std::vector<double>& probabilities, double threshold) {
    std::vector<int> out;
    out.reserve(probabilities.size());
    for (double p : probabilities) {
        out.push_back(p >= threshold ? 1 : 0);
    }
    return out;
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"acc", r.acc},
            {"prec", r.prec},
            {"sen", r.sen},
            {"spec", r.spec},
            {"confusion", {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}}},
            {"degenerate", r.degenerate}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.acc = j.at("acc").get<double>();
    r.prec = j.at("prec").get<double>();
    r.sen = j.at("sen").get<double>();
    r.spec = j.at("spec").get<double>();
    const auto& c = j.at("confusion");
    r.tp = c.at("tp").get<std::size_t>();
    r.fp = c.at("fp").get<std::size_t>();
    r.tn = c.at("tn").get<std::size_t>();
    r.fn = c.at("fn").get<std::size_t>();
    r.degenerate = j.value("degenerate", std::vector<std::string>{});
    return r;
}

std::string metrics_csv_header() { return "ACC,PREC,SEN,SPEC"; }

std::string metrics_csv_row(const MetricsReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << 100.0 * r.acc << ',' << 100.0 * r.prec << ',' << 100.0 * r.sen << ',' << 100.0 * r.spec;
    return out.str();
}

}  // namespace fgsan
