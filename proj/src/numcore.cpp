#include "fgsan/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace fgsan {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("logit: argument must lie in (0, 1)");
    }
    return std::log(p) - std::log1p(-p);
}

double softplus(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    if (name == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation act) {
    switch (act) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
    }
    return "unknown";
}

double activate(Activation act, double x) {
    switch (act) {
        case Activation::tanh: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::identity: return x;
        case Activation::sigmoid: return sigmoid(x);
    }
    return x;
}

double activate_grad(Activation act, double x) {
    switch (act) {
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
        case Activation::sigmoid: {
            const double s = sigmoid(x);
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

double activate_grad_from_output(Activation act, double y) {
    switch (act) {
        case Activation::tanh: return 1.0 - y * y;
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
        case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

void apply_activation(Activation act, Tensor2& values) {
    switch (act) {
        case Activation::tanh: values = values.array().tanh().matrix(); return;
        case Activation::relu: values = values.cwiseMax(0.0); return;
        case Activation::identity: return;
        case Activation::sigmoid: values = values.unaryExpr([](double x) { return sigmoid(x); }); return;
    }
}

void masked_softmax_row(std::span<const double> logits, std::span<const bool> mask,
                        std::span<double> out) {
    if (logits.size() != mask.size() || logits.size() != out.size()) {
        throw ShapeError("masked_softmax: logits and mask lengths differ");
    }
    double peak = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (mask[j]) {
            peak = std::max(peak, logits[j]);
            any = true;
        }
    }
    if (!any) {
        throw std::domain_error("empty neighborhood");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = mask[j] ? std::exp(logits[j] - peak) : 0.0;
        total += out[j];
    }
    for (double& v : out) {
        v /= total;
    }
}

Vector masked_softmax(const Vector& logits, const std::vector<bool>& mask) {
    if (static_cast<std::size_t>(logits.size()) != mask.size()) {
        throw ShapeError("masked_softmax: logits and mask lengths differ");
    }
    // std::vector<bool> is bit-packed; copy into a byte-addressable buffer.
    std::unique_ptr<bool[]> flags(new bool[mask.size()]);
    std::copy(mask.begin(), mask.end(), flags.get());
    Vector out(logits.size());
    masked_softmax_row({logits.data(), mask.size()}, {flags.get(), mask.size()},
                       {out.data(), mask.size()});
    return out;
}

bool all_finite(const Tensor2& t) { return t.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

void require_same_layout(const ParamRegistry& a, const ParamRegistry& b) {
    if (a.size() != b.size()) {
        throw ShapeError("parameter registries differ in group count");
    }
    for (std::size_t g = 0; g < a.size(); ++g) {
        if (a[g].name != b[g].name || a[g].values.size() != b[g].values.size()) {
            throw ShapeError("parameter registries differ at group '" + a[g].name + "'");
        }
    }
}

GradCheckReport finite_diff_check(const std::function<double()>& loss, ParamRegistry& params,
                                  const ParamRegistry& analytic, double epsilon) {
    if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
        throw std::invalid_argument("finite_diff_check: epsilon must lie in [1e-6, 1e-3]");
    }
    require_same_layout(params, analytic);

    auto evaluate = [&loss]() {
        const double value = loss();
        if (!std::isfinite(value)) {
            throw NumericError("finite_diff_check: loss is not finite");
        }
        return value;
    };

    const double center = evaluate();
    GradCheckReport report;
    for (std::size_t g = 0; g < params.size(); ++g) {
        GroupGradError group{params[g].name};
        auto values = params[g].values;
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double saved = values[k];
            values[k] = saved + epsilon;
            const double up = evaluate();
            values[k] = saved - epsilon;
            const double down = evaluate();
            values[k] = saved;

            const double numeric = (up - down) / (2.0 * epsilon);
            const double scale = std::max(1.0, std::abs(numeric));
            const double forward = (up - center) / epsilon;
            const double backward = (center - down) / epsilon;
            if (std::abs(forward - backward) > 0.1 * scale) {
                group.non_differentiable = true;
            }
            const double rel = std::abs(analytic[g].values[k] - numeric) / scale;
            if (rel > group.max_rel_error) {
                group.max_rel_error = rel;
                group.worst_index = k;
            }
        }
        report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
        report.non_differentiable = report.non_differentiable || group.non_differentiable;
        report.groups.push_back(std::move(group));
    }
    return report;
}

}  // namespace fgsan
