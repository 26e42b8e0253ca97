#include "fgsan/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fgsan {

namespace {

double guard(double p) { return std::clamp(p, kProbGuard, 1.0 - kProbGuard); }

void require_open_unit(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error(std::string(what) + " must lie strictly inside (0, 1)");
    }
}

// Pre-temperature logit of the relaxed sample for gate i.
double relaxed_argument(const SelectorState& state, Eigen::Index i, double u) {
    const double z = guard(sigmoid(state.gate_logits[i]));
    const double uu = guard(u);
    return logit(z) + logit(uu);
}

}  // namespace

void SelectorState::validate() const {
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("selector: temperature must be > 0");
    }
    if (!(prior_prob > 0.0 && prior_prob < 1.0)) {
        throw std::invalid_argument("selector: prior_prob must lie in (0, 1)");
    }
}

Vector SelectorState::probabilities() const {
    return gate_logits.unaryExpr([](double x) { return guard(sigmoid(x)); });
}

SelectorState init_selector(std::size_t regions, double prior_prob, double temperature) {
    SelectorState state;
    state.gate_logits = Vector::Zero(static_cast<Eigen::Index>(regions));
    state.prior_prob = prior_prob;
    state.temperature = temperature;
    state.validate();
    return state;
}

double relaxed_bernoulli_sample(double z, double u, double r) {
    require_open_unit(z, "z");
    require_open_unit(u, "u");
    if (!(r > 0.0)) {
        throw std::domain_error("relaxation temperature must be > 0");
    }
    return sigmoid((std::log(z) - std::log1p(-z) + std::log(u) - std::log1p(-u)) / r);
}

Vector mask_from_noise(const SelectorState& state, const Vector& noise) {
    if (noise.size() != state.gate_logits.size()) {
        throw ShapeError("mask_from_noise: noise length differs from region count");
    }
    Vector mask(noise.size());
    for (Eigen::Index i = 0; i < noise.size(); ++i) {
        mask[i] = sigmoid(relaxed_argument(state, i, noise[i]) / state.temperature);
    }
    return mask;
}

MaskSample sample_mask(const SelectorState& state, Rng& rng) {
    MaskSample sample;
    sample.noise.resize(state.gate_logits.size());
    for (Eigen::Index i = 0; i < sample.noise.size(); ++i) {
        sample.noise[i] = rng.uniform_open();
    }
    sample.values = mask_from_noise(state, sample.noise);
    return sample;
}

Vector deterministic_mask(const SelectorState& state) {
    return mask_from_noise(state, Vector::Constant(state.gate_logits.size(), 0.5));
}

Vector mask_grad_to_logits(const SelectorState& state, const Vector& noise, const Vector& grad_mask) {
    if (grad_mask.size() != state.gate_logits.size() || noise.size() != grad_mask.size()) {
        throw ShapeError("mask_grad_to_logits: length mismatch");
    }
    Vector out(grad_mask.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double raw = sigmoid(state.gate_logits[i]);
        // The guard clamp has zero slope outside its interval.
        const double dz_dlogit = (raw > kProbGuard && raw < 1.0 - kProbGuard) ? 1.0 : 0.0;
        const double m = sigmoid(relaxed_argument(state, i, noise[i]) / state.temperature);
        out[i] = grad_mask[i] * m * (1.0 - m) / state.temperature * dz_dlogit;
    }
    return out;
}

Tensor2 apply_mask(const Tensor2& embeddings, const Vector& mask) {
    if (mask.size() != embeddings.rows()) {
        throw ShapeError("apply_mask: mask length differs from node count");
    }
    return mask.asDiagonal() * embeddings;
}

double bernoulli_kl(const Vector& z, double s) {
    require_open_unit(s, "prior s");
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double p = z[i];
        require_open_unit(p, "z");
        total += p * (std::log(p) - std::log(s)) + (1.0 - p) * (std::log1p(-p) - std::log1p(-s));
    }
    return std::max(total, 0.0);
}

Vector bernoulli_kl_grad_logits(const SelectorState& state) {
    const double prior_logit = logit(state.prior_prob);
    Vector out(state.gate_logits.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double raw = sigmoid(state.gate_logits[i]);
        if (!(raw > kProbGuard && raw < 1.0 - kProbGuard)) {
            out[i] = 0.0;
            continue;
        }
        // dKL/dz = logit(z) - logit(s); dz/dlogit = z (1 - z).
        out[i] = (logit(raw) - prior_logit) * raw * (1.0 - raw);
    }
    return out;
}

std::vector<Biomarker> top_k_biomarkers(const Vector& z, std::size_t k,
                                        const std::vector<std::string>& region_names) {
    const auto n = static_cast<std::size_t>(z.size());
    if (k > n) {
        throw std::invalid_argument("top_k_biomarkers: k exceeds region count");
    }
    if (!region_names.empty() && region_names.size() != n) {
        throw ShapeError("top_k_biomarkers: region_names length differs from region count");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&z](std::size_t a, std::size_t b) { return z[a] > z[b]; });
    std::vector<Biomarker> out;
    out.reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
        const auto idx = order[r];
        out.push_back({r + 1, idx, z[idx], region_names.empty() ? std::string{} : region_names[idx]});
    }
    return out;
}

std::vector<Biomarker> top_k_biomarkers(const SelectorState& state, std::size_t k,
                                        const std::vector<std::string>& region_names) {
    return top_k_biomarkers(state.probabilities(), k, region_names);
}

nlohmann::json biomarkers_to_json(const std::vector<Biomarker>& markers) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : markers) {
        out.push_back({{"rank", m.rank},
                       {"region_index", m.region_index},
                       {"region_name", m.region_name},
                       {"z_score", m.z_score}});
    }
    return out;
}

std::string biomarkers_to_csv(const std::vector<Biomarker>& markers) {
    std::ostringstream out;
    out.precision(17);
    out << "No.,ROI,region_index,z_score\n";
    for (const auto& m : markers) {
        out << m.rank << ',' << m.region_name << ',' << m.region_index << ',' << m.z_score << '\n';
    }
    return out.str();
}

}  // namespace fgsan
