#ifndef FGSAN_SELECTOR_HPP
#define FGSAN_SELECTOR_HPP

#include "fgsan/numcore.hpp"
#include "fgsan/rng.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fgsan {

/// Probabilities z and noise u are clamped to [kProbGuard, 1 - kProbGuard]
/// before any log is taken.
inline constexpr double kProbGuard = 1e-6;

/// Global per-region gates: z = sigmoid(gate_logits), prior Ber(prior_prob),
/// relaxation temperature r.
struct SelectorState {
    Vector gate_logits;
    double prior_prob = 0.1;
    double temperature = 0.5;

    /// Throws std::invalid_argument unless temperature > 0 and prior in (0,1).
    void validate() const;
    /// Clamped gate probabilities.
    Vector probabilities() const;
};

SelectorState init_selector(std::size_t regions, double prior_prob, double temperature);

struct MaskSample {
    Vector values;
    Vector noise;
};

/// sigmoid((log z - log(1-z) + log u - log(1-u)) / r). Throws
/// std::domain_error if z or u is not strictly inside (0,1), or r <= 0.
double relaxed_bernoulli_sample(double z, double u, double r);

/// Draws u ~ U(0,1) per region and returns the relaxed mask with its noise.
MaskSample sample_mask(const SelectorState& state, Rng& rng);
/// Relaxed mask for an explicit noise vector.
Vector mask_from_noise(const SelectorState& state, const Vector& noise);
/// The u = 0.5 mask, sigmoid(logit(z) / r); used at evaluation time.
Vector deterministic_mask(const SelectorState& state);

/// d loss / d gate_logits given d loss / d mask for a mask built from `noise`.
Vector mask_grad_to_logits(const SelectorState& state, const Vector& noise, const Vector& grad_mask);

/// Scales row i of the embeddings by mask[i].
Tensor2 apply_mask(const Tensor2& embeddings, const Vector& mask);

/// sum_n z_n log(z_n / s) + (1 - z_n) log((1 - z_n) / (1 - s)).
/// Throws std::domain_error for arguments outside (0,1).
double bernoulli_kl(const Vector& z, double s);
/// Gradient of bernoulli_kl(sigmoid(logits), s) with respect to the logits.
Vector bernoulli_kl_grad_logits(const SelectorState& state);

struct Biomarker {
    std::size_t rank = 0;  // 1-based
    std::size_t region_index = 0;
    double z_score = 0.0;
    std::string region_name;
};

/// Regions sorted by z descending, ties broken by lower index. Throws
/// std::invalid_argument if k exceeds the region count.
std::vector<Biomarker> top_k_biomarkers(const Vector& z, std::size_t k,
                                        const std::vector<std::string>& region_names = {});
std::vector<Biomarker> top_k_biomarkers(const SelectorState& state, std::size_t k,
                                        const std::vector<std::string>& region_names = {});

nlohmann::json biomarkers_to_json(const std::vector<Biomarker>& markers);
/// "No.,ROI,region_index,z_score" rows, one per biomarker.
std::string biomarkers_to_csv(const std::vector<Biomarker>& markers);

}  // namespace fgsan

#endif  // FGSAN_SELECTOR_HPP
