#ifndef FGSAN_NUMCORE_HPP
#define FGSAN_NUMCORE_HPP

// Dense numerics shared by every module: row-major matrices, the handful of
// elementwise nonlinearities the model uses, masked softmax, and the
// central-difference gradient checker that every backward pass is held to.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fgsan {

/// Row-major dense matrix of doubles. Storage is contiguous, rows() * cols().
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Thrown for shape mismatches and other violated preconditions.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a forward or backward pass produces NaN/Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double sigmoid(double x);
/// log(p / (1 - p)); p must lie in (0, 1).
double logit(double p);
/// log(1 + exp(x)) without overflow.
double softplus(double x);

enum class Activation { tanh, relu, identity, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation act);

double activate(Activation act, double x);
/// Derivative expressed through the pre-activation value.
double activate_grad(Activation act, double x);
/// The same derivative written in terms of y = activate(act, x).
double activate_grad_from_output(Activation act, double y);

void apply_activation(Activation act, Tensor2& values);

/// Softmax over the entries where mask is true; masked entries come out 0.
/// Throws ShapeError on length mismatch and std::domain_error("empty
/// neighborhood") when no entry is unmasked.
Vector masked_softmax(const Vector& logits, const std::vector<bool>& mask);

/// Same as above over one row of a dense logits matrix / boolean mask; writes
/// the result into `out` (same row length). Used by the attention layers.
void masked_softmax_row(std::span<const double> logits, std::span<const bool> mask,
                        std::span<double> out);

bool all_finite(const Tensor2& t);
bool all_finite(const Vector& v);

/// A named, contiguous block of trainable values. `decay` marks whether the
/// block takes decoupled weight decay.
struct ParamGroup {
    std::string name;
    std::span<double> values;
    bool decay = true;
};

/// Ordered view over all trainable blocks of a parameter set. Gradient sets
/// expose the same layout so the two can be walked in lockstep.
using ParamRegistry = std::vector<ParamGroup>;

/// Checks that two registries have identical names and block sizes.
void require_same_layout(const ParamRegistry& a, const ParamRegistry& b);

struct GroupGradError {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    bool non_differentiable = false;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<GroupGradError> groups;
    bool non_differentiable = false;

    bool passed(double tolerance) const { return !non_differentiable && max_rel_error < tolerance; }
};

/// Compares analytic gradients against central differences.
///
/// `loss` is re-evaluated after perturbing each entry of `params` in place by
/// +/- epsilon; the entry is restored afterwards. Relative error is
/// |analytic - numeric| / max(1, |numeric|). An entry whose one-sided
/// differences disagree by more than 10% of max(1, |numeric|) is flagged as
/// a kink and marks the report non-differentiable.
///
/// Throws std::invalid_argument for epsilon outside [1e-6, 1e-3] and
/// NumericError if the loss is ever non-finite.
GradCheckReport finite_diff_check(const std::function<double()>& loss, ParamRegistry& params,
                                  const ParamRegistry& analytic, double epsilon = 1e-4);

}  // namespace fgsan

#endif  // FGSAN_NUMCORE_HPP
