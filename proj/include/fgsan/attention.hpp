#ifndef FGSAN_ATTENTION_HPP
#define FGSAN_ATTENTION_HPP

#include "fgsan/graphdata.hpp"
#include "fgsan/numcore.hpp"
#include "fgsan/rng.hpp"

#include <string>
#include <vector>

namespace fgsan {

/// One learnable scalar per shortest-path bucket (max_bucket + 1 entries),
/// shared by every layer of the encoder.
struct SpatialEncodingTable {
    Vector bias;

    int max_bucket() const { return static_cast<int>(bias.size()) - 1; }
};

/// W (d_in x d_out) and the attention vector c (2 * d_out): the first half
/// scores the attending node, the second half the attended neighbor.
struct AttentionLayerParams {
    Tensor2 weight;
    Vector attn_vector;

    Eigen::Index in_dim() const { return weight.rows(); }
    Eigen::Index out_dim() const { return weight.cols(); }
};

struct EncoderParams {
    std::vector<AttentionLayerParams> layers;
    SpatialEncodingTable spatial;
    Activation activation = Activation::tanh;

    Eigen::Index in_dim() const { return layers.front().in_dim(); }
    Eigen::Index out_dim() const { return layers.back().out_dim(); }

    /// Throws ShapeError if layer widths do not chain or vectors are misshapen.
    void validate() const;
};

/// Glorot-uniform W, zero attention vectors and zero spatial biases.
/// `widths` lists d_0 (input) through d_L.
EncoderParams init_encoder(const std::vector<Eigen::Index>& widths, int max_bucket,
                           Activation activation, Rng& rng);

/// Zero-valued copy with identical shapes (gradient accumulator).
EncoderParams zeros_like(const EncoderParams& params);

/// Appends "encoder.layer{l}.weight", "encoder.layer{l}.attn" and
/// "encoder.spatial" groups.
void append_registry(EncoderParams& params, ParamRegistry& registry);

/// alpha[i][j] = softmax over j in N(i) of
///   tanh( (h_i W) . c[:d] + (h_j W) . c[d:] + spatial[bucket(i, j)] ),
/// zero outside the neighborhood.
Tensor2 attention_coefficients(const Tensor2& h, const AttentionLayerParams& params,
                               const StaticGraphView& view, const SpatialEncodingTable& spatial);

/// h'_i = act( sum_j alpha[i][j] (h_j W) ).
Tensor2 layer_forward(const Tensor2& h, const Tensor2& alpha, const AttentionLayerParams& params,
                      Activation activation);

/// Intermediate values of one layer, kept for the backward pass.
struct LayerTrace {
    Tensor2 input;      // h       (N x d_in)
    Tensor2 projected;  // h W     (N x d_out)
    Tensor2 scores;     // tanh(.) (N x N), valid on the neighborhood only
    Tensor2 alpha;      //         (N x N)
    Tensor2 preact;     // alpha (h W)
    Tensor2 output;     // act(preact)
};

struct EncoderTrace {
    std::vector<LayerTrace> layers;
    Tensor2 output;
};

Tensor2 encoder_forward(const Tensor2& x, const StaticGraphView& view, const EncoderParams& params);
const Tensor2& encoder_forward(const Tensor2& x, const StaticGraphView& view,
                               const EncoderParams& params, EncoderTrace& trace);

/// Accumulates d loss / d params into `grads` given d loss / d output.
void encoder_backward(const EncoderTrace& trace, const StaticGraphView& view,
                      const EncoderParams& params, const Tensor2& grad_output, EncoderParams& grads);

}  // namespace fgsan

#endif  // FGSAN_ATTENTION_HPP
