#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "intent_graph/tensor.hpp"

namespace intent_graph {

/// Gate weights act on the concatenated row [x, h] and have shape
/// (input_dim + hidden_dim) x hidden_dim; biases are 1 x hidden_dim.
struct GRUCellParams {
    Tensor w_update;
    Tensor w_reset;
    Tensor w_candidate;
    Tensor b_update;
    Tensor b_reset;
    Tensor b_candidate;

    std::size_t hidden_dim() const { return b_update.cols(); }
    std::size_t input_dim() const { return w_update.rows() - hidden_dim(); }
};

/// Linear readout hidden -> logit.
struct Readout {
    Tensor weight;  // hidden x 1
    Tensor bias;    // 1 x 1
};

/// One GRU step:
///   z  = sigmoid([x, h] W_z + b_z)
///   r  = sigmoid([x, h] W_r + b_r)
///   h~ = tanh([x, r*h] W_h + b_h)
///   h' = (1 - z) * h + z * h~
Tensor gru_step(const GRUCellParams& p, const Tensor& x, const Tensor& h);

/// Unrolls the cell over inputs from h0 and returns every hidden state.
std::vector<Tensor> run_sequence(const GRUCellParams& p, std::span<const Tensor> inputs, const Tensor& h0);

/// Runs the cell K steps on zero inputs starting from h_init and emits one
/// logit (1x1) per step. Throws std::invalid_argument when K < 1.
std::vector<Tensor> prediction_rollout(const GRUCellParams& p, const Tensor& h_init, std::size_t horizon,
                                       const Readout& readout);

}  // namespace intent_graph
