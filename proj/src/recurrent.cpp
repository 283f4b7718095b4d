#include "intent_graph/recurrent.hpp"

#include <stdexcept>
#include <string>

namespace intent_graph {

Tensor gru_step(const GRUCellParams& p, const Tensor& x, const Tensor& h) {
    const std::size_t hidden = p.hidden_dim();
    if (x.rows() != 1 || h.rows() != 1 || h.cols() != hidden || x.cols() + hidden != p.w_update.rows()) {
        throw ShapeError("gru_step: x " + x.value().shape_string() + ", h " + h.value().shape_string() +
                         " do not match cell with input " + std::to_string(p.input_dim()) + ", hidden " +
                         std::to_string(hidden));
    }
    const Tensor xh = concat(x, h);
    const Tensor z = sigmoid(add(matmul(xh, p.w_update), p.b_update));
    const Tensor r = sigmoid(add(matmul(xh, p.w_reset), p.b_reset));
    const Tensor candidate = tanh(add(matmul(concat(x, hadamard(r, h)), p.w_candidate), p.b_candidate));
    return add(hadamard(one_minus(z), h), hadamard(z, candidate));
}

std::vector<Tensor> run_sequence(const GRUCellParams& p, std::span<const Tensor> inputs, const Tensor& h0) {
    std::vector<Tensor> states;
    states.reserve(inputs.size());
    Tensor h = h0;
    for (const Tensor& x : inputs) {
        h = gru_step(p, x, h);
        states.push_back(h);
    }
    return states;
}

std::vector<Tensor> prediction_rollout(const GRUCellParams& p, const Tensor& h_init, std::size_t horizon,
                                       const Readout& readout) {
    if (horizon < 1) throw std::invalid_argument("prediction_rollout: horizon must be at least 1");
    const Tensor zero_input = Tensor::zeros(1, p.input_dim());
    std::vector<Tensor> logits;
    logits.reserve(horizon);
    Tensor h = h_init;
    for (std::size_t t = 0; t < horizon; ++t) {
        h = gru_step(p, zero_input, h);
        logits.push_back(add(matmul(h, readout.weight), readout.bias));
    }
    return logits;
}

}  // namespace intent_graph
