#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "intent_graph/random.hpp"
#include "intent_graph/tensor.hpp"

namespace intent_graph {

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
};

/// Named parameters in insertion order. Insertion order is the canonical
/// order for initialization, checkpoints and optimizer state.
class ParameterStore {
public:
    Parameter& add(std::string name, Matrix value);
    /// Adds a weight drawn from uniform(-1/sqrt(rows), 1/sqrt(rows)).
    Parameter& add_uniform(std::string name, std::size_t rows, std::size_t cols, Rng& rng);
    Parameter& add_zeros(std::string name, std::size_t rows, std::size_t cols);

    bool contains(std::string_view name) const;
    Parameter& at(std::string_view name);
    const Parameter& at(std::string_view name) const;

    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();
    double grad_norm() const;

private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Exposes a store's parameters as tensors for one forward pass.
///
/// With a tape, each parameter becomes a tape leaf on first use; without one,
/// parameters are plain constants and the forward pass records nothing.
class ParameterBinding {
public:
    explicit ParameterBinding(const ParameterStore& store, Tape* tape = nullptr) : store_(store), tape_(tape) {}

    const Tensor& operator[](std::string_view name);

    /// Adds scale * d(loss)/d(param) into store.grad for every bound
    /// parameter. Requires a tape that has been run backward.
    void accumulate_grads(ParameterStore& store, double scale = 1.0) const;

    Tape* tape() const { return tape_; }

private:
    const ParameterStore& store_;
    Tape* tape_;
    std::unordered_map<std::string, Tensor> bound_;
};

}  // namespace intent_graph
