#include "intent_graph/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace intent_graph {

Parameter& ParameterStore::add(std::string name, Matrix value) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    index_.emplace(name, params_.size());
    Matrix grad(value.rows, value.cols);
    params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad)});
    return params_.back();
}

Parameter& ParameterStore::add_uniform(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-bound, bound);
    return add(std::move(name), std::move(m));
}

Parameter& ParameterStore::add_zeros(std::string name, std::size_t rows, std::size_t cols) {
    return add(std::move(name), Matrix(rows, cols));
}

bool ParameterStore::contains(std::string_view name) const {
    return index_.contains(std::string(name));
}

Parameter& ParameterStore::at(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
    return params_[it->second];
}

const Parameter& ParameterStore::at(std::string_view name) const {
    return const_cast<ParameterStore*>(this)->at(name);
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

double ParameterStore::grad_norm() const {
    double s = 0.0;
    for (const auto& p : params_) {
        for (double g : p.grad.data) s += g * g;
    }
    return std::sqrt(s);
}

const Tensor& ParameterBinding::operator[](std::string_view name) {
    std::string key(name);
    auto it = bound_.find(key);
    if (it != bound_.end()) return it->second;
    const Parameter& p = store_.at(key);
    Tensor t = tape_ ? tape_->leaf(p.value) : Tensor(p.value);
    return bound_.emplace(std::move(key), std::move(t)).first->second;
}

void ParameterBinding::accumulate_grads(ParameterStore& store, double scale) const {
    if (tape_ == nullptr) throw TapeError("accumulate_grads: binding has no tape");
    for (const auto& [name, tensor] : bound_) {
        const Matrix& g = tape_->grad(tensor);
        Matrix& dst = store.at(name).grad;
        for (std::size_t i = 0; i < g.size(); ++i) dst.data[i] += scale * g.data[i];
    }
}

}  // namespace intent_graph
