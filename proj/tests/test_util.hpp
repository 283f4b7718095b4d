#pragma once

#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "intent_graph/gradcheck.hpp"
#include "intent_graph/random.hpp"
#include "intent_graph/tensor.hpp"

namespace intent_graph::testing {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

/// Compares tape gradients of a scalar-valued f against central differences
/// for every input. Returns the worst relative error.
inline double op_gradcheck(const std::function<Tensor(std::vector<Tensor>&)>& f, const std::vector<Matrix>& inputs,
                           double h = 1e-5) {
    Tape tape;
    std::vector<Tensor> leaves;
    for (const Matrix& m : inputs) leaves.push_back(tape.leaf(m));
    const Tensor out = f(leaves);
    tape.backward(out);

    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto g = [&](const Matrix& x) {
            std::vector<Tensor> consts;
            for (std::size_t j = 0; j < inputs.size(); ++j) consts.emplace_back(j == k ? x : inputs[j]);
            return f(consts).item();
        };
        const Matrix numeric = numeric_gradient(g, inputs[k], h);
        const Matrix& analytic = tape.grad(leaves[k]);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            worst = std::max(worst, relative_error(analytic.data[i], numeric.data[i]));
        }
    }
    return worst;
}

inline void expect_matrix_near(const Matrix& actual, const Matrix& expected, double tol) {
    ASSERT_EQ(actual.rows, expected.rows);
    ASSERT_EQ(actual.cols, expected.cols);
    for (std::size_t i = 0; i < actual.size(); ++i) EXPECT_NEAR(actual.data[i], expected.data[i], tol) << "at " << i;
}

}  // namespace intent_graph::testing
