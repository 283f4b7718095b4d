#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace intent_graph {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Dense row-major matrix of doubles. Plain value type, no gradient state.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix row(std::vector<double> values);
    static Matrix identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_string() const;

    bool operator==(const Matrix&) const = default;
};

class Tape;

/// A matrix value optionally attached to a gradient tape.
///
/// Tensors built from plain values are constants and never carry a tape node.
/// Parameters become tape leaves through Tape::leaf, and every op that touches
/// a taped input records a node on that same tape. The tape must outlive every
/// tensor that refers to it.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Matrix value) : value_(std::move(value)) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
        : value_(rows, cols, std::move(values)) {}

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(Matrix(rows, cols)); }
    static Tensor scalar(double v) { return Tensor(Matrix(1, 1, v)); }
    static Tensor row(std::vector<double> values) { return Tensor(Matrix::row(std::move(values))); }

    std::size_t rows() const { return value_.rows; }
    std::size_t cols() const { return value_.cols; }
    const Matrix& value() const { return value_; }
    double operator()(std::size_t r, std::size_t c) const { return value_(r, c); }
    /// Value of a 1x1 tensor.
    double item() const;

    bool is_constant() const { return tape_ == nullptr; }
    Tape* tape() const { return tape_; }

private:
    friend class Tape;
    Matrix value_;
    Tape* tape_ = nullptr;
    std::size_t node_ = 0;
    std::size_t generation_ = 0;
};

/// Linear record of differentiable operations for reverse-mode accumulation.
///
/// Nodes are appended in execution order, so the record is topologically
/// sorted by construction. A tape can be run backward once; call reset()
/// before recording a new computation.
class Tape {
public:
    /// Receives the output gradient and one slot per input; a slot is null
    /// when that input is a constant.
    using BackwardFn = std::function<void(const Matrix& grad_out, std::span<Matrix* const> input_grads)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor leaf(Matrix value);

    /// Records an op result. Returns a constant when no input is taped.
    static Tensor record(Matrix value, std::initializer_list<const Tensor*> inputs, BackwardFn backward);
    static Tensor record(Matrix value, std::span<const Tensor* const> inputs, BackwardFn backward);

    void backward(const Tensor& loss);
    const Matrix& grad(const Tensor& t) const;

    void reset();
    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

private:
    struct Node {
        Matrix grad;
        std::vector<std::size_t> inputs;  // npos for constant inputs
        BackwardFn backward;
    };
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t check(const Tensor& t) const;

    std::vector<Node> nodes_;
    std::size_t generation_ = 1;
    bool consumed_ = false;
};

// Differentiable ops. All are pure in their inputs.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// 1 - a, elementwise.
Tensor one_minus(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
/// Concatenates two row vectors: [1xp] ++ [1xq] -> [1x(p+q)].
Tensor concat(const Tensor& a, const Tensor& b);
/// Inner product of two row vectors of equal length, as a 1x1 tensor.
Tensor dot(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& a);
/// Column-wise mean over rows: [mxn] -> [1xn]. Requires m >= 1.
Tensor mean_rows(const Tensor& a);
/// Rows [begin, end) of a.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
/// Vertically stacks tensors with equal column counts.
Tensor stack_rows(std::span<const Tensor> parts);
/// Elementwise mean of equally shaped tensors.
Tensor mean_of(std::span<const Tensor> parts);
/// Divides each row by its sum. Row sums must be positive.
Tensor row_normalize(const Tensor& a);
/// Symmetric n x n matrix with unit diagonal; entry (i,j) and (j,i) take
/// the k-th element of values (any shape, row-major) for edges[k] = (i,j).
/// Entries not listed are zero.
Tensor symmetric_from_edges(const Tensor& values, std::size_t n,
                            std::span<const std::pair<std::size_t, std::size_t>> edges);
/// Binary cross-entropy of a logit against a {0,1} label, in the stable
/// max(z,0) - z*y + log(1 + exp(-|z|)) form.
Tensor bce_loss(const Tensor& logit, int label);

/// Plain-value logistic function clamped to the open interval (0,1).
double sigmoid(double x);

}  // namespace intent_graph
