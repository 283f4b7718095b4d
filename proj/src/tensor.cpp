#include "intent_graph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace intent_graph {

namespace {

std::string shapes(const char* op, const Matrix& a, const Matrix& b) {
    std::ostringstream os;
    os << op << ": incompatible shapes " << a.shape_string() << " and " << b.shape_string();
    return os.str();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.value().same_shape(b.value())) throw ShapeError(shapes(op, a.value(), b.value()));
}

void require_row(const char* op, const Tensor& a) {
    if (a.rows() != 1) throw ShapeError(std::string(op) + ": expected a row vector, got " + a.value().shape_string());
}

void accumulate(Matrix* dst, const Matrix& src) {
    if (dst == nullptr) return;
    for (std::size_t i = 0; i < src.data.size(); ++i) dst->data[i] += src.data[i];
}

// c += a * b
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            double* crow = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

// c += a * b^T
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
            c(i, j) += s;
        }
    }
}

// c += a^T * b
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    for (std::size_t k = 0; k < a.rows; ++k) {
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = a(k, i);
            if (aki == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            double* crow = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
}

template <typename F>
Matrix map(const Matrix& a, F f) {
    Matrix out(a.rows, a.cols);
    std::transform(a.data.begin(), a.data.end(), out.data.begin(), f);
    return out;
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
        throw ShapeError("Matrix: " + std::to_string(data.size()) + " values for shape (" + std::to_string(rows) +
                         "x" + std::to_string(cols) + ")");
    }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    m.rows = rows.size();
    m.cols = rows.size() == 0 ? 0 : rows.begin()->size();
    for (const auto& r : rows) {
        if (r.size() != m.cols) throw ShapeError("Matrix::from_rows: ragged rows");
        m.data.insert(m.data.end(), r.begin(), r.end());
    }
    return m;
}

Matrix Matrix::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Matrix(1, n, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1) throw ShapeError("item: tensor is " + value_.shape_string() + ", not scalar");
    return value_.data[0];
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::leaf(Matrix value) {
    Tensor t(std::move(value));
    t.tape_ = this;
    t.node_ = nodes_.size();
    t.generation_ = generation_;
    nodes_.push_back(Node{Matrix(t.rows(), t.cols()), {}, {}});
    return t;
}

Tensor Tape::record(Matrix value, std::initializer_list<const Tensor*> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Tensor* const>(inputs.begin(), inputs.size()), std::move(backward));
}

Tensor Tape::record(Matrix value, std::span<const Tensor* const> inputs, BackwardFn backward) {
    Tape* tape = nullptr;
    for (const Tensor* in : inputs) {
        if (in->tape_ == nullptr) continue;
        if (tape != nullptr && tape != in->tape_) throw TapeError("op mixes tensors from different tapes");
        tape = in->tape_;
    }
    Tensor out(std::move(value));
    if (tape == nullptr) return out;

    Node node;
    node.grad = Matrix(out.rows(), out.cols());
    node.inputs.reserve(inputs.size());
    for (const Tensor* in : inputs) node.inputs.push_back(in->tape_ ? tape->check(*in) : npos);
    node.backward = std::move(backward);

    out.tape_ = tape;
    out.node_ = tape->nodes_.size();
    out.generation_ = tape->generation_;
    tape->nodes_.push_back(std::move(node));
    return out;
}

std::size_t Tape::check(const Tensor& t) const {
    if (t.tape_ != this) throw TapeError("tensor belongs to a different tape");
    if (t.generation_ != generation_ || t.node_ >= nodes_.size()) throw TapeError("tensor refers to a reset tape");
    return t.node_;
}

void Tape::backward(const Tensor& loss) {
    if (loss.rows() != 1 || loss.cols() != 1) {
        throw ShapeError("backward: loss must be scalar, got " + loss.value().shape_string());
    }
    if (loss.tape_ == nullptr) throw TapeError("backward: loss is not on a tape");
    const std::size_t root = check(loss);
    if (consumed_) throw TapeError("backward: tape already consumed; call reset() first");
    consumed_ = true;

    nodes_[root].grad.data[0] = 1.0;
    std::vector<Matrix*> slots;
    for (std::size_t i = root + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.backward) continue;
        slots.clear();
        for (std::size_t in : node.inputs) slots.push_back(in == npos ? nullptr : &nodes_[in].grad);
        node.backward(node.grad, slots);
    }
}

const Matrix& Tape::grad(const Tensor& t) const {
    return nodes_[check(t)].grad;
}

void Tape::reset() {
    nodes_.clear();
    ++generation_;
    consumed_ = false;
}

// ---------------------------------------------------------------------------
// Ops

double sigmoid(double x) {
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    return std::clamp(s, lo, hi);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw ShapeError(shapes("matmul", a.value(), b.value()));
    Matrix out(a.rows(), b.cols());
    gemm_acc(a.value(), b.value(), out);
    return Tape::record(std::move(out), {&a, &b},
                        [av = a.value(), bv = b.value()](const Matrix& g, std::span<Matrix* const> in) {
                            if (in[0]) gemm_nt_acc(g, bv, *in[0]);
                            if (in[1]) gemm_tn_acc(av, g, *in[1]);
                        });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
    return Tape::record(std::move(out), {&a, &b}, [](const Matrix& g, std::span<Matrix* const> in) {
        accumulate(in[0], g);
        accumulate(in[1], g);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
    return Tape::record(std::move(out), {&a, &b}, [](const Matrix& g, std::span<Matrix* const> in) {
        accumulate(in[0], g);
        if (in[1]) {
            for (std::size_t i = 0; i < g.size(); ++i) in[1]->data[i] -= g.data[i];
        }
    });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape("hadamard", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
    return Tape::record(std::move(out), {&a, &b},
                        [av = a.value(), bv = b.value()](const Matrix& g, std::span<Matrix* const> in) {
                            for (std::size_t i = 0; i < g.size(); ++i) {
                                if (in[0]) in[0]->data[i] += g.data[i] * bv.data[i];
                                if (in[1]) in[1]->data[i] += g.data[i] * av.data[i];
                            }
                        });
}

Tensor scale(const Tensor& a, double s) {
    return Tape::record(map(a.value(), [s](double x) { return x * s; }), {&a},
                        [s](const Matrix& g, std::span<Matrix* const> in) {
                            for (std::size_t i = 0; i < g.size(); ++i) in[0]->data[i] += s * g.data[i];
                        });
}

Tensor one_minus(const Tensor& a) {
    return Tape::record(map(a.value(), [](double x) { return 1.0 - x; }), {&a},
                        [](const Matrix& g, std::span<Matrix* const> in) {
                            for (std::size_t i = 0; i < g.size(); ++i) in[0]->data[i] -= g.data[i];
                        });
}

Tensor relu(const Tensor& a) {
    return Tape::record(map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {&a},
                        [av = a.value()](const Matrix& g, std::span<Matrix* const> in) {
                            for (std::size_t i = 0; i < g.size(); ++i) {
                                if (av.data[i] > 0.0) in[0]->data[i] += g.data[i];
                            }
                        });
}

Tensor sigmoid(const Tensor& a) {
    Matrix out = map(a.value(), [](double x) { return sigmoid(x); });
    return Tape::record(out, {&a}, [out](const Matrix& g, std::span<Matrix* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = out.data[i];
            in[0]->data[i] += g.data[i] * s * (1.0 - s);
        }
    });
}

Tensor tanh(const Tensor& a) {
    Matrix out = map(a.value(), [](double x) { return std::tanh(x); });
    return Tape::record(out, {&a}, [out](const Matrix& g, std::span<Matrix* const> in) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double t = out.data[i];
            in[0]->data[i] += g.data[i] * (1.0 - t * t);
        }
    });
}

Tensor concat(const Tensor& a, const Tensor& b) {
    require_row("concat", a);
    require_row("concat", b);
    std::vector<double> values = a.value().data;
    values.insert(values.end(), b.value().data.begin(), b.value().data.end());
    const std::size_t p = a.cols();
    return Tape::record(Matrix::row(std::move(values)), {&a, &b},
                        [p](const Matrix& g, std::span<Matrix* const> in) {
                            for (std::size_t i = 0; i < g.cols; ++i) {
                                Matrix* dst = i < p ? in[0] : in[1];
                                if (dst) dst->data[i < p ? i : i - p] += g.data[i];
                            }
                        });
}

Tensor dot(const Tensor& a, const Tensor& b) {
    require_row("dot", a);
    require_row("dot", b);
    require_same_shape("dot", a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.cols(); ++i) s += a.value().data[i] * b.value().data[i];
    return Tape::record(Matrix(1, 1, s), {&a, &b},
                        [av = a.value(), bv = b.value()](const Matrix& g, std::span<Matrix* const> in) {
                            const double gs = g.data[0];
                            for (std::size_t i = 0; i < av.size(); ++i) {
                                if (in[0]) in[0]->data[i] += gs * bv.data[i];
                                if (in[1]) in[1]->data[i] += gs * av.data[i];
                            }
                        });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.value().data) s += v;
    return Tape::record(Matrix(1, 1, s), {&a}, [](const Matrix& g, std::span<Matrix* const> in) {
        for (double& v : in[0]->data) v += g.data[0];
    });
}

Tensor mean_rows(const Tensor& a) {
    if (a.rows() == 0) throw ShapeError("mean_rows: empty input");
    Matrix out(1, a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) out.data[c] += a(r, c);
    }
    const double inv = 1.0 / static_cast<double>(a.rows());
    for (double& v : out.data) v *= inv;
    return Tape::record(std::move(out), {&a}, [inv](const Matrix& g, std::span<Matrix* const> in) {
        Matrix& dst = *in[0];
        for (std::size_t r = 0; r < dst.rows; ++r) {
            for (std::size_t c = 0; c < dst.cols; ++c) dst(r, c) += g.data[c] * inv;
        }
    });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.rows()) {
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + a.value().shape_string());
    }
    const std::size_t cols = a.cols();
    std::vector<double> values(a.value().data.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                               a.value().data.begin() + static_cast<std::ptrdiff_t>(end * cols));
    return Tape::record(Matrix(end - begin, cols, std::move(values)), {&a},
                        [begin, cols](const Matrix& g, std::span<Matrix* const> in) {
                            for (std::size_t i = 0; i < g.size(); ++i) in[0]->data[begin * cols + i] += g.data[i];
                        });
}

Tensor stack_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("stack_rows: no inputs");
    const std::size_t cols = parts.front().cols();
    std::vector<const Tensor*> inputs;
    std::vector<std::size_t> offsets;
    std::vector<double> values;
    std::size_t rows = 0;
    for (const Tensor& p : parts) {
        if (p.cols() != cols) throw ShapeError(shapes("stack_rows", parts.front().value(), p.value()));
        inputs.push_back(&p);
        offsets.push_back(values.size());
        values.insert(values.end(), p.value().data.begin(), p.value().data.end());
        rows += p.rows();
    }
    return Tape::record(Matrix(rows, cols, std::move(values)), inputs,
                        [offsets](const Matrix& g, std::span<Matrix* const> in) {
                            for (std::size_t k = 0; k < in.size(); ++k) {
                                if (!in[k]) continue;
                                for (std::size_t i = 0; i < in[k]->size(); ++i) in[k]->data[i] += g.data[offsets[k] + i];
                            }
                        });
}

Tensor mean_of(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("mean_of: no inputs");
    std::vector<const Tensor*> inputs;
    Matrix out(parts.front().rows(), parts.front().cols());
    for (const Tensor& p : parts) {
        if (!p.value().same_shape(out)) throw ShapeError(shapes("mean_of", out, p.value()));
        inputs.push_back(&p);
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += p.value().data[i];
    }
    const double inv = 1.0 / static_cast<double>(parts.size());
    for (double& v : out.data) v *= inv;
    return Tape::record(std::move(out), inputs, [inv](const Matrix& g, std::span<Matrix* const> in) {
        for (Matrix* dst : in) {
            if (!dst) continue;
            for (std::size_t i = 0; i < g.size(); ++i) dst->data[i] += inv * g.data[i];
        }
    });
}

Tensor row_normalize(const Tensor& a) {
    const Matrix& av = a.value();
    std::vector<double> sums(av.rows, 0.0);
    for (std::size_t r = 0; r < av.rows; ++r) {
        for (std::size_t c = 0; c < av.cols; ++c) sums[r] += av(r, c);
        if (!(sums[r] > 0.0)) throw std::domain_error("row_normalize: non-positive row sum");
    }
    Matrix out(av.rows, av.cols);
    for (std::size_t r = 0; r < av.rows; ++r) {
        for (std::size_t c = 0; c < av.cols; ++c) out(r, c) = av(r, c) / sums[r];
    }
    return Tape::record(out, {&a}, [out, sums](const Matrix& g, std::span<Matrix* const> in) {
        Matrix& dst = *in[0];
        for (std::size_t r = 0; r < g.rows; ++r) {
            double gy = 0.0;
            for (std::size_t c = 0; c < g.cols; ++c) gy += g(r, c) * out(r, c);
            for (std::size_t c = 0; c < g.cols; ++c) dst(r, c) += (g(r, c) - gy) / sums[r];
        }
    });
}

Tensor symmetric_from_edges(const Tensor& values, std::size_t n,
                            std::span<const std::pair<std::size_t, std::size_t>> edges) {
    if (values.value().size() != edges.size()) {
        throw ShapeError("symmetric_from_edges: " + std::to_string(values.value().size()) + " values for " +
                         std::to_string(edges.size()) + " edges");
    }
    Matrix out = Matrix::identity(n);
    std::vector<std::pair<std::size_t, std::size_t>> e(edges.begin(), edges.end());
    for (std::size_t k = 0; k < e.size(); ++k) {
        const auto [i, j] = e[k];
        if (i >= n || j >= n || i == j) throw ShapeError("symmetric_from_edges: invalid edge");
        out(i, j) = values.value().data[k];
        out(j, i) = values.value().data[k];
    }
    return Tape::record(std::move(out), {&values}, [e](const Matrix& g, std::span<Matrix* const> in) {
        for (std::size_t k = 0; k < e.size(); ++k) {
            const auto [i, j] = e[k];
            in[0]->data[k] += g(i, j) + g(j, i);
        }
    });
}

Tensor bce_loss(const Tensor& logit, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("bce_loss: label must be 0 or 1, got " + std::to_string(label));
    const double z = logit.item();
    const double y = static_cast<double>(label);
    const double loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    return Tape::record(Matrix(1, 1, loss), {&logit}, [z, y](const Matrix& g, std::span<Matrix* const> in) {
        in[0]->data[0] += g.data[0] * (sigmoid(z) - y);
    });
}

}  // namespace intent_graph
