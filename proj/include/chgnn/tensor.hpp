#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "chgnn/errors.hpp"
#include "chgnn/rng.hpp"

namespace chgnn::diff {

// Dense row-major matrix of doubles participating in reverse-mode
// differentiation. Every operation records its inputs and a pull-back
// closure; backward() replays the tape in reverse topological order.
//
// All tensors are rank-2 (rows x cols); vectors are n x 1 or 1 x n and
// scalars are 1 x 1. Double precision throughout.

struct TensorNode {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // lazily allocated, same size as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Pulls this node's grad into its parents' grads.
    std::function<void(TensorNode&)> backprop;

    std::size_t size() const { return rows * cols; }
    bool has_grad() const { return !grad.empty(); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
    }
    double& at(std::size_t r, std::size_t c) { return value[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return value[r * cols + c]; }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor full(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
    static Tensor from_data(std::size_t rows, std::size_t cols, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const { return node_->rows; }
    std::size_t cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& value() const { return node_->value; }
    std::vector<double>& value() { return node_->value; }
    const std::vector<double>& grad() const { return node_->grad; }
    bool has_grad() const { return node_->has_grad(); }
    void zero_grad() { node_->grad.clear(); }

    double item() const;
    double at(std::size_t r, std::size_t c) const { return node_->at(r, c); }

    std::shared_ptr<TensorNode> node() const { return node_; }
    TensorNode* raw() const { return node_.get(); }

private:
    std::shared_ptr<TensorNode> node_;
};

// Row-sparse matrix used for large constant inputs (feature matrices).
// Not differentiable itself; sparse_matmul routes gradients to the dense
// right-hand side only.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> row_entries;

    static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense,
                                   std::size_t cols);
    std::size_t nnz() const;
};

// ---------------------------------------------------------------------------
// Primitives. Each checks shapes (ShapeError) and is differentiable w.r.t.
// its Tensor inputs unless stated otherwise.
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor sparse_matmul(const SparseMatrix& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor div(const Tensor& a, const Tensor& b);  // elementwise
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
// Broadcast-add a 1 x cols row vector to every row.
Tensor add_rowvec(const Tensor& a, const Tensor& v);
// Elementwise multiply by a constant (non-differentiable) matrix.
Tensor mul_constmat(const Tensor& a, const std::vector<double>& m);

Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

Tensor softmax_rows(const Tensor& a);
Tensor l2_normalize_rows(const Tensor& a);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor row_sum(const Tensor& a);   // rows x 1
Tensor col_sum(const Tensor& a);   // 1 x cols
Tensor row_mean(const Tensor& a);  // rows x 1
Tensor col_mean(const Tensor& a);  // 1 x cols

Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& idx);
// Picks a[r_k, c_k] for each k; returns k x 1.
Tensor gather_elems(const Tensor& a, const std::vector<std::size_t>& row_idx,
                    const std::vector<std::size_t>& col_idx);

// log sum_j exp(scale * a[i, j]) per row (rows x 1) / per column (cols x 1).
Tensor logsumexp_rows(const Tensor& a, double scale = 1.0);
Tensor logsumexp_cols(const Tensor& a, double scale = 1.0);

// Mean of the rows of `a` listed in each group; a group may not be empty
// unless allow_empty, in which case its output row is zero.
Tensor group_mean_rows(const Tensor& a, const std::vector<std::vector<std::size_t>>& groups,
                       bool allow_empty = false);
// out[i] = sum over (row, weight) in lists[i] of weight * a[row]; the
// weights are constants.
Tensor weighted_gather_sum_rows(const Tensor& a,
                                const std::vector<std::vector<std::pair<std::size_t, double>>>& lists);
// Scale row i of `a` by s[i] (s is rows x 1).
Tensor scale_rows(const Tensor& a, const Tensor& s);

Tensor inner_product(const Tensor& a, const Tensor& b);  // scalar
Tensor mse(const Tensor& a, const Tensor& b);            // scalar mean squared error

// ---------------------------------------------------------------------------
// Sampling and initialization
// ---------------------------------------------------------------------------

// Rows of softmax((logits + Gumbel noise) / temperature). With hard=true the
// forward value of each row is the one-hot argmax while the gradient flows
// through the soft relaxation (straight-through). Noise may be supplied
// explicitly for reproducible re-evaluation.
Tensor gumbel_softmax_sample(const Tensor& logits, double temperature, bool hard, RngState& rng);
Tensor gumbel_softmax_sample_with_noise(const Tensor& logits, double temperature, bool hard,
                                        const std::vector<double>& noise);

// Uniform +-sqrt(6 / (rows + cols)), requires_grad = true.
Tensor glorot_init(std::size_t rows, std::size_t cols, RngState& rng);

// ---------------------------------------------------------------------------
// Reverse pass
// ---------------------------------------------------------------------------

// Populates grads of every requires_grad tensor reachable from `loss`.
// `loss` must be scalar. Repeated calls accumulate.
void backward(const Tensor& loss);

}  // namespace chgnn::diff
