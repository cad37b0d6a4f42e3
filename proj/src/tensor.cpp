#include "chgnn/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace chgnn::diff {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

MapC cmap(const TensorNode& n) { return MapC(n.value.data(), n.rows, n.cols); }
MapM vmap(TensorNode& n) { return MapM(n.value.data(), n.rows, n.cols); }
MapC gmap_c(const TensorNode& n) { return MapC(n.grad.data(), n.rows, n.cols); }
MapM gmap(TensorNode& n) {
    n.ensure_grad();
    return MapM(n.grad.data(), n.rows, n.cols);
}

std::shared_ptr<TensorNode> make_node(std::size_t rows, std::size_t cols,
                                      std::vector<std::shared_ptr<TensorNode>> parents) {
    auto n = std::make_shared<TensorNode>();
    n->rows = rows;
    n->cols = cols;
    n->value.assign(rows * cols, 0.0);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    return n;
}

void check(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

std::string dim_str(const TensorNode& n) {
    return std::to_string(n.rows) + "x" + std::to_string(n.cols);
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto n = make_node(rows, cols, {});
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
    auto n = make_node(rows, cols, {});
    n->value.assign(rows * cols, v);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::from_data(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad) {
    if (data.size() != rows * cols)
        throw ShapeError("from_data: buffer size " + std::to_string(data.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    auto n = make_node(rows, cols, {});
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data(1, 1, {v}, requires_grad);
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item: tensor is " + dim_str(*node_) + ", not scalar");
    return node_->value[0];
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense,
                                      std::size_t cols) {
    SparseMatrix s;
    s.rows = dense.size();
    s.cols = cols;
    s.row_entries.resize(s.rows);
    for (std::size_t r = 0; r < s.rows; ++r) {
        if (dense[r].size() != cols)
            throw ShapeError("SparseMatrix: row " + std::to_string(r) + " has " +
                             std::to_string(dense[r].size()) + " entries, expected " +
                             std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c)
            if (dense[r][c] != 0.0) s.row_entries[r].emplace_back(c, dense[r][c]);
    }
    return s;
}

std::size_t SparseMatrix::nnz() const {
    std::size_t n = 0;
    for (const auto& r : row_entries) n += r.size();
    return n;
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check(a.cols() == b.rows(),
          "matmul: " + dim_str(*a.raw()) + " x " + dim_str(*b.raw()));
    auto n = make_node(a.rows(), b.cols(), {a.node(), b.node()});
    vmap(*n).noalias() = cmap(*a.raw()) * cmap(*b.raw());
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        auto& pb = *out.parents[1];
        auto g = gmap_c(out);
        if (pa.requires_grad) gmap(pa).noalias() += g * cmap(pb).transpose();
        if (pb.requires_grad) gmap(pb).noalias() += cmap(pa).transpose() * g;
    };
    return Tensor(n);
}

Tensor sparse_matmul(const SparseMatrix& a, const Tensor& b) {
    check(a.cols == b.rows(), "sparse_matmul: " + std::to_string(a.rows) + "x" +
                                  std::to_string(a.cols) + " x " + dim_str(*b.raw()));
    auto n = make_node(a.rows, b.cols(), {b.node()});
    const auto& bv = b.value();
    const std::size_t w = b.cols();
    for (std::size_t r = 0; r < a.rows; ++r) {
        double* out = n->value.data() + r * w;
        for (const auto& [c, v] : a.row_entries[r]) {
            const double* src = bv.data() + c * w;
            for (std::size_t k = 0; k < w; ++k) out[k] += v * src[k];
        }
    }
    // dB += A^T * dC, computed row by row over A's entries.
    n->backprop = [a](TensorNode& out) {
        auto& pb = *out.parents[0];
        if (!pb.requires_grad) return;
        pb.ensure_grad();
        const std::size_t w = pb.cols;
        for (std::size_t r = 0; r < a.rows; ++r) {
            const double* g = out.grad.data() + r * w;
            for (const auto& [c, v] : a.row_entries[r]) {
                double* dst = pb.grad.data() + c * w;
                for (std::size_t k = 0; k < w; ++k) dst[k] += v * g[k];
            }
        }
    };
    return Tensor(n);
}

Tensor transpose(const Tensor& a) {
    auto n = make_node(a.cols(), a.rows(), {a.node()});
    vmap(*n) = cmap(*a.raw()).transpose();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (pa.requires_grad) gmap(pa) += gmap_c(out).transpose();
    };
    return Tensor(n);
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    check(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": " + dim_str(*a.raw()) + " vs " + dim_str(*b.raw()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto n = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    vmap(*n) = cmap(*a.raw()) + cmap(*b.raw());
    n->backprop = [](TensorNode& out) {
        if (out.parents[0]->requires_grad) gmap(*out.parents[0]) += gmap_c(out);
        if (out.parents[1]->requires_grad) gmap(*out.parents[1]) += gmap_c(out);
    };
    return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto n = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    vmap(*n) = cmap(*a.raw()) - cmap(*b.raw());
    n->backprop = [](TensorNode& out) {
        if (out.parents[0]->requires_grad) gmap(*out.parents[0]) += gmap_c(out);
        if (out.parents[1]->requires_grad) gmap(*out.parents[1]) -= gmap_c(out);
    };
    return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto n = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    vmap(*n).array() = cmap(*a.raw()).array() * cmap(*b.raw()).array();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        auto& pb = *out.parents[1];
        if (pa.requires_grad) gmap(pa).array() += gmap_c(out).array() * cmap(pb).array();
        if (pb.requires_grad) gmap(pb).array() += gmap_c(out).array() * cmap(pa).array();
    };
    return Tensor(n);
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "div");
    auto n = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    vmap(*n).array() = cmap(*a.raw()).array() / cmap(*b.raw()).array();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        auto& pb = *out.parents[1];
        if (pa.requires_grad) gmap(pa).array() += gmap_c(out).array() / cmap(pb).array();
        if (pb.requires_grad)
            gmap(pb).array() -=
                gmap_c(out).array() * cmap(pa).array() / cmap(pb).array().square();
    };
    return Tensor(n);
}

Tensor add_scalar(const Tensor& a, double s) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    vmap(*n).array() = cmap(*a.raw()).array() + s;
    n->backprop = [](TensorNode& out) {
        if (out.parents[0]->requires_grad) gmap(*out.parents[0]) += gmap_c(out);
    };
    return Tensor(n);
}

Tensor mul_scalar(const Tensor& a, double s) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    vmap(*n) = cmap(*a.raw()) * s;
    n->backprop = [s](TensorNode& out) {
        if (out.parents[0]->requires_grad) gmap(*out.parents[0]) += gmap_c(out) * s;
    };
    return Tensor(n);
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    check(v.rows() == 1 && v.cols() == a.cols(),
          "add_rowvec: " + dim_str(*a.raw()) + " + " + dim_str(*v.raw()));
    auto n = make_node(a.rows(), a.cols(), {a.node(), v.node()});
    vmap(*n) = cmap(*a.raw());
    vmap(*n).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(v.value().data(), v.cols());
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        auto& pv = *out.parents[1];
        if (pa.requires_grad) gmap(pa) += gmap_c(out);
        if (pv.requires_grad) gmap(pv) += gmap_c(out).colwise().sum();
    };
    return Tensor(n);
}

Tensor mul_constmat(const Tensor& a, const std::vector<double>& m) {
    check(m.size() == a.size(), "mul_constmat: matrix size mismatch");
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    MapC mm(m.data(), a.rows(), a.cols());
    vmap(*n).array() = cmap(*a.raw()).array() * mm.array();
    n->backprop = [m](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        MapC mm(m.data(), out.rows, out.cols);
        gmap(pa).array() += gmap_c(out).array() * mm.array();
    };
    return Tensor(n);
}

Tensor exp_t(const Tensor& a) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    vmap(*n).array() = cmap(*a.raw()).array().exp();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (pa.requires_grad) gmap(pa).array() += gmap_c(out).array() * cmap(out).array();
    };
    return Tensor(n);
}

Tensor log_t(const Tensor& a) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    vmap(*n).array() = cmap(*a.raw()).array().log();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (pa.requires_grad) gmap(pa).array() += gmap_c(out).array() / cmap(pa).array();
    };
    return Tensor(n);
}

Tensor sigmoid(const Tensor& a) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    for (std::size_t i = 0; i < a.size(); ++i) {
        double x = a.value()[i];
        // Split by sign for stability at large |x|.
        n->value[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                             : std::exp(x) / (1.0 + std::exp(x));
    }
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        gmap(pa).array() +=
            gmap_c(out).array() * cmap(out).array() * (1.0 - cmap(out).array());
    };
    return Tensor(n);
}

Tensor relu(const Tensor& a) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    vmap(*n).array() = cmap(*a.raw()).array().max(0.0);
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        for (std::size_t i = 0; i < out.value.size(); ++i)
            if (pa.value[i] > 0.0) pa.grad[i] += out.grad[i];
    };
    return Tensor(n);
}

Tensor softmax_rows(const Tensor& a) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    const std::size_t w = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* src = a.value().data() + r * w;
        double* dst = n->value.data() + r * w;
        double mx = *std::max_element(src, src + w);
        double sum = 0.0;
        for (std::size_t c = 0; c < w; ++c) {
            dst[c] = std::exp(src[c] - mx);
            sum += dst[c];
        }
        for (std::size_t c = 0; c < w; ++c) dst[c] /= sum;
    }
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        const std::size_t w = out.cols;
        for (std::size_t r = 0; r < out.rows; ++r) {
            const double* y = out.value.data() + r * w;
            const double* g = out.grad.data() + r * w;
            double* dst = pa.grad.data() + r * w;
            double dot = 0.0;
            for (std::size_t c = 0; c < w; ++c) dot += y[c] * g[c];
            for (std::size_t c = 0; c < w; ++c) dst[c] += y[c] * (g[c] - dot);
        }
    };
    return Tensor(n);
}

Tensor l2_normalize_rows(const Tensor& a) {
    auto n = make_node(a.rows(), a.cols(), {a.node()});
    const std::size_t w = a.cols();
    std::vector<double> norms(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* src = a.value().data() + r * w;
        double s = 0.0;
        for (std::size_t c = 0; c < w; ++c) s += src[c] * src[c];
        double nr = std::max(std::sqrt(s), 1e-12);
        norms[r] = nr;
        double* dst = n->value.data() + r * w;
        for (std::size_t c = 0; c < w; ++c) dst[c] = src[c] / nr;
    }
    n->backprop = [norms](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        const std::size_t w = out.cols;
        for (std::size_t r = 0; r < out.rows; ++r) {
            const double* y = out.value.data() + r * w;
            const double* g = out.grad.data() + r * w;
            double* dst = pa.grad.data() + r * w;
            double dot = 0.0;
            for (std::size_t c = 0; c < w; ++c) dot += y[c] * g[c];
            for (std::size_t c = 0; c < w; ++c) dst[c] += (g[c] - dot * y[c]) / norms[r];
        }
    };
    return Tensor(n);
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

Tensor sum_all(const Tensor& a) {
    auto n = make_node(1, 1, {a.node()});
    n->value[0] = cmap(*a.raw()).sum();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (pa.requires_grad) gmap(pa).array() += out.grad[0];
    };
    return Tensor(n);
}

Tensor mean_all(const Tensor& a) {
    check(a.size() > 0, "mean_all: empty tensor");
    auto n = make_node(1, 1, {a.node()});
    n->value[0] = cmap(*a.raw()).mean();
    const double inv = 1.0 / static_cast<double>(a.size());
    n->backprop = [inv](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (pa.requires_grad) gmap(pa).array() += out.grad[0] * inv;
    };
    return Tensor(n);
}

Tensor row_sum(const Tensor& a) {
    auto n = make_node(a.rows(), 1, {a.node()});
    Eigen::Map<Eigen::VectorXd>(n->value.data(), a.rows()) = cmap(*a.raw()).rowwise().sum();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        gmap(pa).colwise() += Eigen::Map<const Eigen::VectorXd>(out.grad.data(), out.rows);
    };
    return Tensor(n);
}

Tensor col_sum(const Tensor& a) {
    auto n = make_node(1, a.cols(), {a.node()});
    Eigen::Map<Eigen::RowVectorXd>(n->value.data(), a.cols()) = cmap(*a.raw()).colwise().sum();
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        gmap(pa).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(out.grad.data(), out.cols);
    };
    return Tensor(n);
}

Tensor row_mean(const Tensor& a) {
    check(a.cols() > 0, "row_mean: zero columns");
    return mul_scalar(row_sum(a), 1.0 / static_cast<double>(a.cols()));
}

Tensor col_mean(const Tensor& a) {
    check(a.rows() > 0, "col_mean: zero rows");
    return mul_scalar(col_sum(a), 1.0 / static_cast<double>(a.rows()));
}

// ---------------------------------------------------------------------------
// Indexing and concatenation
// ---------------------------------------------------------------------------

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    check(a.cols() == b.cols(), "concat_rows: " + dim_str(*a.raw()) + " vs " + dim_str(*b.raw()));
    auto n = make_node(a.rows() + b.rows(), a.cols(), {a.node(), b.node()});
    std::copy(a.value().begin(), a.value().end(), n->value.begin());
    std::copy(b.value().begin(), b.value().end(), n->value.begin() + a.size());
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        auto& pb = *out.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += out.grad[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            const std::size_t off = pa.rows * pa.cols;
            for (std::size_t i = 0; i < pb.grad.size(); ++i) pb.grad[i] += out.grad[off + i];
        }
    };
    return Tensor(n);
}

Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx)
        if (i >= a.rows())
            throw ParamError("gather_rows: index " + std::to_string(i) + " out of range " +
                             std::to_string(a.rows()));
    auto n = make_node(idx.size(), a.cols(), {a.node()});
    const std::size_t w = a.cols();
    for (std::size_t k = 0; k < idx.size(); ++k)
        std::copy(a.value().begin() + idx[k] * w, a.value().begin() + (idx[k] + 1) * w,
                  n->value.begin() + k * w);
    n->backprop = [idx](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        const std::size_t w = out.cols;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double* g = out.grad.data() + k * w;
            double* dst = pa.grad.data() + idx[k] * w;
            for (std::size_t c = 0; c < w; ++c) dst[c] += g[c];
        }
    };
    return Tensor(n);
}

Tensor gather_elems(const Tensor& a, const std::vector<std::size_t>& row_idx,
                    const std::vector<std::size_t>& col_idx) {
    check(row_idx.size() == col_idx.size(), "gather_elems: index list length mismatch");
    for (std::size_t k = 0; k < row_idx.size(); ++k)
        if (row_idx[k] >= a.rows() || col_idx[k] >= a.cols())
            throw ParamError("gather_elems: index (" + std::to_string(row_idx[k]) + "," +
                             std::to_string(col_idx[k]) + ") out of range");
    auto n = make_node(row_idx.size(), 1, {a.node()});
    for (std::size_t k = 0; k < row_idx.size(); ++k)
        n->value[k] = a.at(row_idx[k], col_idx[k]);
    n->backprop = [row_idx, col_idx](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        for (std::size_t k = 0; k < row_idx.size(); ++k)
            pa.grad[row_idx[k] * pa.cols + col_idx[k]] += out.grad[k];
    };
    return Tensor(n);
}

// ---------------------------------------------------------------------------
// Log-sum-exp
// ---------------------------------------------------------------------------

Tensor logsumexp_rows(const Tensor& a, double scale) {
    check(a.cols() > 0, "logsumexp_rows: zero columns");
    auto n = make_node(a.rows(), 1, {a.node()});
    const std::size_t w = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* src = a.value().data() + r * w;
        double mx = scale * src[0];
        for (std::size_t c = 1; c < w; ++c) mx = std::max(mx, scale * src[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < w; ++c) sum += std::exp(scale * src[c] - mx);
        n->value[r] = mx + std::log(sum);
    }
    n->backprop = [scale](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        const std::size_t w = pa.cols;
        for (std::size_t r = 0; r < pa.rows; ++r) {
            const double g = out.grad[r];
            if (g == 0.0) continue;
            const double lse = out.value[r];
            const double* src = pa.value.data() + r * w;
            double* dst = pa.grad.data() + r * w;
            for (std::size_t c = 0; c < w; ++c)
                dst[c] += g * scale * std::exp(scale * src[c] - lse);
        }
    };
    return Tensor(n);
}

Tensor logsumexp_cols(const Tensor& a, double scale) {
    check(a.rows() > 0, "logsumexp_cols: zero rows");
    auto n = make_node(a.cols(), 1, {a.node()});
    const std::size_t w = a.cols();
    std::vector<double> mx(w, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* src = a.value().data() + r * w;
        for (std::size_t c = 0; c < w; ++c) mx[c] = std::max(mx[c], scale * src[c]);
    }
    std::vector<double> sum(w, 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* src = a.value().data() + r * w;
        for (std::size_t c = 0; c < w; ++c) sum[c] += std::exp(scale * src[c] - mx[c]);
    }
    for (std::size_t c = 0; c < w; ++c) n->value[c] = mx[c] + std::log(sum[c]);
    n->backprop = [scale](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        const std::size_t w = pa.cols;
        for (std::size_t r = 0; r < pa.rows; ++r) {
            const double* src = pa.value.data() + r * w;
            double* dst = pa.grad.data() + r * w;
            for (std::size_t c = 0; c < w; ++c) {
                const double g = out.grad[c];
                if (g == 0.0) continue;
                dst[c] += g * scale * std::exp(scale * src[c] - out.value[c]);
            }
        }
    };
    return Tensor(n);
}

// ---------------------------------------------------------------------------
// Incidence-structured aggregation
// ---------------------------------------------------------------------------

Tensor group_mean_rows(const Tensor& a, const std::vector<std::vector<std::size_t>>& groups,
                       bool allow_empty) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty() && !allow_empty)
            throw ParamError("group_mean_rows: empty group at index " + std::to_string(g));
        for (std::size_t r : groups[g])
            if (r >= a.rows())
                throw ParamError("group_mean_rows: row " + std::to_string(r) + " out of range");
    }
    auto n = make_node(groups.size(), a.cols(), {a.node()});
    const std::size_t w = a.cols();
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) continue;
        double* dst = n->value.data() + g * w;
        for (std::size_t r : groups[g]) {
            const double* src = a.value().data() + r * w;
            for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
        }
        const double inv = 1.0 / static_cast<double>(groups[g].size());
        for (std::size_t c = 0; c < w; ++c) dst[c] *= inv;
    }
    n->backprop = [groups](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        const std::size_t w = out.cols;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].empty()) continue;
            const double inv = 1.0 / static_cast<double>(groups[g].size());
            const double* grad = out.grad.data() + g * w;
            for (std::size_t r : groups[g]) {
                double* dst = pa.grad.data() + r * w;
                for (std::size_t c = 0; c < w; ++c) dst[c] += inv * grad[c];
            }
        }
    };
    return Tensor(n);
}

Tensor weighted_gather_sum_rows(
    const Tensor& a, const std::vector<std::vector<std::pair<std::size_t, double>>>& lists) {
    for (const auto& l : lists)
        for (const auto& [r, w_] : l) {
            (void)w_;
            if (r >= a.rows())
                throw ParamError("weighted_gather_sum_rows: row " + std::to_string(r) +
                                 " out of range");
        }
    auto n = make_node(lists.size(), a.cols(), {a.node()});
    const std::size_t w = a.cols();
    for (std::size_t i = 0; i < lists.size(); ++i) {
        double* dst = n->value.data() + i * w;
        for (const auto& [r, wt] : lists[i]) {
            const double* src = a.value().data() + r * w;
            for (std::size_t c = 0; c < w; ++c) dst[c] += wt * src[c];
        }
    }
    n->backprop = [lists](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (!pa.requires_grad) return;
        pa.ensure_grad();
        const std::size_t w = out.cols;
        for (std::size_t i = 0; i < lists.size(); ++i) {
            const double* g = out.grad.data() + i * w;
            for (const auto& [r, wt] : lists[i]) {
                double* dst = pa.grad.data() + r * w;
                for (std::size_t c = 0; c < w; ++c) dst[c] += wt * g[c];
            }
        }
    };
    return Tensor(n);
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
    check(s.rows() == a.rows() && s.cols() == 1,
          "scale_rows: scale is " + dim_str(*s.raw()) + " for " + dim_str(*a.raw()));
    auto n = make_node(a.rows(), a.cols(), {a.node(), s.node()});
    const std::size_t w = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double f = s.value()[r];
        const double* src = a.value().data() + r * w;
        double* dst = n->value.data() + r * w;
        for (std::size_t c = 0; c < w; ++c) dst[c] = f * src[c];
    }
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        auto& ps = *out.parents[1];
        const std::size_t w = out.cols;
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t r = 0; r < out.rows; ++r) {
                const double f = ps.value[r];
                const double* g = out.grad.data() + r * w;
                double* dst = pa.grad.data() + r * w;
                for (std::size_t c = 0; c < w; ++c) dst[c] += f * g[c];
            }
        }
        if (ps.requires_grad) {
            ps.ensure_grad();
            for (std::size_t r = 0; r < out.rows; ++r) {
                const double* g = out.grad.data() + r * w;
                const double* av = pa.value.data() + r * w;
                double dot = 0.0;
                for (std::size_t c = 0; c < w; ++c) dot += g[c] * av[c];
                ps.grad[r] += dot;
            }
        }
    };
    return Tensor(n);
}

Tensor inner_product(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "inner_product");
    return sum_all(mul(a, b));
}

Tensor mse(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mse");
    Tensor d = sub(a, b);
    return mean_all(mul(d, d));
}

// ---------------------------------------------------------------------------
// Sampling and initialization
// ---------------------------------------------------------------------------

Tensor gumbel_softmax_sample_with_noise(const Tensor& logits, double temperature, bool hard,
                                        const std::vector<double>& noise) {
    if (temperature <= 0.0)
        throw ParamError("gumbel_softmax_sample: temperature must be > 0, got " +
                         std::to_string(temperature));
    check(noise.size() == logits.size(), "gumbel_softmax_sample: noise size mismatch");
    Tensor noise_t = Tensor::from_data(logits.rows(), logits.cols(),
                                       std::vector<double>(noise), false);
    Tensor soft = softmax_rows(mul_scalar(add(logits, noise_t), 1.0 / temperature));
    if (!hard) return soft;
    // Straight-through: one-hot forward, identity pull-back into the soft sample.
    auto n = make_node(soft.rows(), soft.cols(), {soft.node()});
    const std::size_t w = soft.cols();
    for (std::size_t r = 0; r < soft.rows(); ++r) {
        const double* src = soft.value().data() + r * w;
        std::size_t best = 0;
        for (std::size_t c = 1; c < w; ++c)
            if (src[c] > src[best]) best = c;
        n->value[r * w + best] = 1.0;
    }
    n->backprop = [](TensorNode& out) {
        auto& pa = *out.parents[0];
        if (pa.requires_grad) gmap(pa) += gmap_c(out);
    };
    return Tensor(n);
}

Tensor gumbel_softmax_sample(const Tensor& logits, double temperature, bool hard, RngState& rng) {
    std::vector<double> noise(logits.size());
    for (auto& g : noise) g = rng.gumbel();
    return gumbel_softmax_sample_with_noise(logits, temperature, hard, noise);
}

Tensor glorot_init(std::size_t rows, std::size_t cols, RngState& rng) {
    if (rows == 0 || cols == 0)
        throw ParamError("glorot_init: dimensions must be >= 1, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from_data(rows, cols, std::move(data), true);
}

// ---------------------------------------------------------------------------
// Reverse pass
// ---------------------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ShapeError("backward: loss must be a scalar tensor");
    if (!loss.requires_grad()) return;

    // Iterative DFS; a node still on the stack when revisited means a cycle.
    enum class State { open, done };
    std::unordered_map<TensorNode*, State> state;
    std::vector<TensorNode*> topo;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(loss.raw(), 0);
    state[loss.raw()] = State::open;
    while (!stack.empty()) {
        TensorNode* node = stack.back().first;
        std::size_t next = stack.back().second;
        if (next < node->parents.size()) {
            stack.back().second = next + 1;
            TensorNode* p = node->parents[next].get();
            if (!p->requires_grad) continue;
            auto it = state.find(p);
            if (it == state.end()) {
                state[p] = State::open;
                stack.emplace_back(p, 0);
            } else if (it->second == State::open) {
                throw InternalError("backward: cycle detected in computation tape");
            }
        } else {
            state[node] = State::done;
            topo.push_back(node);
            stack.pop_back();
        }
    }

    loss.raw()->ensure_grad();
    loss.raw()->grad[0] += 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backprop && n->has_grad()) n->backprop(*n);
    }
}

}  // namespace chgnn::diff
