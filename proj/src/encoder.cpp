#include "chgnn/encoder.hpp"

namespace chgnn {

using diff::Tensor;

EncoderParams EncoderParams::init(std::size_t feature_dim, std::size_t nhid, RngState& rng) {
    EncoderParams p;
    p.w1 = diff::glorot_init(feature_dim, nhid, rng);
    p.w2 = diff::glorot_init(nhid, nhid, rng);
    return p;
}

HeadsParams HeadsParams::init(std::size_t nhid, std::size_t nproj, std::size_t num_classes,
                              RngState& rng, std::size_t clf_hidden) {
    HeadsParams h;
    h.cl_w1 = diff::glorot_init(nhid, nproj, rng);
    h.cl_b1 = Tensor::zeros(1, nproj, true);
    h.cl_w2 = diff::glorot_init(nproj, num_classes, rng);
    h.cl_b2 = Tensor::zeros(1, num_classes, true);
    h.nd_w1 = diff::glorot_init(nhid, nproj, rng);
    h.nd_b1 = Tensor::zeros(1, nproj, true);
    h.nd_w2 = diff::glorot_init(nproj, nproj, rng);
    h.nd_b2 = Tensor::zeros(1, nproj, true);
    h.ed_w1 = diff::glorot_init(nhid, nproj, rng);
    h.ed_b1 = Tensor::zeros(1, nproj, true);
    h.ed_w2 = diff::glorot_init(nproj, nproj, rng);
    h.ed_b2 = Tensor::zeros(1, nproj, true);
    h.cf_w1 = diff::glorot_init(nhid, clf_hidden, rng);
    h.cf_b1 = Tensor::zeros(1, clf_hidden, true);
    h.cf_w2 = diff::glorot_init(clf_hidden, num_classes, rng);
    h.cf_b2 = Tensor::zeros(1, num_classes, true);
    h.rg_w1 = diff::glorot_init(nhid, clf_hidden, rng);
    h.rg_b1 = Tensor::zeros(1, clf_hidden, true);
    h.rg_w2 = diff::glorot_init(clf_hidden, 1, rng);
    h.rg_b2 = Tensor::zeros(1, 1, true);
    h.disc_w = diff::glorot_init(num_classes, nproj, rng);
    return h;
}

namespace {

// Gate per surviving hyperedge: the operation-sample entry that kept it
// alive (exactly 1 under hard sampling).
Tensor view_gates(const HypergraphView& view) {
    std::vector<std::size_t> rows(view.num_edges()), cols(view.num_edges());
    for (std::size_t j = 0; j < view.num_edges(); ++j) {
        rows[j] = view.orig_index[j];
        cols[j] = static_cast<std::size_t>(view.aug.ops[view.orig_index[j]]);
    }
    return diff::gather_elems(view.aug.op_sample, rows, cols);
}

// Per node, the (surviving hyperedge position, homo weight) incidence list.
std::vector<std::vector<std::pair<std::size_t, double>>> weighted_incidence(
    const HypergraphView& view, const StructuralStats& stats) {
    std::vector<std::vector<std::pair<std::size_t, double>>> inc(view.base->num_nodes);
    for (std::size_t j = 0; j < view.num_edges(); ++j) {
        const double w = stats.homogeneity[view.orig_index[j]];
        for (std::size_t v : view.members[j]) inc[v].emplace_back(j, w);
    }
    return inc;
}

}  // namespace

EmbeddingBundle encode(const EncoderParams& params, const HypergraphView& view,
                       const StructuralStats& stats, const diff::SparseMatrix& features,
                       int view_index, EncodeTrace* trace) {
    if (view.num_edges() == 0)
        throw ParamError("encode: view has no hyperedges");
    if (features.cols != params.w1.rows())
        throw ConfigError("encode: feature width " + std::to_string(features.cols) +
                          " does not match encoder input " + std::to_string(params.w1.rows()));

    Tensor gates = view_gates(view);
    auto inc = weighted_incidence(view, stats);

    // Layer 1. The linear map commutes with the membership mean and the
    // weighted incidence sum, so W1 is applied once to the sparse features
    // and all aggregation runs at hidden width.
    Tensor p = diff::sparse_matmul(features, params.w1);         // n x nhid
    Tensor e1 = diff::group_mean_rows(p, view.members);          // |Ev| x nhid
    Tensor a1 = diff::weighted_gather_sum_rows(diff::scale_rows(e1, gates), inc);
    Tensor hv1 = diff::relu(diff::add(p, a1));

    // Layer 2.
    Tensor e2 = diff::group_mean_rows(hv1, view.members);
    Tensor a2 = diff::weighted_gather_sum_rows(diff::scale_rows(e2, gates), inc);
    Tensor hv2 = diff::matmul(diff::add(hv1, a2), params.w2);

    if (trace) {
        trace->edge_mean_1 = e1;
        trace->node_1 = hv1;
        trace->edge_mean_2 = e2;
        trace->node_2 = hv2;
    }
    EmbeddingBundle b;
    b.node_emb = hv2;
    b.edge_emb = e2;
    b.view_index = view_index;
    return b;
}

namespace {

Tensor mlp2(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
            const Tensor& b2) {
    return diff::add_rowvec(
        diff::matmul(diff::relu(diff::add_rowvec(diff::matmul(x, w1), b1)), w2), b2);
}

}  // namespace

Tensor project(const HeadsParams& heads, const EmbeddingBundle& bundle, ProjectionKind kind) {
    switch (kind) {
        case ProjectionKind::cluster:
            return diff::softmax_rows(
                mlp2(bundle.node_emb, heads.cl_w1, heads.cl_b1, heads.cl_w2, heads.cl_b2));
        case ProjectionKind::node:
            return mlp2(bundle.node_emb, heads.nd_w1, heads.nd_b1, heads.nd_w2, heads.nd_b2);
        case ProjectionKind::hyperedge:
            return mlp2(bundle.edge_emb, heads.ed_w1, heads.ed_b1, heads.ed_w2, heads.ed_b2);
    }
    throw InternalError("project: unknown projection kind");
}

Tensor classify(const HeadsParams& heads, const EmbeddingBundle& b1, const EmbeddingBundle& b2) {
    if (b1.node_emb.rows() != b2.node_emb.rows() || b1.node_emb.cols() != b2.node_emb.cols())
        throw ShapeError("classify: bundle shapes differ");
    Tensor avg = diff::mul_scalar(diff::add(b1.node_emb, b2.node_emb), 0.5);
    return diff::softmax_rows(mlp2(avg, heads.cf_w1, heads.cf_b1, heads.cf_w2, heads.cf_b2));
}

Tensor regress_homogeneity(const HeadsParams& heads, const EmbeddingBundle& bundle) {
    return diff::sigmoid(
        mlp2(bundle.edge_emb, heads.rg_w1, heads.rg_b1, heads.rg_w2, heads.rg_b2));
}

}  // namespace chgnn
