#pragma once

#include "chgnn/hypergraph.hpp"
#include "chgnn/viewgen.hpp"

namespace chgnn {

// Two-layer homogeneity-aware propagation weights; no biases.
struct EncoderParams {
    diff::Tensor w1;  // F x nhid
    diff::Tensor w2;  // nhid x nhid

    static EncoderParams init(std::size_t feature_dim, std::size_t nhid, RngState& rng);
};

// Final-layer node and hyperedge embeddings of one view.
struct EmbeddingBundle {
    diff::Tensor node_emb;  // n x nhid, one row per node even if isolated in the view
    diff::Tensor edge_emb;  // |view E| x nhid
    int view_index = 0;
};

// Per-layer intermediates, exposed for tests and diagnostics.
struct EncodeTrace {
    diff::Tensor edge_mean_1;  // h_e of layer 1
    diff::Tensor node_1;       // h_v after layer 1 (rectified)
    diff::Tensor edge_mean_2;  // h_e of layer 2 (= bundle edge_emb)
    diff::Tensor node_2;       // h_v after layer 2 (= bundle node_emb)
};

// Projection heads, classifier and homogeneity regressor. All MLPs are two
// layers with a rectifier between them.
struct HeadsParams {
    // cluster head: nhid -> nproj -> C, softmax rows
    diff::Tensor cl_w1, cl_b1, cl_w2, cl_b2;
    // node head: nhid -> nproj -> nproj
    diff::Tensor nd_w1, nd_b1, nd_w2, nd_b2;
    // hyperedge head: nhid -> nproj -> nproj
    diff::Tensor ed_w1, ed_b1, ed_w2, ed_b2;
    // classifier: nhid -> clf_hidden -> C, softmax rows
    diff::Tensor cf_w1, cf_b1, cf_w2, cf_b2;
    // homogeneity regressor: nhid -> clf_hidden -> 1, sigmoid
    diff::Tensor rg_w1, rg_b1, rg_w2, rg_b2;
    // discriminator map from cluster space (C) into the shared nproj space
    diff::Tensor disc_w;

    static HeadsParams init(std::size_t nhid, std::size_t nproj, std::size_t num_classes,
                            RngState& rng, std::size_t clf_hidden = 16);
};

enum class ProjectionKind { cluster, node, hyperedge };

// H-HyperGNN propagation over a view. Per layer, hyperedge embeddings are
// means over the view's surviving members, and each node adds its incident
// hyperedges' embeddings weighted by the homogeneity of the ORIGINAL
// hyperedge before the linear map. The straight-through operation sample of
// the view gates every surviving hyperedge's contribution (forward value 1),
// which carries the task gradient back into the view generator.
EmbeddingBundle encode(const EncoderParams& params, const HypergraphView& view,
                       const StructuralStats& stats, const diff::SparseMatrix& features,
                       int view_index = 0, EncodeTrace* trace = nullptr);

// Z_c (n x C row-stochastic), Z_v (n x nproj) or Z_e (|view E| x nproj).
diff::Tensor project(const HeadsParams& heads, const EmbeddingBundle& bundle,
                     ProjectionKind kind);

// Softmax class probabilities of the classifier applied to the average of
// the two views' node embeddings.
diff::Tensor classify(const HeadsParams& heads, const EmbeddingBundle& b1,
                      const EmbeddingBundle& b2);

// Sigmoid homogeneity prediction per hyperedge of the view, in (0, 1).
diff::Tensor regress_homogeneity(const HeadsParams& heads, const EmbeddingBundle& bundle);

}  // namespace chgnn
