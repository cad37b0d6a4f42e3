#pragma once

#include <vector>

#include "chgnn/hypergraph.hpp"
#include "chgnn/tensor.hpp"

namespace chgnn {

// Augmentation operation per hyperedge; column order of the operation head.
enum class AugOp : int { preserve = 0, remove = 1, mask = 2 };

// Two HyperConv rounds followed by a 3-way operation head.
struct ViewGenerator {
    diff::Tensor conv1_w;  // F x nhid
    diff::Tensor conv1_b;  // 1 x nhid
    diff::Tensor conv2_w;  // nhid x nhid
    diff::Tensor conv2_b;  // 1 x nhid
    diff::Tensor head_w;   // nhid x 3
    diff::Tensor head_b;   // 1 x 3
    double gumbel_temperature = 1.0;

    static ViewGenerator init(std::size_t feature_dim, std::size_t nhid, RngState& rng,
                              double gumbel_temperature = 1.0);
};

// Per-hyperedge operation distribution and the sampled assignment.
// op_sample rows are one-hot when sampled hard (straight-through); `ops`
// holds the chosen operation per hyperedge either way.
struct AugmentationVector {
    diff::Tensor soft_probs;  // |E| x 3, rows sum to 1
    diff::Tensor op_sample;   // |E| x 3
    std::vector<AugOp> ops;   // |E|
};

// Augmented copy of the hypergraph: preserved hyperedges keep their full
// node set, removed ones are absent, masked ones keep a non-empty subset.
// Node set and features are those of the base hypergraph.
struct HypergraphView {
    const Hypergraph* base = nullptr;
    std::vector<std::size_t> orig_index;               // surviving -> original hyperedge index
    std::vector<std::vector<std::size_t>> members;     // surviving node subsets
    std::vector<int> surviving_pos;                    // original -> surviving position or -1
    AugmentationVector aug;

    std::size_t num_edges() const { return members.size(); }
    bool is_identity() const;  // structurally identical to the base hypergraph
};

// Hyperedge embedding matrix M_E (|E| x nhid) from two rounds of
// node->hyperedge mean aggregation and hyperedge->node mean aggregation
// with learned maps and a rectifier.
diff::Tensor hyperconv_embed(const ViewGenerator& gen, const Hypergraph& h,
                             const diff::SparseMatrix& features);

// Head probabilities plus a Gumbel-softmax sample of one operation per
// hyperedge. Noise may be supplied for reproducible re-evaluation; `hard`
// selects straight-through one-hot sampling (the training default).
AugmentationVector sample_augmentation(const ViewGenerator& gen, const diff::Tensor& m_e,
                                       RngState& rng, bool hard = true);
AugmentationVector sample_augmentation_with_noise(const ViewGenerator& gen,
                                                  const diff::Tensor& m_e,
                                                  const std::vector<double>& noise, bool hard);

// Applies the sampled operations. Masking drops each node of a masked
// hyperedge independently with probability stats.mask_prob[v]; a hyperedge
// masked down to nothing becomes a removal. Mask coin flips may be supplied
// as pre-drawn uniforms (row-major |E| x max members, indexed per edge).
HypergraphView apply_augmentation(const Hypergraph& h, const AugmentationVector& aug,
                                  const StructuralStats& stats, RngState& rng);
HypergraphView apply_augmentation_with_uniforms(
    const Hypergraph& h, const AugmentationVector& aug, const StructuralStats& stats,
    const std::vector<std::vector<double>>& uniforms);

// All-preserve view of the base hypergraph (used for inference and as the
// degenerate-view fallback).
HypergraphView identity_view(const Hypergraph& h);

// Full view pipeline: embed, sample, apply; re-samples once if every
// hyperedge was removed, then falls back to all-preserve.
HypergraphView generate_view(const ViewGenerator& gen, const Hypergraph& h,
                             const diff::SparseMatrix& features, const StructuralStats& stats,
                             RngState& rng);

// Mean squared error between the two generators' soft operation
// probabilities (the view-similarity loss).
diff::Tensor similarity_loss(const AugmentationVector& a1, const AugmentationVector& a2);

}  // namespace chgnn
