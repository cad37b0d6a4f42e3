#include "chgnn/viewgen.hpp"

#include <algorithm>

namespace chgnn {

using diff::Tensor;

ViewGenerator ViewGenerator::init(std::size_t feature_dim, std::size_t nhid, RngState& rng,
                                  double gumbel_temperature) {
    ViewGenerator g;
    g.conv1_w = diff::glorot_init(feature_dim, nhid, rng);
    g.conv1_b = Tensor::zeros(1, nhid, true);
    g.conv2_w = diff::glorot_init(nhid, nhid, rng);
    g.conv2_b = Tensor::zeros(1, nhid, true);
    g.head_w = diff::glorot_init(nhid, 3, rng);
    g.head_b = Tensor::zeros(1, 3, true);
    g.gumbel_temperature = gumbel_temperature;
    return g;
}

bool HypergraphView::is_identity() const {
    if (!base || members.size() != base->hyperedges.size()) return false;
    for (std::size_t j = 0; j < members.size(); ++j)
        if (orig_index[j] != j || members[j] != base->hyperedges[j]) return false;
    return true;
}

namespace {

std::vector<std::vector<std::size_t>> edge_groups(const Hypergraph& h) {
    return h.hyperedges;
}

std::vector<std::vector<std::size_t>> node_groups(const Hypergraph& h) {
    std::vector<std::vector<std::size_t>> g(h.num_nodes);
    for (std::size_t e = 0; e < h.hyperedges.size(); ++e)
        for (std::size_t v : h.hyperedges[e]) g[v].push_back(e);
    return g;
}

}  // namespace

diff::Tensor hyperconv_embed(const ViewGenerator& gen, const Hypergraph& h,
                             const diff::SparseMatrix& features) {
    if (features.cols != gen.conv1_w.rows())
        throw ConfigError("hyperconv_embed: feature width " + std::to_string(features.cols) +
                          " does not match generator input " +
                          std::to_string(gen.conv1_w.rows()));
    if (h.num_hyperedges() == 0)
        throw ParamError("hyperconv_embed: hypergraph has no hyperedges");

    // Round 1: node -> hyperedge mean with the first map, then back to nodes.
    // The mean commutes with the linear map, so the feature-width product is
    // done once against the sparse features.
    Tensor q = diff::sparse_matmul(features, gen.conv1_w);             // n x nhid
    Tensor he1 = diff::relu(diff::add_rowvec(
        diff::group_mean_rows(q, edge_groups(h)), gen.conv1_b));       // |E| x nhid
    Tensor hv1 = diff::group_mean_rows(he1, node_groups(h), /*allow_empty=*/true);

    // Round 2: node -> hyperedge mean with the second map; the hyperedge
    // rows are the output.
    Tensor he2 = diff::relu(diff::add_rowvec(
        diff::matmul(diff::group_mean_rows(hv1, edge_groups(h)), gen.conv2_w), gen.conv2_b));
    return he2;
}

AugmentationVector sample_augmentation_with_noise(const ViewGenerator& gen,
                                                  const diff::Tensor& m_e,
                                                  const std::vector<double>& noise, bool hard) {
    if (m_e.cols() != gen.head_w.rows())
        throw ShapeError("sample_augmentation: embedding width " + std::to_string(m_e.cols()) +
                         " does not match head input " + std::to_string(gen.head_w.rows()));
    Tensor logits = diff::add_rowvec(diff::matmul(m_e, gen.head_w), gen.head_b);
    AugmentationVector aug;
    aug.soft_probs = diff::softmax_rows(logits);
    aug.op_sample =
        diff::gumbel_softmax_sample_with_noise(logits, gen.gumbel_temperature, hard, noise);
    aug.ops.resize(m_e.rows());
    for (std::size_t r = 0; r < m_e.rows(); ++r) {
        const double* row = aug.op_sample.value().data() + r * 3;
        int best = 0;
        for (int c = 1; c < 3; ++c)
            if (row[c] > row[best]) best = c;
        aug.ops[r] = static_cast<AugOp>(best);
    }
    return aug;
}

AugmentationVector sample_augmentation(const ViewGenerator& gen, const diff::Tensor& m_e,
                                       RngState& rng, bool hard) {
    std::vector<double> noise(m_e.rows() * 3);
    for (auto& g : noise) g = rng.gumbel();
    return sample_augmentation_with_noise(gen, m_e, noise, hard);
}

HypergraphView apply_augmentation_with_uniforms(
    const Hypergraph& h, const AugmentationVector& aug, const StructuralStats& stats,
    const std::vector<std::vector<double>>& uniforms) {
    if (aug.ops.size() != h.num_hyperedges())
        throw ShapeError("apply_augmentation: " + std::to_string(aug.ops.size()) +
                         " operations for " + std::to_string(h.num_hyperedges()) +
                         " hyperedges");
    HypergraphView view;
    view.base = &h;
    view.aug = aug;
    view.surviving_pos.assign(h.num_hyperedges(), -1);
    for (std::size_t e = 0; e < h.num_hyperedges(); ++e) {
        const AugOp op = aug.ops[e];
        if (op == AugOp::remove) continue;
        std::vector<std::size_t> kept;
        if (op == AugOp::preserve) {
            kept = h.hyperedges[e];
        } else {
            const auto& coins = uniforms[e];
            for (std::size_t k = 0; k < h.hyperedges[e].size(); ++k) {
                std::size_t v = h.hyperedges[e][k];
                if (coins[k] >= stats.mask_prob[v]) kept.push_back(v);
            }
            if (kept.empty()) continue;  // masked to nothing: treat as removed
        }
        view.surviving_pos[e] = static_cast<int>(view.members.size());
        view.orig_index.push_back(e);
        view.members.push_back(std::move(kept));
    }
    return view;
}

HypergraphView apply_augmentation(const Hypergraph& h, const AugmentationVector& aug,
                                  const StructuralStats& stats, RngState& rng) {
    std::vector<std::vector<double>> uniforms(h.num_hyperedges());
    for (std::size_t e = 0; e < h.num_hyperedges(); ++e) {
        uniforms[e].resize(h.hyperedges[e].size());
        for (auto& u : uniforms[e]) u = rng.uniform01();
    }
    return apply_augmentation_with_uniforms(h, aug, stats, uniforms);
}

HypergraphView identity_view(const Hypergraph& h) {
    HypergraphView view;
    view.base = &h;
    view.members = h.hyperedges;
    view.orig_index.resize(h.num_hyperedges());
    view.surviving_pos.resize(h.num_hyperedges());
    for (std::size_t e = 0; e < h.num_hyperedges(); ++e) {
        view.orig_index[e] = e;
        view.surviving_pos[e] = static_cast<int>(e);
    }
    view.aug.soft_probs = Tensor::zeros(h.num_hyperedges(), 3);
    std::vector<double> onehot(h.num_hyperedges() * 3, 0.0);
    for (std::size_t e = 0; e < h.num_hyperedges(); ++e) {
        onehot[e * 3 + static_cast<int>(AugOp::preserve)] = 1.0;
        view.aug.soft_probs.value()[e * 3 + static_cast<int>(AugOp::preserve)] = 1.0;
    }
    view.aug.op_sample = Tensor::from_data(h.num_hyperedges(), 3, std::move(onehot));
    view.aug.ops.assign(h.num_hyperedges(), AugOp::preserve);
    return view;
}

HypergraphView generate_view(const ViewGenerator& gen, const Hypergraph& h,
                             const diff::SparseMatrix& features, const StructuralStats& stats,
                             RngState& rng) {
    Tensor m_e = hyperconv_embed(gen, h, features);
    AugmentationVector aug;
    for (int attempt = 0; attempt < 2; ++attempt) {
        aug = sample_augmentation(gen, m_e, rng);
        HypergraphView view = apply_augmentation(h, aug, stats, rng);
        if (view.num_edges() > 0) return view;
    }
    // Two degenerate samples in a row: fall back to all-preserve so the
    // encoder always sees at least one hyperedge. The generator's soft
    // probabilities are kept so the similarity loss still reaches it.
    HypergraphView view = identity_view(h);
    view.aug.soft_probs = aug.soft_probs;
    return view;
}

diff::Tensor similarity_loss(const AugmentationVector& a1, const AugmentationVector& a2) {
    if (a1.soft_probs.rows() != a2.soft_probs.rows())
        throw ShapeError("similarity_loss: " + std::to_string(a1.soft_probs.rows()) + " vs " +
                         std::to_string(a2.soft_probs.rows()) + " hyperedges");
    return diff::mse(a1.soft_probs, a2.soft_probs);
}

}  // namespace chgnn
