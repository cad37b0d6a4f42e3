#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chgnn/encoder.hpp"

namespace chgnn {

struct LossWeights {
    double lambda_h = 1.0;
    double lambda_c = 1.0;
    double lambda_e = 0.5;
    double lambda_nc = 0.5;
    double lambda_ne = 0.5;
    double lambda_ec = 0.5;

    void validate() const;
};

// Base temperatures, adaptive-repulsion bounds/thresholds, and the per-pair
// effective temperature tables for the cluster- and hyperedge-level losses.
// Tables default to the base temperature; positive pairs always keep it.
struct TemperatureState {
    double tau_c = 0.5, tau_e = 0.5, tau_nc = 0.5, tau_ne = 0.5, tau_ec = 0.5;
    double tau_c_ub = 0.5, tau_e_ub = 0.5;
    double eps_c = 0.2, eps_e = 0.2;
    std::size_t epoch = 0;

    std::size_t num_classes = 0;
    std::size_t num_edges = 0;
    std::vector<double> cluster_table;  // C x C, anchor-major
    std::vector<double> edge_table;     // |E| x |E| by original hyperedge id

    // Mean pairwise center similarities of the last adaptation, NaN before.
    double m_bar_c, m_bar_e;
    bool cluster_adapted = false;
    bool edge_adapted = false;

    TemperatureState();
    void init_tables(std::size_t n_classes, std::size_t n_edges);
    double cluster_tau(std::size_t q, std::size_t i) const {
        return cluster_table[q * num_classes + i];
    }
    double edge_tau(std::size_t q, std::size_t i) const { return edge_table[q * num_edges + i]; }
    void validate() const;
};

// Per-epoch loss values. cl and crocl are the lambda-weighted composites;
// total = sim + cls + h + cl + crocl.
struct LossReport {
    std::size_t epoch = 0;
    double sim = 0, cls = 0, h = 0;
    double c = 0, e = 0, cl = 0;
    double nc = 0, ne = 0, ec = 0, crocl = 0;
    double total = 0;

    std::string to_json_line() const;
};

// Sum over labeled train nodes of -ln probs[v, y_v].
diff::Tensor classification_loss(const diff::Tensor& probs, const std::vector<int>& labels,
                                 const std::vector<std::size_t>& train_ids);

// lambda_h * (MSE(pred1, homo|view1) + MSE(pred2, homo|view2)) / 2, targets
// taken from the original hypergraph's homogeneity restricted to each
// view's survivors.
diff::Tensor homogeneity_loss(const diff::Tensor& pred1, const HypergraphView& view1,
                              const diff::Tensor& pred2, const HypergraphView& view2,
                              const StructuralStats& stats, double lambda_h);

// Column-wise InfoNCE over the two row-stochastic cluster matrices, inner
// product similarity, per-pair temperatures from the state's cluster table.
diff::Tensor cluster_contrastive_loss(const diff::Tensor& z1, const diff::Tensor& z2,
                                      const TemperatureState& temps);

// Row-wise InfoNCE over hyperedge projections aligned by original id on the
// hyperedges surviving in both views. Returns zero when nothing is shared.
diff::Tensor hyperedge_contrastive_loss(const diff::Tensor& z1, const diff::Tensor& z2,
                                        const std::vector<std::size_t>& shared_orig_ids,
                                        const TemperatureState& temps,
                                        bool* warned_empty = nullptr);

// The discriminator for cross-type contrasts: inner product of
// L2-normalized vectors, with cluster-space inputs first mapped into the
// projection space by disc_w.
diff::Tensor discriminator_space(const diff::Tensor& z, bool is_cluster,
                                 const diff::Tensor& disc_w);

// Node-cluster contrast: each node against every node's cluster vector from
// the other view, both view orders.
diff::Tensor node_cluster_loss(const diff::Tensor& zv1, const diff::Tensor& zc1,
                               const diff::Tensor& zv2, const diff::Tensor& zc2,
                               const diff::Tensor& disc_w, const TemperatureState& temps);

// Incidence pairs of a view: (node id, surviving hyperedge position).
using IncidencePairs = std::vector<std::pair<std::size_t, std::size_t>>;
IncidencePairs view_incidence_pairs(const HypergraphView& view);

// Node-hyperedge contrast over incident pairs, node-side and hyperedge-side
// denominators, both view orders; normalized by the total pair count.
diff::Tensor node_hyperedge_loss(const diff::Tensor& zv1, const diff::Tensor& ze2,
                                 const IncidencePairs& pairs2, const diff::Tensor& zv2,
                                 const diff::Tensor& ze1, const IncidencePairs& pairs1,
                                 const TemperatureState& temps, bool* warned_empty = nullptr);

// Hyperedge-cluster contrast; cluster vectors take the discriminator map.
diff::Tensor hyperedge_cluster_loss(const diff::Tensor& zc1, const diff::Tensor& ze2,
                                    const IncidencePairs& pairs2, const diff::Tensor& zc2,
                                    const diff::Tensor& ze1, const IncidencePairs& pairs1,
                                    const diff::Tensor& disc_w, const TemperatureState& temps,
                                    bool* warned_empty = nullptr);

// L = sim + cls + h + (lambda_c c + lambda_e e) + (lambda_nc nc +
// lambda_ne ne + lambda_ec ec). Aborts with the offending term named if any
// component is non-finite.
std::pair<diff::Tensor, LossReport> total_loss(
    const diff::Tensor& sim, const diff::Tensor& cls, const diff::Tensor& homo,
    const diff::Tensor& c, const diff::Tensor& e, const diff::Tensor& nc,
    const diff::Tensor& ne, const diff::Tensor& ec, const LossWeights& weights,
    std::size_t epoch);

// |dl/ds(q,n_i)| / |dl/ds(q,p)| of the per-instance InfoNCE with per-sample
// temperatures, evaluated analytically.
std::vector<double> relative_penalties(double s_positive, const std::vector<double>& s_negatives,
                                       double tau_positive,
                                       const std::vector<double>& tau_negatives);

// The same InfoNCE built on the tape; used to cross-check the analytic
// penalties through backward().
diff::Tensor instance_infonce(const diff::Tensor& s_positive, const diff::Tensor& s_negatives,
                              double tau_positive, const std::vector<double>& tau_negatives);

// Epoch-end adaptive distancing. Cluster side: labeled class centers of the
// averaged cluster rows gate the per-pair table on mean center cosine
// against eps_c. Hyperedge side: one constructed hyperedge per class (mean
// of member node projections) gates the hyperedge table against eps_e.
// Classes without labeled nodes are excluded with a warning.
void adapt_temperatures(TemperatureState& state, const diff::Tensor& zc1,
                        const diff::Tensor& zc2, const diff::Tensor& zv1,
                        const diff::Tensor& zv2, const diff::Tensor& ze1_aligned,
                        const diff::Tensor& ze2_aligned,
                        const std::vector<std::size_t>& shared_orig_ids,
                        const std::vector<std::vector<std::size_t>>& train_ids_by_class,
                        std::size_t epoch, std::vector<std::string>* warnings = nullptr);

}  // namespace chgnn
