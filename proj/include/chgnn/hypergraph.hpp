#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chgnn/tensor.hpp"

namespace chgnn {

// Train/test node-id split, optionally one fold of a k-fold schedule.
struct SplitSpec {
    std::vector<std::size_t> train_ids;
    std::vector<std::size_t> test_ids;
    std::size_t fold_index = 0;
    std::size_t num_folds = 1;
};

struct Hypergraph {
    std::size_t num_nodes = 0;
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    std::vector<std::vector<std::size_t>> hyperedges;  // sorted, duplicate-free node ids
    std::vector<std::vector<double>> features;         // num_nodes rows of feature_dim
    std::vector<int> labels;                           // empty when unlabeled
    std::optional<SplitSpec> file_split;               // "splits" block of the data file

    bool has_labels() const { return !labels.empty(); }
    std::size_t num_hyperedges() const { return hyperedges.size(); }

    // Throws ValidationError naming the offending node/hyperedge on any
    // invariant violation.
    void validate() const;
};

// Structure-derived quantities the model consumes: egonets, per-hyperedge
// homogeneity, per-node overlapness and masking probability.
struct StructuralStats {
    std::vector<std::vector<std::size_t>> egonets;  // per node, incident hyperedge indices
    std::vector<double> homogeneity;                // per hyperedge, in (0, 1]
    std::vector<double> overlapness;                // per node, >= 1
    std::vector<double> log_overlapness;            // w_v = ln o(v)
    double w_nmax = 0.0;
    double w_navg = 0.0;
    std::vector<double> mask_prob;                  // per node, in [0, p_tau]
};

// The set of hyperedge indices containing v.
std::vector<std::size_t> egonet(const Hypergraph& h, std::size_t v);

// 1 for singletons, otherwise sigmoid of the mean pairwise co-degree.
double homogeneity(const Hypergraph& h, std::size_t e);
double homogeneity(const Hypergraph& h, std::size_t e,
                   const std::vector<std::vector<std::size_t>>& egonets);

// Total member count of v's egonet over its distinct member count.
// Isolated nodes (empty egonet) are defined to have overlapness 1.
double overlapness(const Hypergraph& h, std::size_t v);
double overlapness(const Hypergraph& h, std::size_t v,
                   const std::vector<std::vector<std::size_t>>& egonets);

// p_v = min(((w_nmax - w_v) / (w_nmax - w_navg)) * p_node, p_tau), clamped
// at 0. When all nodes have equal overlapness, p_v = min(p_node, p_tau).
std::vector<double> mask_probabilities(const Hypergraph& h, double p_node, double p_tau);

StructuralStats structural_stats(const Hypergraph& h, double p_node, double p_tau);

// JSON dataset file IO; format documented in the README.
Hypergraph load_hypergraph(const std::string& path);
Hypergraph hypergraph_from_json_text(const std::string& text);
void save_hypergraph(const Hypergraph& h, const std::string& path);
std::string hypergraph_to_json_text(const Hypergraph& h);

// Feature matrix as the sparse constant the diff layer consumes.
diff::SparseMatrix features_as_sparse(const Hypergraph& h);

}  // namespace chgnn
