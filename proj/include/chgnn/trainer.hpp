#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chgnn/losses.hpp"

namespace chgnn {

struct TrainConfig {
    std::string preset;  // optional named hyperparameter row
    std::uint64_t seed = 1;
    std::size_t epochs = 300;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    std::size_t nhid = 64;
    std::size_t nproj = 16;
    std::size_t clf_hidden = 16;
    double p_node = 0.2;
    double p_tau = 0.8;
    LossWeights weights;
    double tau_c = 0.5, tau_e = 0.5, tau_nc = 0.5, tau_ne = 0.5, tau_ec = 0.5;
    double tau_c_ub = 0.5, tau_e_ub = 0.5;
    double eps_c = 0.2, eps_e = 0.2;
    double gumbel_temperature = 1.0;
    std::size_t folds = 10;
    std::optional<double> label_ratio;
    bool determinism = true;

    void validate() const;
    TemperatureState make_temperature_state() const;
};

// Parses a config JSON file; absent fields keep defaults, a "preset" row is
// applied before explicit fields. Throws ConfigError naming the bad field.
TrainConfig load_config(const std::string& path);
TrainConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const TrainConfig& cfg);

// All learnable parameters: two view generators, the shared encoder tower,
// and the heads.
struct ModelState {
    ViewGenerator gen1, gen2;
    EncoderParams encoder;
    HeadsParams heads;

    static ModelState init(std::size_t feature_dim, std::size_t num_classes,
                           const TrainConfig& cfg, RngState& rng);
    // Stable name -> tensor registry (optimizer and checkpoint order).
    std::vector<std::pair<std::string, diff::Tensor>> parameters() const;
    std::size_t parameter_count() const;
};

struct Metrics {
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    std::vector<LossReport> loss_series;
    double wall_seconds = 0.0;
};

class AdamOptimizer {
public:
    AdamOptimizer(std::vector<std::pair<std::string, diff::Tensor>> params, double lr,
                  double weight_decay);
    void step();
    void zero_grad();

private:
    std::vector<std::pair<std::string, diff::Tensor>> params_;
    double lr_, wd_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Seeded splits. With label_ratio set, each fold draws a stratified train
// set of floor(ratio * n) nodes; otherwise an explicit file split is used
// as a single fold, or the nodes are shuffled once and partitioned into
// `folds` test blocks.
std::vector<SplitSpec> make_splits(const Hypergraph& h, const TrainConfig& cfg);

// Per-epoch randomness drawn up front so a forward pass is a deterministic
// function of the parameters (finite-difference checks re-run it). Each
// generator gets two draws: the second backs the one re-sample allowed for
// a degenerate all-removed view.
struct EpochPlan {
    std::array<std::vector<double>, 2> gumbel1, gumbel2;  // |E| x 3 per attempt
    std::array<std::vector<std::vector<double>>, 2> mask_u1, mask_u2;

    static EpochPlan draw(const Hypergraph& h, RngState& rng);
};

struct ForwardResult {
    diff::Tensor loss;
    LossReport report;
    HypergraphView view1, view2;
    diff::Tensor zc1, zc2, zv1, zv2, ze1, ze2;
    diff::Tensor ze1_shared, ze2_shared;
    std::vector<std::size_t> shared_ids;
    diff::Tensor probs;
};

// One full training forward pass over freshly applied views. `hard` selects
// straight-through sampling (training) or the smooth relaxation of the
// hyperedge gates (gradient checking).
ForwardResult forward_pass(const Hypergraph& h, const StructuralStats& stats,
                           const diff::SparseMatrix& features, const ModelState& state,
                           const TrainConfig& cfg, const TemperatureState& temps,
                           const std::vector<std::size_t>& train_ids, const EpochPlan& plan,
                           bool hard, std::size_t epoch);

struct TrainOutcome {
    ModelState state;
    Metrics metrics;
    TemperatureState temps;
    SplitSpec split;
};

// End-to-end loop: per epoch regenerate views, encode, compute all losses,
// adapt temperatures, one optimizer step; evaluation on the split's test
// ids at the end.
TrainOutcome train(const Hypergraph& h, const SplitSpec& split, const TrainConfig& cfg);

// Accuracy of argmax classification over the test ids; inference encodes
// the unaugmented hypergraph for both branches.
double evaluate(const ModelState& state, const Hypergraph& h, const SplitSpec& split,
                const TrainConfig& cfg);

// Class-probability matrix of the unaugmented hypergraph.
diff::Tensor infer_probabilities(const ModelState& state, const Hypergraph& h,
                                 const TrainConfig& cfg);

// Structural analytics report (homogeneity, overlapness, degree histograms).
std::string stats_report_json(const Hypergraph& h);
void write_stats_report(const Hypergraph& h, const std::string& path);

// checkpoint.bin: versioned binary parameter map plus config and split.
void save_checkpoint(const std::string& path, const ModelState& state, const TrainConfig& cfg,
                     const SplitSpec& split, const Hypergraph& h);
struct Checkpoint {
    ModelState state;
    TrainConfig cfg;
    SplitSpec split;
    std::size_t num_nodes = 0, feature_dim = 0, num_classes = 0, num_hyperedges = 0;
};
Checkpoint load_checkpoint(const std::string& path);

// Artifact writers shared by the CLI and the acceptance suite.
std::string metrics_to_json_text(const Metrics& m, const TrainConfig& cfg);
void write_run_artifacts(const std::string& out_dir, const Hypergraph& h,
                         const TrainConfig& cfg, const TrainOutcome& outcome);
Metrics run_folds(const Hypergraph& h, const TrainConfig& cfg, const std::string& out_dir);

}  // namespace chgnn
