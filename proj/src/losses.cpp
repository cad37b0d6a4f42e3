#include "chgnn/losses.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace chgnn {

using diff::Tensor;

void LossWeights::validate() const {
    const std::pair<const char*, double> fields[] = {
        {"lambda_h", lambda_h}, {"lambda_c", lambda_c},   {"lambda_e", lambda_e},
        {"lambda_nc", lambda_nc}, {"lambda_ne", lambda_ne}, {"lambda_ec", lambda_ec}};
    for (const auto& [name, v] : fields)
        if (!(v >= 0.0))
            throw ConfigError(std::string(name) + " must be >= 0, got " + std::to_string(v));
}

TemperatureState::TemperatureState()
    : m_bar_c(std::numeric_limits<double>::quiet_NaN()),
      m_bar_e(std::numeric_limits<double>::quiet_NaN()) {}

void TemperatureState::init_tables(std::size_t n_classes, std::size_t n_edges) {
    num_classes = n_classes;
    num_edges = n_edges;
    cluster_table.assign(n_classes * n_classes, tau_c);
    edge_table.assign(n_edges * n_edges, tau_e);
    cluster_adapted = false;
    edge_adapted = false;
}

void TemperatureState::validate() const {
    const std::pair<const char*, double> fields[] = {
        {"tau_c", tau_c},       {"tau_e", tau_e},       {"tau_nc", tau_nc},
        {"tau_ne", tau_ne},     {"tau_ec", tau_ec},     {"tau_c_ub", tau_c_ub},
        {"tau_e_ub", tau_e_ub}};
    for (const auto& [name, v] : fields)
        if (!(v > 0.0))
            throw ConfigError(std::string(name) + " must be > 0, got " + std::to_string(v));
    for (double t : cluster_table)
        if (!(t > 0.0)) throw ConfigError("cluster temperature table contains a value <= 0");
    for (double t : edge_table)
        if (!(t > 0.0)) throw ConfigError("edge temperature table contains a value <= 0");
}

std::string LossReport::to_json_line() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"epoch\":" << epoch << ",\"L_total\":" << total << ",\"L_sim\":" << sim
       << ",\"L_cls\":" << cls << ",\"L_h\":" << h << ",\"L_c\":" << c << ",\"L_e\":" << e
       << ",\"L_cl\":" << cl << ",\"L_nc\":" << nc << ",\"L_ne\":" << ne << ",\"L_ec\":" << ec
       << ",\"L_crocl\":" << crocl << "}";
    return os.str();
}

// ---------------------------------------------------------------------------
// Supervised terms
// ---------------------------------------------------------------------------

Tensor classification_loss(const Tensor& probs, const std::vector<int>& labels,
                           const std::vector<std::size_t>& train_ids) {
    if (labels.empty()) throw ParamError("classification_loss: hypergraph has no labels");
    if (train_ids.empty()) throw ParamError("classification_loss: empty train set");
    std::vector<std::size_t> cols(train_ids.size());
    for (std::size_t k = 0; k < train_ids.size(); ++k) {
        std::size_t v = train_ids[k];
        if (v >= labels.size())
            throw ParamError("classification_loss: train id " + std::to_string(v) +
                             " out of range");
        if (labels[v] < 0 || static_cast<std::size_t>(labels[v]) >= probs.cols())
            throw ParamError("classification_loss: unlabeled or out-of-range label at node " +
                             std::to_string(v));
        cols[k] = static_cast<std::size_t>(labels[v]);
    }
    Tensor rows = diff::gather_rows(probs, train_ids);
    Tensor picked = diff::gather_elems(diff::log_t(rows),
                                       [&] {
                                           std::vector<std::size_t> r(train_ids.size());
                                           std::iota(r.begin(), r.end(), 0);
                                           return r;
                                       }(),
                                       cols);
    return diff::mul_scalar(diff::sum_all(picked), -1.0);
}

namespace {

Tensor homogeneity_targets(const HypergraphView& view, const StructuralStats& stats) {
    std::vector<double> t(view.num_edges());
    for (std::size_t j = 0; j < view.num_edges(); ++j)
        t[j] = stats.homogeneity[view.orig_index[j]];
    return Tensor::from_data(view.num_edges(), 1, std::move(t));
}

}  // namespace

Tensor homogeneity_loss(const Tensor& pred1, const HypergraphView& view1, const Tensor& pred2,
                        const HypergraphView& view2, const StructuralStats& stats,
                        double lambda_h) {
    if (pred1.rows() != view1.num_edges() || pred2.rows() != view2.num_edges())
        throw ShapeError("homogeneity_loss: prediction length does not match view survivors");
    Tensor m1 = diff::mse(pred1, homogeneity_targets(view1, stats));
    Tensor m2 = diff::mse(pred2, homogeneity_targets(view2, stats));
    return diff::mul_scalar(diff::add(m1, m2), 0.5 * lambda_h);
}

// ---------------------------------------------------------------------------
// Basic contrastive losses
// ---------------------------------------------------------------------------

namespace {

// sum over anchors q of [-A_qq + log sum_i exp(A_qi)] for A = S / T.
Tensor anchor_infonce_sum(const Tensor& scaled) {
    std::vector<std::size_t> diag(scaled.rows());
    std::iota(diag.begin(), diag.end(), 0);
    Tensor lse = diff::logsumexp_rows(scaled);
    Tensor pos = diff::gather_elems(scaled, diag, diag);
    return diff::sub(diff::sum_all(lse), diff::sum_all(pos));
}

std::vector<double> inverse_cluster_table(const TemperatureState& temps) {
    std::vector<double> inv(temps.cluster_table.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / temps.cluster_table[i];
    return inv;
}

}  // namespace

Tensor cluster_contrastive_loss(const Tensor& z1, const Tensor& z2,
                                const TemperatureState& temps) {
    if (z1.rows() != z2.rows() || z1.cols() != z2.cols())
        throw ShapeError("cluster_contrastive_loss: shape mismatch");
    const std::size_t C = z1.cols();
    if (temps.num_classes != C)
        throw ConfigError("cluster_contrastive_loss: temperature table built for " +
                          std::to_string(temps.num_classes) + " classes, got " +
                          std::to_string(C));
    for (const Tensor* z : {&z1, &z2})
        for (std::size_t r = 0; r < z->rows(); ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < C; ++c) s += z->at(r, c);
            if (std::abs(s - 1.0) > 1e-6)
                throw ValidationError("cluster_contrastive_loss: row " + std::to_string(r) +
                                      " is not a probability distribution (sum " +
                                      std::to_string(s) + ")");
        }

    std::vector<double> inv = inverse_cluster_table(temps);
    // S_qi = <Z1 column q, Z2 column i>; the view-2 anchors use the transpose.
    Tensor s = diff::matmul(diff::transpose(z1), z2);
    Tensor term1 = anchor_infonce_sum(diff::mul_constmat(s, inv));
    Tensor term2 = anchor_infonce_sum(diff::mul_constmat(diff::transpose(s), inv));
    return diff::mul_scalar(diff::add(term1, term2), 1.0 / (2.0 * static_cast<double>(C)));
}

Tensor hyperedge_contrastive_loss(const Tensor& z1, const Tensor& z2,
                                  const std::vector<std::size_t>& shared_orig_ids,
                                  const TemperatureState& temps, bool* warned_empty) {
    if (z1.rows() != z2.rows() || z1.cols() != z2.cols())
        throw ShapeError("hyperedge_contrastive_loss: shape mismatch");
    if (z1.rows() != shared_orig_ids.size())
        throw ShapeError("hyperedge_contrastive_loss: id list does not match rows");
    const std::size_t m = shared_orig_ids.size();
    if (m == 0) {
        if (warned_empty) *warned_empty = true;
        return Tensor::scalar(0.0);
    }
    std::vector<double> inv(m * m);
    for (std::size_t q = 0; q < m; ++q)
        for (std::size_t i = 0; i < m; ++i)
            inv[q * m + i] = 1.0 / temps.edge_tau(shared_orig_ids[q], shared_orig_ids[i]);

    Tensor s = diff::matmul(z1, diff::transpose(z2));  // rows contrast rows
    Tensor term1 = anchor_infonce_sum(diff::mul_constmat(s, inv));
    Tensor term2 = anchor_infonce_sum(diff::mul_constmat(diff::transpose(s), inv));
    return diff::mul_scalar(diff::add(term1, term2), 1.0 / (2.0 * static_cast<double>(m)));
}

// ---------------------------------------------------------------------------
// Cross-validation contrastive losses
// ---------------------------------------------------------------------------

Tensor discriminator_space(const Tensor& z, bool is_cluster, const Tensor& disc_w) {
    return diff::l2_normalize_rows(is_cluster ? diff::matmul(z, disc_w) : z);
}

Tensor node_cluster_loss(const Tensor& zv1, const Tensor& zc1, const Tensor& zv2,
                         const Tensor& zc2, const Tensor& disc_w,
                         const TemperatureState& temps) {
    if (zv1.rows() != zc1.rows() || zv2.rows() != zc2.rows() || zv1.rows() != zv2.rows())
        throw ShapeError("node_cluster_loss: row counts differ");
    const std::size_t n = zv1.rows();
    const double scale = 1.0 / temps.tau_nc;
    Tensor d1 = diff::matmul(discriminator_space(zv1, false, disc_w),
                             diff::transpose(discriminator_space(zc2, true, disc_w)));
    Tensor d2 = diff::matmul(discriminator_space(zv2, false, disc_w),
                             diff::transpose(discriminator_space(zc1, true, disc_w)));
    Tensor total;
    for (const Tensor& d : {d1, d2}) {
        std::vector<std::size_t> diag(n);
        std::iota(diag.begin(), diag.end(), 0);
        Tensor lse = diff::sum_all(diff::logsumexp_rows(d, scale));
        Tensor pos = diff::mul_scalar(diff::sum_all(diff::gather_elems(d, diag, diag)), scale);
        Tensor term = diff::sub(lse, pos);
        total = total.defined() ? diff::add(total, term) : term;
    }
    return diff::mul_scalar(total, 1.0 / (2.0 * static_cast<double>(n)));
}

IncidencePairs view_incidence_pairs(const HypergraphView& view) {
    IncidencePairs pairs;
    for (std::size_t j = 0; j < view.num_edges(); ++j)
        for (std::size_t v : view.members[j]) pairs.emplace_back(v, j);
    return pairs;
}

namespace {

// One direction of the two-sided incident-pair InfoNCE: anchor rows against
// candidate rows, denominators over the full node set (columns of D) and
// the full hyperedge set (rows of D).
Tensor incident_pair_sum(const Tensor& anchors_norm, const Tensor& cands_norm,
                         const IncidencePairs& pairs, double scale) {
    Tensor d = diff::matmul(anchors_norm, diff::transpose(cands_norm));
    std::vector<std::size_t> is(pairs.size()), js(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        is[k] = pairs[k].first;
        js[k] = pairs[k].second;
    }
    Tensor lse_nodes = diff::logsumexp_cols(d, scale);  // over v' for fixed e_j
    Tensor lse_edges = diff::logsumexp_rows(d, scale);  // over e' for fixed v_i
    Tensor sum_cols = diff::sum_all(diff::gather_rows(lse_nodes, js));
    Tensor sum_rows = diff::sum_all(diff::gather_rows(lse_edges, is));
    Tensor sum_pos = diff::mul_scalar(diff::sum_all(diff::gather_elems(d, is, js)), 2.0 * scale);
    return diff::sub(diff::add(sum_cols, sum_rows), sum_pos);
}

Tensor incident_pair_loss(const Tensor& a1, const Tensor& c2, const IncidencePairs& pairs2,
                          const Tensor& a2, const Tensor& c1, const IncidencePairs& pairs1,
                          double tau, bool* warned_empty) {
    const std::size_t total_pairs = pairs1.size() + pairs2.size();
    if (total_pairs == 0) {
        if (warned_empty) *warned_empty = true;
        return Tensor::scalar(0.0);
    }
    const double scale = 1.0 / tau;
    Tensor t1 = incident_pair_sum(a1, c2, pairs2, scale);
    Tensor t2 = incident_pair_sum(a2, c1, pairs1, scale);
    return diff::mul_scalar(diff::add(t1, t2), 1.0 / static_cast<double>(total_pairs));
}

}  // namespace

Tensor node_hyperedge_loss(const Tensor& zv1, const Tensor& ze2, const IncidencePairs& pairs2,
                           const Tensor& zv2, const Tensor& ze1, const IncidencePairs& pairs1,
                           const TemperatureState& temps, bool* warned_empty) {
    Tensor dummy;
    return incident_pair_loss(diff::l2_normalize_rows(zv1), diff::l2_normalize_rows(ze2), pairs2,
                              diff::l2_normalize_rows(zv2), diff::l2_normalize_rows(ze1), pairs1,
                              temps.tau_ne, warned_empty);
}

Tensor hyperedge_cluster_loss(const Tensor& zc1, const Tensor& ze2, const IncidencePairs& pairs2,
                              const Tensor& zc2, const Tensor& ze1, const IncidencePairs& pairs1,
                              const Tensor& disc_w, const TemperatureState& temps,
                              bool* warned_empty) {
    return incident_pair_loss(discriminator_space(zc1, true, disc_w),
                              diff::l2_normalize_rows(ze2), pairs2,
                              discriminator_space(zc2, true, disc_w),
                              diff::l2_normalize_rows(ze1), pairs1, temps.tau_ec, warned_empty);
}

// ---------------------------------------------------------------------------
// Total
// ---------------------------------------------------------------------------

std::pair<Tensor, LossReport> total_loss(const Tensor& sim, const Tensor& cls,
                                         const Tensor& homo, const Tensor& c, const Tensor& e,
                                         const Tensor& nc, const Tensor& ne, const Tensor& ec,
                                         const LossWeights& weights, std::size_t epoch) {
    weights.validate();
    LossReport r;
    r.epoch = epoch;
    const std::pair<const char*, const Tensor*> parts[] = {
        {"L_sim", &sim}, {"L_cls", &cls}, {"L_h", &homo}, {"L_c", &c},
        {"L_e", &e},     {"L_nc", &nc},   {"L_ne", &ne},  {"L_ec", &ec}};
    for (const auto& [name, t] : parts)
        if (!std::isfinite(t->item()))
            throw NumericError(std::string("total_loss: non-finite component ") + name);

    r.sim = sim.item();
    r.cls = cls.item();
    r.h = homo.item();
    r.c = c.item();
    r.e = e.item();
    r.nc = nc.item();
    r.ne = ne.item();
    r.ec = ec.item();

    Tensor basic = diff::add(diff::mul_scalar(c, weights.lambda_c),
                             diff::mul_scalar(e, weights.lambda_e));
    Tensor cross = diff::add(
        diff::add(diff::mul_scalar(nc, weights.lambda_nc), diff::mul_scalar(ne, weights.lambda_ne)),
        diff::mul_scalar(ec, weights.lambda_ec));
    Tensor total = diff::add(diff::add(diff::add(sim, cls), homo), diff::add(basic, cross));

    r.cl = basic.item();
    r.crocl = cross.item();
    r.total = total.item();
    if (!std::isfinite(r.total)) throw NumericError("total_loss: non-finite L_total");
    return {total, r};
}

// ---------------------------------------------------------------------------
// Adaptive distancing
// ---------------------------------------------------------------------------

std::vector<double> relative_penalties(double s_positive, const std::vector<double>& s_negatives,
                                       double tau_positive,
                                       const std::vector<double>& tau_negatives) {
    if (s_negatives.empty())
        throw ParamError("relative_penalties: no negative samples");
    if (s_negatives.size() != tau_negatives.size())
        throw ParamError("relative_penalties: temperature list length mismatch");
    if (!(tau_positive > 0.0))
        throw ParamError("relative_penalties: tau_positive must be > 0");
    (void)s_positive;  // cancels out of the gradient ratio
    double sum_f = 0.0;
    std::vector<double> f(s_negatives.size());
    for (std::size_t i = 0; i < s_negatives.size(); ++i) {
        if (!(tau_negatives[i] > 0.0))
            throw ParamError("relative_penalties: tau_negatives must be > 0");
        f[i] = std::exp(s_negatives[i] / tau_negatives[i]);
        sum_f += f[i];
    }
    if (!(sum_f > 0.0))
        throw NumericError("relative_penalties: positive-gradient denominator vanished");
    std::vector<double> r(s_negatives.size());
    for (std::size_t i = 0; i < s_negatives.size(); ++i)
        r[i] = tau_positive * f[i] / (tau_negatives[i] * sum_f);
    return r;
}

Tensor instance_infonce(const Tensor& s_positive, const Tensor& s_negatives, double tau_positive,
                        const std::vector<double>& tau_negatives) {
    if (s_negatives.rows() != tau_negatives.size() || s_negatives.cols() != 1)
        throw ShapeError("instance_infonce: negatives must be k x 1 with matching temperatures");
    std::vector<double> inv_n(tau_negatives.size());
    for (std::size_t i = 0; i < inv_n.size(); ++i) inv_n[i] = 1.0 / tau_negatives[i];
    Tensor fp = diff::exp_t(diff::mul_scalar(s_positive, 1.0 / tau_positive));
    Tensor fn = diff::exp_t(diff::mul_constmat(s_negatives, inv_n));
    Tensor denom = diff::add(fp, diff::sum_all(fn));
    return diff::sub(diff::log_t(denom), diff::log_t(fp));
}

namespace {

double cosine(const double* a, const double* b, std::size_t n) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double d = std::sqrt(na) * std::sqrt(nb);
    return d > 0 ? dot / d : 0.0;
}

double clamp_sz(double s) { return std::min(std::max(s, 1e-3), 1.0); }

// Class means of (rowsA + rowsB)/2; classes without members are skipped.
std::vector<std::vector<double>> class_centers(
    const Tensor& a, const Tensor& b, const std::vector<std::vector<std::size_t>>& by_class,
    std::vector<std::size_t>* kept, std::vector<std::string>* warnings, const char* side) {
    std::vector<std::vector<double>> centers;
    const std::size_t w = a.cols();
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].empty()) {
            if (warnings)
                warnings->push_back(std::string("adapt_temperatures: class ") +
                                    std::to_string(c) + " has no labeled nodes (" + side +
                                    " side), excluded from centers");
            continue;
        }
        std::vector<double> center(w, 0.0);
        for (std::size_t v : by_class[c])
            for (std::size_t k = 0; k < w; ++k)
                center[k] += 0.5 * (a.at(v, k) + b.at(v, k));
        for (double& x : center) x /= static_cast<double>(by_class[c].size());
        centers.push_back(std::move(center));
        if (kept) kept->push_back(c);
    }
    return centers;
}

// Mean pairwise cosine; NaN when fewer than two centers exist.
double mean_pairwise_cosine(const std::vector<std::vector<double>>& centers) {
    if (centers.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            sum += cosine(centers[i].data(), centers[j].data(), centers[i].size());
            ++count;
        }
    return sum / static_cast<double>(count);
}

}  // namespace

void adapt_temperatures(TemperatureState& state, const Tensor& zc1, const Tensor& zc2,
                        const Tensor& zv1, const Tensor& zv2, const Tensor& ze1_aligned,
                        const Tensor& ze2_aligned,
                        const std::vector<std::size_t>& shared_orig_ids,
                        const std::vector<std::vector<std::size_t>>& train_ids_by_class,
                        std::size_t epoch, std::vector<std::string>* warnings) {
    state.epoch = epoch;
    const std::size_t C = state.num_classes;
    if (zc1.cols() != C || zc2.cols() != C)
        throw ShapeError("adapt_temperatures: cluster matrices do not match the class count");

    // Cluster side: labeled class centers of the averaged cluster rows.
    auto centers_c = class_centers(zc1, zc2, train_ids_by_class, nullptr, warnings, "cluster");
    state.m_bar_c = mean_pairwise_cosine(centers_c);
    const bool adapt_c = std::isfinite(state.m_bar_c) && state.m_bar_c < state.eps_c;
    state.cluster_adapted = adapt_c;
    if (!adapt_c) {
        for (std::size_t q = 0; q < C; ++q)
            for (std::size_t i = 0; i < C; ++i)
                state.cluster_table[q * C + i] = (q == i) ? state.tau_c : state.tau_c_ub;
    } else {
        // Column cosines between the two views' cluster matrices.
        const std::size_t n = zc1.rows();
        for (std::size_t q = 0; q < C; ++q) {
            for (std::size_t i = 0; i < C; ++i) {
                if (q == i) {
                    state.cluster_table[q * C + i] = state.tau_c;
                    continue;
                }
                double dot = 0, nq = 0, ni = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double x = zc1.at(r, q);
                    const double y = zc2.at(r, i);
                    dot += x * y;
                    nq += x * x;
                    ni += y * y;
                }
                const double den = std::sqrt(nq) * std::sqrt(ni);
                const double sz = clamp_sz(den > 0 ? dot / den : 0.0);
                state.cluster_table[q * C + i] = state.tau_c_ub / sz;
            }
        }
    }

    // Hyperedge side: one constructed hyperedge per class, represented by
    // the mean of its members' node projections.
    auto reps = class_centers(zv1, zv2, train_ids_by_class, nullptr, warnings, "hyperedge");
    state.m_bar_e = mean_pairwise_cosine(reps);
    const bool adapt_e = std::isfinite(state.m_bar_e) && state.m_bar_e < state.eps_e;
    state.edge_adapted = adapt_e;
    const std::size_t E = state.num_edges;
    if (!adapt_e) {
        for (std::size_t q = 0; q < E; ++q)
            for (std::size_t i = 0; i < E; ++i)
                state.edge_table[q * E + i] = (q == i) ? state.tau_e : state.tau_e_ub;
    } else {
        std::fill(state.edge_table.begin(), state.edge_table.end(), state.tau_e);
        if (ze1_aligned.rows() != shared_orig_ids.size() ||
            ze2_aligned.rows() != shared_orig_ids.size())
            throw ShapeError("adapt_temperatures: aligned hyperedge projections do not match ids");
        const std::size_t m = shared_orig_ids.size();
        const std::size_t w = ze1_aligned.cols();
        std::vector<double> n1(m), n2(m);
        for (std::size_t r = 0; r < m; ++r) {
            double s1 = 0, s2 = 0;
            for (std::size_t k = 0; k < w; ++k) {
                s1 += ze1_aligned.at(r, k) * ze1_aligned.at(r, k);
                s2 += ze2_aligned.at(r, k) * ze2_aligned.at(r, k);
            }
            n1[r] = std::sqrt(s1);
            n2[r] = std::sqrt(s2);
        }
        for (std::size_t q = 0; q < m; ++q) {
            for (std::size_t i = 0; i < m; ++i) {
                if (shared_orig_ids[q] == shared_orig_ids[i]) continue;
                double dot = 0;
                for (std::size_t k = 0; k < w; ++k)
                    dot += ze1_aligned.at(q, k) * ze2_aligned.at(i, k);
                const double den = n1[q] * n2[i];
                const double sz = clamp_sz(den > 0 ? dot / den : 0.0);
                state.edge_table[shared_orig_ids[q] * E + shared_orig_ids[i]] = state.tau_e / sz;
            }
        }
    }
}

}  // namespace chgnn
