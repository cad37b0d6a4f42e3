#include "chgnn/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace chgnn {

namespace {

double stable_sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// |a ∩ b| for sorted id lists.
std::size_t sorted_intersection_size(const std::vector<std::size_t>& a,
                                     const std::vector<std::size_t>& b) {
    std::size_t i = 0, j = 0, count = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else { ++count; ++i; ++j; }
    }
    return count;
}

std::vector<std::vector<std::size_t>> build_egonets(const Hypergraph& h) {
    std::vector<std::vector<std::size_t>> ego(h.num_nodes);
    for (std::size_t e = 0; e < h.hyperedges.size(); ++e)
        for (std::size_t v : h.hyperedges[e]) ego[v].push_back(e);
    return ego;
}

}  // namespace

void Hypergraph::validate() const {
    if (num_classes == 0 && has_labels())
        throw ValidationError("num_classes must be positive when labels are present");
    for (std::size_t e = 0; e < hyperedges.size(); ++e) {
        const auto& edge = hyperedges[e];
        if (edge.empty())
            throw ValidationError("empty hyperedge at index " + std::to_string(e));
        for (std::size_t i = 0; i < edge.size(); ++i) {
            if (edge[i] >= num_nodes)
                throw ValidationError("node id out of range in hyperedge " + std::to_string(e) +
                                      ": " + std::to_string(edge[i]) + " >= " +
                                      std::to_string(num_nodes));
            if (i > 0 && edge[i] == edge[i - 1])
                throw ValidationError("duplicate node id " + std::to_string(edge[i]) +
                                      " in hyperedge " + std::to_string(e));
        }
    }
    if (features.size() != num_nodes)
        throw ValidationError("features has " + std::to_string(features.size()) +
                              " rows, expected " + std::to_string(num_nodes));
    for (std::size_t v = 0; v < features.size(); ++v) {
        if (features[v].size() != feature_dim)
            throw ValidationError("feature row " + std::to_string(v) + " has " +
                                  std::to_string(features[v].size()) + " entries, expected " +
                                  std::to_string(feature_dim));
        for (double x : features[v])
            if (!std::isfinite(x))
                throw ValidationError("non-finite feature value at node " + std::to_string(v));
    }
    if (has_labels()) {
        if (labels.size() != num_nodes)
            throw ValidationError("labels has " + std::to_string(labels.size()) +
                                  " entries, expected " + std::to_string(num_nodes));
        for (std::size_t v = 0; v < labels.size(); ++v)
            if (labels[v] < 0 || static_cast<std::size_t>(labels[v]) >= num_classes)
                throw ValidationError("label out of range at node " + std::to_string(v) + ": " +
                                      std::to_string(labels[v]));
    }
    if (file_split) {
        std::set<std::size_t> train(file_split->train_ids.begin(), file_split->train_ids.end());
        for (std::size_t id : file_split->train_ids)
            if (id >= num_nodes)
                throw ValidationError("split train id out of range: " + std::to_string(id));
        for (std::size_t id : file_split->test_ids) {
            if (id >= num_nodes)
                throw ValidationError("split test id out of range: " + std::to_string(id));
            if (train.count(id))
                throw ValidationError("node " + std::to_string(id) +
                                      " appears in both train and test splits");
        }
    }
}

std::vector<std::size_t> egonet(const Hypergraph& h, std::size_t v) {
    if (v >= h.num_nodes)
        throw ParamError("egonet: node id " + std::to_string(v) + " out of range " +
                         std::to_string(h.num_nodes));
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < h.hyperedges.size(); ++e)
        if (std::binary_search(h.hyperedges[e].begin(), h.hyperedges[e].end(), v))
            out.push_back(e);
    return out;
}

double homogeneity(const Hypergraph& h, std::size_t e,
                   const std::vector<std::vector<std::size_t>>& egonets) {
    if (e >= h.hyperedges.size())
        throw ParamError("homogeneity: hyperedge index " + std::to_string(e) + " out of range");
    const auto& edge = h.hyperedges[e];
    if (edge.size() <= 1) return 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < edge.size(); ++i)
        for (std::size_t j = i + 1; j < edge.size(); ++j)
            sum += static_cast<double>(
                sorted_intersection_size(egonets[edge[i]], egonets[edge[j]]));
    const double pairs = static_cast<double>(edge.size() * (edge.size() - 1) / 2);
    return stable_sigmoid(sum / pairs);
}

double homogeneity(const Hypergraph& h, std::size_t e) {
    return homogeneity(h, e, build_egonets(h));
}

double overlapness(const Hypergraph& h, std::size_t v,
                   const std::vector<std::vector<std::size_t>>& egonets) {
    if (v >= h.num_nodes)
        throw ParamError("overlapness: node id " + std::to_string(v) + " out of range");
    const auto& ego = egonets[v];
    if (ego.empty()) return 1.0;  // isolated node: minimally important
    std::size_t total = 0;
    std::set<std::size_t> distinct;
    for (std::size_t e : ego) {
        total += h.hyperedges[e].size();
        distinct.insert(h.hyperedges[e].begin(), h.hyperedges[e].end());
    }
    return static_cast<double>(total) / static_cast<double>(distinct.size());
}

double overlapness(const Hypergraph& h, std::size_t v) {
    return overlapness(h, v, build_egonets(h));
}

std::vector<double> mask_probabilities(const Hypergraph& h, double p_node, double p_tau) {
    if (p_node < 0.0 || p_node > 1.0)
        throw ParamError("mask_probabilities: p_node must be in [0,1], got " +
                         std::to_string(p_node));
    if (p_tau < 0.0 || p_tau > 1.0)
        throw ParamError("mask_probabilities: p_tau must be in [0,1], got " +
                         std::to_string(p_tau));
    auto stats = structural_stats(h, p_node, p_tau);
    return stats.mask_prob;
}

StructuralStats structural_stats(const Hypergraph& h, double p_node, double p_tau) {
    if (p_node < 0.0 || p_node > 1.0)
        throw ParamError("structural_stats: p_node must be in [0,1], got " +
                         std::to_string(p_node));
    if (p_tau < 0.0 || p_tau > 1.0)
        throw ParamError("structural_stats: p_tau must be in [0,1], got " +
                         std::to_string(p_tau));

    StructuralStats s;
    s.egonets = build_egonets(h);
    s.homogeneity.resize(h.hyperedges.size());
    for (std::size_t e = 0; e < h.hyperedges.size(); ++e)
        s.homogeneity[e] = homogeneity(h, e, s.egonets);

    s.overlapness.resize(h.num_nodes);
    s.log_overlapness.resize(h.num_nodes);
    for (std::size_t v = 0; v < h.num_nodes; ++v) {
        s.overlapness[v] = overlapness(h, v, s.egonets);
        s.log_overlapness[v] = std::log(s.overlapness[v]);
    }

    if (h.num_nodes == 0) return s;
    s.w_nmax = *std::max_element(s.log_overlapness.begin(), s.log_overlapness.end());
    double sum = 0.0;
    for (double w : s.log_overlapness) sum += w;
    s.w_navg = sum / static_cast<double>(h.num_nodes);

    s.mask_prob.resize(h.num_nodes);
    const double denom = s.w_nmax - s.w_navg;
    for (std::size_t v = 0; v < h.num_nodes; ++v) {
        double p;
        if (denom <= 1e-15) {
            p = std::min(p_node, p_tau);  // uniform importance, uniform masking
        } else {
            p = (s.w_nmax - s.log_overlapness[v]) / denom * p_node;
            p = std::min(p, p_tau);
            p = std::max(p, 0.0);
        }
        s.mask_prob[v] = p;
    }
    return s;
}

// ---------------------------------------------------------------------------
// JSON IO
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json require_field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field \"") + name + "\"");
    return *it;
}

Hypergraph parse_hypergraph(const json& j) {
    if (!j.is_object()) throw ParseError("top-level value is not an object");
    Hypergraph h;
    try {
        h.num_nodes = require_field(j, "num_nodes").get<std::size_t>();
    } catch (const json::exception&) {
        throw ParseError("field \"num_nodes\" is not a non-negative integer");
    }
    if (j.contains("num_classes")) {
        try {
            h.num_classes = j["num_classes"].get<std::size_t>();
        } catch (const json::exception&) {
            throw ParseError("field \"num_classes\" is not a non-negative integer");
        }
    }

    const json je = require_field(j, "hyperedges");
    if (!je.is_array()) throw ParseError("field \"hyperedges\" is not an array");
    h.hyperedges.reserve(je.size());
    for (std::size_t e = 0; e < je.size(); ++e) {
        if (!je[e].is_array())
            throw ParseError("field \"hyperedges\" entry " + std::to_string(e) +
                             " is not an array");
        std::vector<std::size_t> edge;
        edge.reserve(je[e].size());
        for (const auto& v : je[e]) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                throw ParseError("field \"hyperedges\" entry " + std::to_string(e) +
                                 " contains a non-integer node id");
            edge.push_back(v.get<std::size_t>());
        }
        std::sort(edge.begin(), edge.end());
        h.hyperedges.push_back(std::move(edge));
    }

    const json jf = require_field(j, "features");
    if (!jf.is_array()) throw ParseError("field \"features\" is not an array");
    h.features.reserve(jf.size());
    for (std::size_t r = 0; r < jf.size(); ++r) {
        if (!jf[r].is_array())
            throw ParseError("field \"features\" row " + std::to_string(r) + " is not an array");
        std::vector<double> row;
        row.reserve(jf[r].size());
        for (const auto& x : jf[r]) {
            if (!x.is_number())
                throw ParseError("field \"features\" row " + std::to_string(r) +
                                 " contains a non-numeric value");
            row.push_back(x.get<double>());
        }
        h.features.push_back(std::move(row));
    }
    h.feature_dim = h.features.empty() ? 0 : h.features[0].size();

    if (j.contains("labels") && !j["labels"].is_null()) {
        const json& jl = j["labels"];
        if (!jl.is_array()) throw ParseError("field \"labels\" is not an array");
        h.labels.reserve(jl.size());
        for (const auto& y : jl) {
            if (!y.is_number_integer())
                throw ParseError("field \"labels\" contains a non-integer value");
            h.labels.push_back(y.get<int>());
        }
    }

    if (j.contains("splits") && !j["splits"].is_null()) {
        const json& js = j["splits"];
        if (!js.is_object()) throw ParseError("field \"splits\" is not an object");
        SplitSpec split;
        for (const auto& v : require_field(js, "train")) {
            if (!v.is_number_integer()) throw ParseError("field \"splits.train\" is not integral");
            split.train_ids.push_back(v.get<std::size_t>());
        }
        for (const auto& v : require_field(js, "test")) {
            if (!v.is_number_integer()) throw ParseError("field \"splits.test\" is not integral");
            split.test_ids.push_back(v.get<std::size_t>());
        }
        h.file_split = std::move(split);
    }

    h.validate();
    return h;
}

}  // namespace

Hypergraph hypergraph_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    return parse_hypergraph(j);
}

Hypergraph load_hypergraph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return hypergraph_from_json_text(buf.str());
}

std::string hypergraph_to_json_text(const Hypergraph& h) {
    json j;
    j["num_nodes"] = h.num_nodes;
    j["num_classes"] = h.num_classes;
    j["hyperedges"] = h.hyperedges;
    j["features"] = h.features;
    if (h.has_labels()) j["labels"] = h.labels;
    if (h.file_split) {
        j["splits"] = {{"train", h.file_split->train_ids}, {"test", h.file_split->test_ids}};
    }
    return j.dump();
}

void save_hypergraph(const Hypergraph& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    out << hypergraph_to_json_text(h);
    if (!out) throw IoError("write failed: " + path);
}

diff::SparseMatrix features_as_sparse(const Hypergraph& h) {
    return diff::SparseMatrix::from_dense(h.features, h.feature_dim);
}

}  // namespace chgnn
