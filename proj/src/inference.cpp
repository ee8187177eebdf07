#include "quantag/inference.hpp"

#include <algorithm>
#include <cmath>

#include "quantag/util.hpp"

namespace quantag {

namespace {

void check_weights(const std::vector<double>& w) {
    for (double x : w)
        if (!std::isfinite(x)) throw InferenceError("non-finite weight entry");
}

// alpha[v] = node_score[v] + lse over incoming (alpha[from] + edge_score).
std::vector<double> forward_log(const Lattice& lat, const LocalScores& sc) {
    std::vector<double> alpha(lat.nodes.size(), kNegInf);
    std::vector<char> is_start(lat.nodes.size(), 0);
    for (uint32_t v : lat.start_nodes) is_start[v] = 1;
    for (uint32_t v = 0; v < lat.nodes.size(); ++v) {
        LogSumExp acc;
        if (is_start[v]) acc.add(0.0);
        for (uint32_t i = lat.in_offsets[v]; i < lat.in_offsets[v + 1]; ++i) {
            const auto& e = lat.edges[lat.in_edges[i]];
            acc.add(alpha[e.from] + sc.edge_scores[lat.in_edges[i]]);
        }
        double in = acc.value();
        alpha[v] = in == kNegInf ? kNegInf : in + sc.node_scores[v];
    }
    return alpha;
}

std::vector<double> backward_log(const Lattice& lat, const LocalScores& sc) {
    std::vector<double> beta(lat.nodes.size(), kNegInf);
    std::vector<char> is_end(lat.nodes.size(), 0);
    for (uint32_t v : lat.end_nodes) is_end[v] = 1;
    for (uint32_t v = static_cast<uint32_t>(lat.nodes.size()); v-- > 0;) {
        LogSumExp acc;
        if (is_end[v]) acc.add(0.0);
        for (uint32_t i = lat.out_offsets[v]; i < lat.out_offsets[v + 1]; ++i) {
            uint32_t ei = lat.out_edges[i];
            const auto& e = lat.edges[ei];
            acc.add(sc.edge_scores[ei] + sc.node_scores[e.to] + beta[e.to]);
        }
        beta[v] = acc.value();
    }
    return beta;
}

double partition_from_alpha(const Lattice& lat, const std::vector<double>& alpha) {
    LogSumExp z;
    for (uint32_t v : lat.end_nodes) z.add(alpha[v]);
    double logz = z.value();
    if (logz == kNegInf) throw InferenceError("lattice admits no path (empty clamp?)");
    return logz;
}

}  // namespace

LocalScores compute_scores(const Lattice& lat, const std::vector<double>& weights) {
    const FeaturePool& pool = *lat.pool;
    LocalScores sc;
    std::vector<double> w_local(pool.global_ids.size());
    for (std::size_t i = 0; i < pool.global_ids.size(); ++i) {
        uint32_t gid = pool.global_ids[i];
        w_local[i] = gid < weights.size() ? weights[gid] : 0.0;
    }
    sc.pool_scores.resize(pool.vecs.size());
    for (std::size_t i = 0; i < pool.vecs.size(); ++i) {
        double s = 0.0;
        for (const auto& [lid, val] : pool.vecs[i].items) s += w_local[lid] * val;
        sc.pool_scores[i] = s;
    }
    sc.node_scores.resize(lat.nodes.size());
    for (std::size_t v = 0; v < lat.nodes.size(); ++v)
        sc.node_scores[v] = sc.pool_scores[lat.nodes[v].feat];
    sc.edge_scores.resize(lat.edges.size());
    for (std::size_t e = 0; e < lat.edges.size(); ++e)
        sc.edge_scores[e] = sc.pool_scores[lat.edges[e].feat];
    return sc;
}

double log_partition(const Lattice& lat, const std::vector<double>& weights) {
    check_weights(weights);
    LocalScores sc = compute_scores(lat, weights);
    return partition_from_alpha(lat, forward_log(lat, sc));
}

double clamped_log_partition(const Lattice& lat, const std::vector<double>& weights,
                             const SignAssignment& y) {
    return log_partition(clamp(lat, y), weights);
}

std::vector<double> local_expected_features(const Lattice& lat, const LocalScores& sc,
                                            const std::vector<double>& node_marginals,
                                            const std::vector<double>& edge_marginals) {
    (void)sc;
    const FeaturePool& pool = *lat.pool;
    std::vector<double> acc(pool.global_ids.size(), 0.0);
    for (std::size_t v = 0; v < lat.nodes.size(); ++v) {
        double m = node_marginals[v];
        if (m == 0.0) continue;
        for (const auto& [lid, val] : pool.vecs[lat.nodes[v].feat].items) acc[lid] += m * val;
    }
    for (std::size_t e = 0; e < lat.edges.size(); ++e) {
        double m = edge_marginals[e];
        if (m == 0.0) continue;
        for (const auto& [lid, val] : pool.vecs[lat.edges[e].feat].items) acc[lid] += m * val;
    }
    return acc;
}

InferenceResult posterior_expected_features(const Lattice& lat,
                                            const std::vector<double>& weights,
                                            const SignAssignment* clamp_to) {
    check_weights(weights);
    if (clamp_to) {
        Lattice sub = clamp(lat, *clamp_to);
        return posterior_expected_features(sub, weights, nullptr);
    }
    LocalScores sc = compute_scores(lat, weights);
    std::vector<double> alpha = forward_log(lat, sc);
    std::vector<double> beta = backward_log(lat, sc);
    double logz = partition_from_alpha(lat, alpha);

    InferenceResult res;
    res.log_partition = logz;
    res.node_marginals.resize(lat.nodes.size());
    for (std::size_t v = 0; v < lat.nodes.size(); ++v) {
        double lp = alpha[v] + beta[v] - logz;
        res.node_marginals[v] = lp == kNegInf ? 0.0 : std::exp(lp);
    }
    res.edge_marginals.resize(lat.edges.size());
    for (std::size_t ei = 0; ei < lat.edges.size(); ++ei) {
        const auto& e = lat.edges[ei];
        double lp = alpha[e.from] + sc.edge_scores[ei] + sc.node_scores[e.to] + beta[e.to] - logz;
        res.edge_marginals[ei] = lp == kNegInf || std::isnan(lp) ? 0.0 : std::exp(lp);
    }

    std::vector<double> local =
        local_expected_features(lat, sc, res.node_marginals, res.edge_marginals);
    res.expected_features.reserve(local.size());
    for (std::size_t i = 0; i < local.size(); ++i)
        res.expected_features.push_back({lat.pool->global_ids[i], local[i]});
    return res;
}

LatticePath map_decode(const Lattice& lat, const std::vector<double>& weights) {
    check_weights(weights);
    LocalScores sc = compute_scores(lat, weights);

    // beta_max[v] = node_score[v] + best continuation; cont_max kept separate
    // so the greedy walk can test candidates with bit-identical arithmetic.
    std::vector<double> beta_max(lat.nodes.size(), kNegInf);
    std::vector<double> cont_max(lat.nodes.size(), kNegInf);
    std::vector<char> is_end(lat.nodes.size(), 0);
    for (uint32_t v : lat.end_nodes) is_end[v] = 1;

    for (uint32_t v = static_cast<uint32_t>(lat.nodes.size()); v-- > 0;) {
        double best = kNegInf;
        for (uint32_t i = lat.out_offsets[v]; i < lat.out_offsets[v + 1]; ++i) {
            uint32_t ei = lat.out_edges[i];
            best = std::max(best, sc.edge_scores[ei] + beta_max[lat.edges[ei].to]);
        }
        cont_max[v] = best;
        if (is_end[v]) {
            beta_max[v] = sc.node_scores[v];
        } else if (best != kNegInf) {
            beta_max[v] = sc.node_scores[v] + best;
        }
    }

    double total = kNegInf;
    for (uint32_t v : lat.start_nodes) total = std::max(total, beta_max[v]);
    if (total == kNegInf) throw InferenceError("lattice admits no path");

    auto lex_less = [&](uint32_t a, uint32_t b) {
        auto ea = lat.node_expansion(a), eb = lat.node_expansion(b);
        std::size_t m = std::min(ea.size(), eb.size());
        for (std::size_t i = 0; i < m; ++i) {
            if (ea[i].order() != eb[i].order()) return ea[i].order() < eb[i].order();
        }
        // A strict prefix continues with an L or N label, which precedes the
        // longer candidate's R at the same position.
        return ea.size() < eb.size();
    };

    std::vector<uint32_t> nodes;
    uint32_t current = UINT32_MAX;
    for (uint32_t v : lat.start_nodes) {
        if (beta_max[v] != total) continue;
        if (current == UINT32_MAX || lex_less(v, current)) current = v;
    }
    nodes.push_back(current);
    while (true) {
        if (is_end[current]) break;  // end nodes have no outgoing edges
        uint32_t next = UINT32_MAX;
        for (uint32_t i = lat.out_offsets[current]; i < lat.out_offsets[current + 1]; ++i) {
            uint32_t ei = lat.out_edges[i];
            uint32_t v = lat.edges[ei].to;
            if (sc.edge_scores[ei] + beta_max[v] != cont_max[current]) continue;
            if (next == UINT32_MAX || lex_less(v, next)) next = v;
        }
        if (next == UINT32_MAX) throw InferenceError("decode walk lost the optimal path");
        nodes.push_back(next);
        current = next;
    }

    LatticePath path = make_path(lat, std::move(nodes));
    path.score = score_path(lat, path, weights);
    return path;
}

}  // namespace quantag
