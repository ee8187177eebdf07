// Exact log-domain inference: partition values, marginals, expectations, MAP.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "quantag/lattice.hpp"

namespace quantag {

class InferenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct InferenceResult {
    double log_partition = 0.0;
    std::vector<double> node_marginals;  // per lattice node
    std::vector<double> edge_marginals;  // per lattice edge
    // (dictionary index, expected value), sorted by index; zero entries kept
    // so the caller can subtract two results positionally when shapes match.
    std::vector<std::pair<uint32_t, double>> expected_features;
};

double log_partition(const Lattice& lat, const std::vector<double>& weights);

double clamped_log_partition(const Lattice& lat, const std::vector<double>& weights,
                             const SignAssignment& y);

// Forward-backward marginals and E_p[f]. With `clamp_to`, the distribution is
// p(h | t, y); otherwise p(y, h | t).
InferenceResult posterior_expected_features(const Lattice& lat,
                                            const std::vector<double>& weights,
                                            const SignAssignment* clamp_to = nullptr);

// Highest-scoring path; exact ties resolved toward the lexicographically
// smallest label sequence under L+ < L0 < L- < N+ < N0 < N- < R+ < R0 < R- < O.
LatticePath map_decode(const Lattice& lat, const std::vector<double>& weights);

// Node and edge scores under `weights`; shared by inference and training.
struct LocalScores {
    std::vector<double> pool_scores;  // per pool vector
    std::vector<double> node_scores;  // per node
    std::vector<double> edge_scores;  // per edge
};
LocalScores compute_scores(const Lattice& lat, const std::vector<double>& weights);

// E_p[f] accumulated over lattice-local feature ids (pool index space).
std::vector<double> local_expected_features(const Lattice& lat, const LocalScores& scores,
                                            const std::vector<double>& node_marginals,
                                            const std::vector<double>& edge_marginals);

}  // namespace quantag
