// Regularized negative log-likelihood training with L-BFGS.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "quantag/features.hpp"
#include "quantag/inference.hpp"
#include "quantag/lattice.hpp"

namespace quantag {

class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double lambda = 0.01;
    int history = 10;
    int max_iterations = 200;
    double objective_rel_tol = 1e-6;
    double gradient_tol = 1e-5;
    uint64_t seed = 1;
    int jobs = 0;  // 0 -> hardware concurrency
    bool verbose = false;
};

struct TrainingInstance {
    Lattice full;
    Lattice clamped;
    SignAssignment gold;
    std::string problem_id;
};

using AnnotationMap = std::map<std::string, AnnotationSidecar>;

// Builds full+clamped lattices for every problem carrying gold signs,
// growing `dict` as features are first seen. Order follows `problems`.
std::vector<TrainingInstance> build_training_instances(const std::vector<Problem>& problems,
                                                       Variant variant, int window,
                                                       FeatureDictionary& dict,
                                                       const AnnotationMap* annotations);

// objective = sum_i [logZ_i - logZ_clamped_i] + (lambda/2) ||w||^2
// gradient  = sum_i [E_full f - E_clamped f] + lambda w     (when grad != nullptr)
// Per-instance terms may run in parallel; reduction is in instance order.
double objective_and_gradient(const std::vector<TrainingInstance>& batch,
                              const std::vector<double>& weights, double lambda,
                              std::vector<double>* grad, int jobs = 1);

// Objective callable: value, optionally gradient.
using Objective = std::function<double(const std::vector<double>&, std::vector<double>*)>;

struct MinimizeResult {
    std::vector<double> weights;
    double objective = 0.0;
    int iterations = 0;
    std::string stop_reason;
    std::vector<double> trace;  // objective after each accepted step
};

// Limited-memory BFGS with Armijo backtracking. Throws TrainingError on
// non-finite values.
MinimizeResult minimize(const Objective& f, std::vector<double> init, const TrainConfig& cfg);

struct GradientCheckReport {
    double max_rel_error = 0.0;
    uint32_t worst_coordinate = 0;
    int coords_checked = 0;
    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Central differences over >= min_coords sampled coordinates (all fired
// features first, padded from the rest of the dictionary).
GradientCheckReport gradient_check(const std::vector<TrainingInstance>& batch,
                                   const std::vector<double>& weights, double lambda,
                                   double step, std::size_t min_coords, uint64_t seed,
                                   std::size_t dict_size, int jobs = 1);

struct Model {
    Variant variant = Variant::QT;
    int window = 1;  // kFullWindow for the whole-text setting
    double lambda = 0.01;
    std::shared_ptr<FeatureDictionary> dict;
    std::vector<double> weights;
    uint64_t seed = 0;
    int iterations = 0;
    double final_objective = 0.0;
    std::string stop_reason;
};

Model train_model(const std::vector<Problem>& train, Variant variant, int window,
                  const TrainConfig& cfg, const AnnotationMap* annotations = nullptr,
                  MinimizeResult* details = nullptr);

struct WindowCandidateScore {
    int window = 1;
    double dev_accuracy = 0.0;
};

struct TuneResult {
    int best_window = 1;
    std::vector<WindowCandidateScore> table;
};

// Seeded 80/20 split of `train`; trains per candidate window and picks the
// one with the best dev solution accuracy (ties -> the earlier candidate).
TuneResult tune_window(const std::vector<Problem>& train, Variant variant,
                       const std::vector<int>& candidates, const TrainConfig& cfg,
                       const AnnotationMap* annotations = nullptr);

std::vector<int> default_window_candidates();  // {1..6, FULL}

struct Prediction {
    SignAssignment signs;
    std::vector<std::pair<int, int>> spans;  // source-token ranges, -1,-1 if outside
    Equation equation;
    std::string equation_text;
    Rational solution;
    double score = 0.0;
};

Prediction predict_problem(const Model& model, const Problem& problem,
                           const AnnotationSidecar* sidecar = nullptr);

}  // namespace quantag
