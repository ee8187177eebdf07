#include "quantag/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "quantag/equation.hpp"
#include "quantag/util.hpp"

namespace quantag {

namespace {

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(resolve_jobs(jobs)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(run);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

std::vector<TrainingInstance> build_training_instances(const std::vector<Problem>& problems,
                                                       Variant variant, int window,
                                                       FeatureDictionary& dict,
                                                       const AnnotationMap* annotations) {
    std::vector<TrainingInstance> out;
    for (const auto& p : problems) {
        if (!p.gold_signs) continue;
        const AnnotationSidecar* sidecar = nullptr;
        if (annotations) {
            auto it = annotations->find(p.id);
            if (it != annotations->end()) sidecar = &it->second;
        }
        FeatureExtractor fx(p, &dict, sidecar);
        TokenSequence t = build_token_sequence(p, window);
        TrainingInstance inst;
        inst.full = build_lattice(t, variant, fx);
        inst.clamped = clamp(inst.full, *p.gold_signs);
        inst.gold = *p.gold_signs;
        inst.problem_id = p.id;
        out.push_back(std::move(inst));
    }
    return out;
}

double objective_and_gradient(const std::vector<TrainingInstance>& batch,
                              const std::vector<double>& weights, double lambda,
                              std::vector<double>* grad, int jobs) {
    struct Term {
        double obj = 0.0;
        std::vector<double> diff;  // aligned with full.pool->global_ids
    };
    std::vector<Term> terms(batch.size());

    parallel_for(batch.size(), jobs, [&](std::size_t i) {
        const TrainingInstance& inst = batch[i];
        Term& term = terms[i];
        if (grad) {
            InferenceResult full = posterior_expected_features(inst.full, weights);
            InferenceResult cl = posterior_expected_features(inst.clamped, weights);
            term.obj = full.log_partition - cl.log_partition;
            // Full and clamped lattices share one pool, so the expected
            // feature vectors are positionally aligned.
            term.diff.resize(full.expected_features.size());
            for (std::size_t k = 0; k < term.diff.size(); ++k)
                term.diff[k] =
                    full.expected_features[k].second - cl.expected_features[k].second;
        } else {
            term.obj = log_partition(inst.full, weights) -
                       log_partition(inst.clamped, weights);
        }
    });

    if (grad) grad->assign(weights.size(), 0.0);
    double obj = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        obj += terms[i].obj;
        if (grad) {
            const auto& gids = batch[i].full.pool->global_ids;
            for (std::size_t k = 0; k < terms[i].diff.size(); ++k)
                (*grad)[gids[k]] += terms[i].diff[k];
        }
    }
    if (lambda != 0.0) {
        double sq = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            sq += weights[j] * weights[j];
            if (grad) (*grad)[j] += lambda * weights[j];
        }
        obj += 0.5 * lambda * sq;
    }
    if (!std::isfinite(obj)) throw TrainingError("non-finite training objective");
    return obj;
}

MinimizeResult minimize(const Objective& f, std::vector<double> x, const TrainConfig& cfg) {
    const std::size_t dim = x.size();
    std::vector<double> g(dim, 0.0);
    double fx = f(x, &g);
    if (!std::isfinite(fx)) throw TrainingError("objective not finite at the initial point");

    MinimizeResult res;
    res.trace.push_back(fx);
    res.stop_reason = "max_iterations";

    std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)
    std::deque<double> rhos;
    std::vector<double> d(dim), xnew(dim), gnew(dim);
    const double c1 = 1e-4;

    int iter = 0;
    while (iter < cfg.max_iterations) {
        if (inf_norm(g) < cfg.gradient_tol) {
            res.stop_reason = "gradient_tolerance";
            break;
        }

        // Two-loop recursion for d = -H g.
        d = g;
        std::vector<double> alphas(pairs.size());
        for (std::size_t idx = pairs.size(); idx-- > 0;) {
            const auto& [s, y] = pairs[idx];
            alphas[idx] = rhos[idx] * dot(s, d);
            for (std::size_t j = 0; j < dim; ++j) d[j] -= alphas[idx] * y[j];
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            double gamma = dot(s, y) / dot(y, y);
            for (auto& v : d) v *= gamma;
        }
        for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
            const auto& [s, y] = pairs[idx];
            double beta = rhos[idx] * dot(y, d);
            for (std::size_t j = 0; j < dim; ++j) d[j] += (alphas[idx] - beta) * s[j];
        }
        for (auto& v : d) v = -v;

        double dg = dot(d, g);
        if (dg >= 0.0) {  // not a descent direction; fall back to steepest descent
            for (std::size_t j = 0; j < dim; ++j) d[j] = -g[j];
            dg = -dot(g, g);
            if (dg == 0.0) {
                res.stop_reason = "gradient_tolerance";
                break;
            }
        }

        double step = pairs.empty() ? std::min(1.0, 1.0 / std::max(1.0, inf_norm(g))) : 1.0;
        bool accepted = false, have_grad = false;
        double fnew = fx;
        for (int trial = 0; trial < 60; ++trial) {
            for (std::size_t j = 0; j < dim; ++j) xnew[j] = x[j] + step * d[j];
            bool want_grad = trial == 0;
            fnew = f(xnew, want_grad ? &gnew : nullptr);
            if (std::isfinite(fnew) && fnew <= fx + c1 * step * dg) {
                accepted = true;
                have_grad = want_grad;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.stop_reason = "line_search_failed";
            break;
        }
        if (!have_grad) fnew = f(xnew, &gnew);
        if (!std::isfinite(fnew)) throw TrainingError("objective became non-finite");

        std::vector<double> s(dim), y(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            s[j] = xnew[j] - x[j];
            y[j] = gnew[j] - g[j];
        }
        double sy = dot(s, y);
        if (sy > 1e-10) {
            pairs.push_back({std::move(s), std::move(y)});
            rhos.push_back(1.0 / sy);
            if (static_cast<int>(pairs.size()) > cfg.history) {
                pairs.pop_front();
                rhos.pop_front();
            }
        }

        double rel = std::abs(fx - fnew) / std::max({1.0, std::abs(fx), std::abs(fnew)});
        x.swap(xnew);
        g.swap(gnew);
        fx = fnew;
        ++iter;
        res.trace.push_back(fx);
        if (cfg.verbose)
            std::cerr << "iter " << iter << " objective " << fx << " step " << step << "\n";
        if (rel < cfg.objective_rel_tol) {
            res.stop_reason = "objective_tolerance";
            break;
        }
    }

    res.weights = std::move(x);
    res.objective = fx;
    res.iterations = iter;
    return res;
}

GradientCheckReport gradient_check(const std::vector<TrainingInstance>& batch,
                                   const std::vector<double>& weights, double lambda,
                                   double step, std::size_t min_coords, uint64_t seed,
                                   std::size_t dict_size, int jobs) {
    std::vector<double> analytic;
    objective_and_gradient(batch, weights, lambda, &analytic, jobs);

    std::set<uint32_t> fired_set;
    for (const auto& inst : batch)
        fired_set.insert(inst.full.pool->global_ids.begin(), inst.full.pool->global_ids.end());
    std::vector<uint32_t> coords(fired_set.begin(), fired_set.end());
    std::mt19937_64 rng(seed);
    deterministic_shuffle(coords, rng);
    if (coords.size() > min_coords) coords.resize(min_coords);
    for (uint32_t k = 0; coords.size() < min_coords && k < dict_size; ++k)
        if (!fired_set.count(k)) coords.push_back(k);

    GradientCheckReport report;
    report.coords_checked = static_cast<int>(coords.size());
    std::vector<double> w = weights;
    for (uint32_t k : coords) {
        double orig = w[k];
        w[k] = orig + step;
        double fplus = objective_and_gradient(batch, w, lambda, nullptr, jobs);
        w[k] = orig - step;
        double fminus = objective_and_gradient(batch, w, lambda, nullptr, jobs);
        w[k] = orig;
        double numeric = (fplus - fminus) / (2.0 * step);
        double rel = std::abs(numeric - analytic[k]) /
                     std::max({1.0, std::abs(numeric), std::abs(analytic[k])});
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_coordinate = k;
        }
    }
    return report;
}

Model train_model(const std::vector<Problem>& train, Variant variant, int window,
                  const TrainConfig& cfg, const AnnotationMap* annotations,
                  MinimizeResult* details) {
    Model model;
    model.variant = variant;
    model.window = window;
    model.lambda = cfg.lambda;
    model.seed = cfg.seed;
    model.dict = std::make_shared<FeatureDictionary>();

    std::vector<TrainingInstance> instances =
        build_training_instances(train, variant, window, *model.dict, annotations);
    if (instances.empty()) throw TrainingError("no training problems with gold signs");
    model.dict->freeze();

    Objective f = [&](const std::vector<double>& w, std::vector<double>* grad) {
        return objective_and_gradient(instances, w, cfg.lambda, grad, cfg.jobs);
    };
    MinimizeResult res = minimize(f, std::vector<double>(model.dict->size(), 0.0), cfg);
    model.weights = res.weights;
    model.iterations = res.iterations;
    model.final_objective = res.objective;
    model.stop_reason = res.stop_reason;
    if (details) *details = std::move(res);
    return model;
}

std::vector<int> default_window_candidates() {
    return {1, 2, 3, 4, 5, 6, kFullWindow};
}

TuneResult tune_window(const std::vector<Problem>& train, Variant variant,
                       const std::vector<int>& candidates, const TrainConfig& cfg,
                       const AnnotationMap* annotations) {
    if (train.size() < 10)
        throw TrainingError("window tuning needs at least 10 training problems");
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(cfg.seed);
    deterministic_shuffle(order, rng);

    std::size_t n_train = (train.size() * 4) / 5;
    if (n_train == 0 || n_train == train.size())
        throw TrainingError("empty side in the 80/20 tuning split");
    std::vector<Problem> sub_train, dev;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? sub_train : dev).push_back(train[order[i]]);

    TuneResult result;
    bool first = true;
    for (int window : candidates) {
        Model model = train_model(sub_train, variant, window, cfg, annotations);
        int correct = 0;
        for (const auto& p : dev) {
            if (!p.gold_solution) continue;
            const AnnotationSidecar* sc = nullptr;
            if (annotations) {
                auto it = annotations->find(p.id);
                if (it != annotations->end()) sc = &it->second;
            }
            Prediction pred = predict_problem(model, p, sc);
            if (std::abs(pred.solution.to_double() - *p.gold_solution) <= 1e-4) ++correct;
        }
        double acc = static_cast<double>(correct) / static_cast<double>(dev.size());
        result.table.push_back({window, acc});
        if (first || acc > result.table[best_index].dev_accuracy) {}
        first = false;
    }
    // Ties keep the earlier candidate.
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.table.size(); ++i)
        if (result.table[i].dev_accuracy > result.table[best].dev_accuracy) best = i;
    result.best_window = result.table[best].window;
    return result;
}

Prediction predict_problem(const Model& model, const Problem& problem,
                           const AnnotationSidecar* sidecar) {
    FeatureExtractor fx(problem, model.dict.get(), sidecar);
    TokenSequence t = build_token_sequence(problem, model.window);
    Lattice lat = build_lattice(t, model.variant, fx);
    LatticePath path = map_decode(lat, model.weights);

    Prediction pred;
    pred.signs = path.signs;
    pred.score = path.score;
    pred.spans.reserve(path.spans.size());
    for (const auto& [a, b] : path.spans) {
        if (a < 0) pred.spans.push_back({-1, -1});
        else pred.spans.push_back({t.items[a].source_index, t.items[b].source_index});
    }
    pred.equation = form_equation(problem.quantities, pred.signs);
    pred.equation_text = render_equation(pred.equation);
    pred.solution = solve(pred.equation);
    return pred;
}

}  // namespace quantag
