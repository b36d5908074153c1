#include "reprbench/linear_probe.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "reprbench/errors.hpp"
#include "reprbench/parallel.hpp"
#include "reprbench/rng.hpp"

namespace reprbench {

namespace {

constexpr std::uint64_t kHoldoutStream = 0x70726f62652d686fULL;  // "probe-ho"
constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-20;
constexpr double kGradientTolerance = 1e-10;
constexpr std::size_t kHistory = 10;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Writes log-softmax of `logits` into `out`.
void log_softmax(std::span<const double> logits, std::span<double> out) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    for (std::size_t c = 0; c < logits.size(); ++c) out[c] = logits[c] - log_z;
}

void compute_logits(std::span<const double> params, std::size_t num_classes, std::size_t dim,
                    std::span<const double> x, std::span<double> logits) {
    const double* bias = params.data() + num_classes * dim;
    for (std::size_t c = 0; c < num_classes; ++c) {
        logits[c] = bias[c] + dot(params.subspan(c * dim, dim), x);
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view to_string(OptimizerMode mode) {
    return mode == OptimizerMode::lbfgs ? "full-batch-lbfgs-like" : "full-batch-gradient-descent";
}

OptimizerMode parse_optimizer_mode(std::string_view text) {
    if (text == "full-batch-lbfgs-like" || text == "lbfgs") return OptimizerMode::lbfgs;
    if (text == "full-batch-gradient-descent" || text == "gradient-descent" || text == "gd")
        return OptimizerMode::gradient_descent;
    throw ConfigError("unknown probe optimizer mode '" + std::string(text) + "'");
}

void ProbeConfig::validate() const {
    if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) throw ConfigError("probe: l2_penalty must be >= 0");
    if (max_epochs < 1) throw ConfigError("probe: max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("probe: patience must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("probe: tolerance must be > 0");
    if (!(learning_rate > 0.0)) throw ConfigError("probe: learning_rate must be > 0");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw ConfigError("probe: holdout_fraction must lie in (0, 1)");
}

SoftmaxObjective::SoftmaxObjective(const RealMatrix& features, std::span<const int> labels,
                                   std::size_t num_classes, double l2_penalty)
    : features_(features),
      labels_(labels.begin(), labels.end()),
      num_classes_(num_classes),
      dim_(features.cols()),
      l2_penalty_(l2_penalty) {
    if (features.rows() == 0) throw ValidationError("probe: no training rows");
    if (labels_.size() != features.rows()) throw ValidationError("probe: one label per row required");
    for (int y : labels_)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes_) throw ValidationError("probe: label out of range");
}

double SoftmaxObjective::value(std::span<const double> params) const {
    std::vector<double> scratch(num_params());
    return value_and_gradient(params, scratch);
}

double SoftmaxObjective::value_and_gradient(std::span<const double> params, std::span<double> gradient) const {
    std::fill(gradient.begin(), gradient.end(), 0.0);
    std::vector<double> logits(num_classes_), logp(num_classes_);
    double* grad_bias = gradient.data() + num_classes_ * dim_;
    double loss = 0.0;
    for (std::size_t i = 0; i < features_.rows(); ++i) {
        const auto x = features_.row(i);
        compute_logits(params, num_classes_, dim_, x, logits);
        log_softmax(logits, logp);
        loss -= logp[labels_[i]];
        for (std::size_t c = 0; c < num_classes_; ++c) {
            const double residual = std::exp(logp[c]) - (static_cast<int>(c) == labels_[i] ? 1.0 : 0.0);
            double* gw = gradient.data() + c * dim_;
            for (std::size_t j = 0; j < dim_; ++j) gw[j] += residual * x[j];
            grad_bias[c] += residual;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(features_.rows());
    for (double& g : gradient) g *= inv_n;
    loss *= inv_n;

    double penalty = 0.0;
    for (std::size_t k = 0; k < num_classes_ * dim_; ++k) {
        penalty += params[k] * params[k];
        gradient[k] += l2_penalty_ * params[k];
    }
    return loss + 0.5 * l2_penalty_ * penalty;
}

double SoftmaxObjective::cross_entropy(std::span<const double> params, const RealMatrix& features,
                                       std::span<const int> labels) const {
    if (features.rows() == 0) return 0.0;
    std::vector<double> logits(num_classes_), logp(num_classes_);
    double loss = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        compute_logits(params, num_classes_, dim_, features.row(i), logits);
        log_softmax(logits, logp);
        loss -= logp[labels[i]];
    }
    return loss / static_cast<double>(features.rows());
}

OptimizeResult minimize(const SoftmaxObjective& objective, std::vector<double> initial,
                        const ProbeConfig& config, const RealMatrix& val_features,
                        std::span<const int> val_labels) {
    config.validate();
    const std::size_t n = objective.num_params();
    if (initial.size() != n) throw ValidationError("probe: parameter vector has wrong size");

    OptimizeResult result;
    auto& trace = result.trace;
    std::vector<double> x = std::move(initial);
    std::vector<double> g(n), x_new(n), g_new(n), direction(n);
    double f = objective.value_and_gradient(x, g);
    if (!std::isfinite(f) || !all_finite(g)) throw NumericalError("probe diverged: non-finite loss at epoch 0");

    const bool early_stopping = val_features.rows() > 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_x = x;
    if (early_stopping) best_val = objective.cross_entropy(x, val_features, val_labels);
    int epochs_without_improvement = 0;

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    trace.stop_reason = "max_epochs";

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double g_inf = std::accumulate(g.begin(), g.end(), 0.0,
                                             [](double m, double v) { return std::max(m, std::abs(v)); });
        if (g_inf < kGradientTolerance) {
            trace.stop_reason = "converged";
            break;
        }

        // Search direction.
        for (std::size_t i = 0; i < n; ++i) direction[i] = -g[i];
        if (config.mode == OptimizerMode::lbfgs && !s_hist.empty()) {
            std::vector<double> alpha(s_hist.size());
            for (std::size_t k = s_hist.size(); k-- > 0;) {
                alpha[k] = rho_hist[k] * dot(s_hist[k], direction);
                for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha[k] * y_hist[k][i];
            }
            const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (double& v : direction) v *= gamma;
            for (std::size_t k = 0; k < s_hist.size(); ++k) {
                const double beta = rho_hist[k] * dot(y_hist[k], direction);
                for (std::size_t i = 0; i < n; ++i) direction[i] += (alpha[k] - beta) * s_hist[k][i];
            }
        }
        double slope = dot(g, direction);
        if (!(slope < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) direction[i] = -g[i];
            slope = -dot(g, g);
        }

        double step = config.learning_rate;
        if (config.mode == OptimizerMode::lbfgs)
            step = s_hist.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;

        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (; step >= kMinStep; step *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * direction[i];
            f_new = objective.value_and_gradient(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope && all_finite(g_new)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            trace.stop_reason = "line_search_exhausted";
            break;
        }

        if (config.mode == OptimizerMode::lbfgs) {
            std::vector<double> s(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = x_new[i] - x[i];
                y[i] = g_new[i] - g[i];
            }
            const double sy = dot(s, y);
            if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
                s_hist.push_back(std::move(s));
                y_hist.push_back(std::move(y));
                rho_hist.push_back(1.0 / sy);
                if (s_hist.size() > kHistory) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        if (!std::isfinite(f))
            throw NumericalError("probe diverged: non-finite loss at epoch " + std::to_string(epoch));
        trace.train_loss.push_back(f);

        if (early_stopping) {
            const double v = objective.cross_entropy(x, val_features, val_labels);
            if (!std::isfinite(v))
                throw NumericalError("probe diverged: non-finite validation loss at epoch " + std::to_string(epoch));
            trace.val_loss.push_back(v);
            if (v < best_val - config.tolerance) {
                best_val = v;
                best_x = x;
                trace.best_epoch = static_cast<std::size_t>(epoch);
                epochs_without_improvement = 0;
            } else if (++epochs_without_improvement >= config.patience) {
                trace.stop_reason = "early_stopping";
                break;
            }
        } else {
            trace.best_epoch = static_cast<std::size_t>(epoch);
        }
    }
    result.params = early_stopping ? std::move(best_x) : std::move(x);
    return result;
}

ProbeModel train_probe(const RealMatrix& train_features, std::span<const int> train_labels,
                       const RealMatrix& val_features, std::span<const int> val_labels,
                       std::span<const std::string> class_list, const ProbeConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t num_classes = class_list.size();
    const std::size_t dim = train_features.cols();
    if (num_classes < 2) throw ValidationError("probe: class list needs at least 2 classes");
    if (train_features.rows() != train_labels.size()) throw ValidationError("probe: one label per train row");
    if (val_features.rows() != val_labels.size()) throw ValidationError("probe: one label per val row");
    if (val_features.rows() > 0 && val_features.cols() != dim) throw ValidationError("probe: dimension mismatch");
    for (int y : train_labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw ValidationError("probe: label out of range");
    for (int y : val_labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw ValidationError("probe: label out of range");

    // Rows used for fitting and for early stopping.
    std::vector<std::size_t> fit_rows, stop_rows;
    RealMatrix const* stop_source = &val_features;
    std::vector<int> stop_source_labels(val_labels.begin(), val_labels.end());
    if (val_features.rows() > 0) {
        fit_rows.resize(train_features.rows());
        std::iota(fit_rows.begin(), fit_rows.end(), std::size_t{0});
        stop_rows.resize(val_features.rows());
        std::iota(stop_rows.begin(), stop_rows.end(), std::size_t{0});
    } else {
        std::vector<std::vector<std::size_t>> by_class(num_classes);
        for (std::size_t i = 0; i < train_labels.size(); ++i) by_class[train_labels[i]].push_back(i);
        Rng rng(seed, kHoldoutStream);
        for (auto& members : by_class) {
            if (members.empty()) continue;
            const std::size_t held =
                std::min(round_half_up(config.holdout_fraction * static_cast<double>(members.size())),
                         members.size() - 1);
            rng.shuffle(std::span<std::size_t>(members));
            stop_rows.insert(stop_rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(held));
            fit_rows.insert(fit_rows.end(), members.begin() + static_cast<std::ptrdiff_t>(held), members.end());
        }
        std::sort(fit_rows.begin(), fit_rows.end());
        std::sort(stop_rows.begin(), stop_rows.end());
        stop_source = &train_features;
        stop_source_labels.assign(train_labels.begin(), train_labels.end());
    }

    // Compact index space over classes seen in the fitting rows.
    std::vector<int> compact(num_classes, -1);
    std::vector<std::size_t> trained;
    for (std::size_t r : fit_rows) compact[train_labels[r]] = 0;
    for (std::size_t c = 0; c < num_classes; ++c)
        if (compact[c] == 0) {
            compact[c] = static_cast<int>(trained.size());
            trained.push_back(c);
        }
    if (trained.size() < 2) throw ValidationError("probe: fewer than 2 classes in training data");
    const std::size_t active = trained.size();

    // Standardization statistics from the fitting rows.
    std::vector<double> mean(dim, 0.0), scale(dim, 1.0);
    if (config.standardize) {
        for (std::size_t r : fit_rows)
            for (std::size_t j = 0; j < dim; ++j) mean[j] += train_features(r, j);
        for (double& m : mean) m /= static_cast<double>(fit_rows.size());
        for (std::size_t j = 0; j < dim; ++j) {
            double ss = 0.0;
            for (std::size_t r : fit_rows) ss += (train_features(r, j) - mean[j]) * (train_features(r, j) - mean[j]);
            scale[j] = std::max(std::sqrt(ss / static_cast<double>(fit_rows.size())), 1e-8);
        }
    }
    const auto standardized = [&](const RealMatrix& src, std::span<const std::size_t> rows) {
        RealMatrix out(rows.size(), dim);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < dim; ++j) out(i, j) = (src(rows[i], j) - mean[j]) / scale[j];
        return out;
    };

    const RealMatrix fit_x = standardized(train_features, fit_rows);
    std::vector<int> fit_y;
    for (std::size_t r : fit_rows) fit_y.push_back(compact[train_labels[r]]);

    // Early-stopping rows whose class the probe cannot output are left out.
    std::vector<std::size_t> usable_stop;
    std::vector<int> stop_y;
    for (std::size_t r : stop_rows) {
        if (compact[stop_source_labels[r]] < 0) continue;
        usable_stop.push_back(r);
        stop_y.push_back(compact[stop_source_labels[r]]);
    }
    const RealMatrix stop_x = standardized(*stop_source, usable_stop);

    const SoftmaxObjective objective(fit_x, fit_y, active, config.l2_penalty);
    auto optimized = minimize(objective, std::vector<double>(objective.num_params(), 0.0), config, stop_x, stop_y);

    // Fold the standardization into raw-space weights.
    ProbeModel model;
    model.class_list.assign(class_list.begin(), class_list.end());
    model.class_trained.assign(num_classes, false);
    model.weights = RealMatrix(num_classes, dim);
    model.biases.assign(num_classes, 0.0);
    const auto& p = optimized.params;
    for (std::size_t a = 0; a < active; ++a) {
        const std::size_t c = trained[a];
        model.class_trained[c] = true;
        double bias = p[active * dim + a];
        for (std::size_t j = 0; j < dim; ++j) {
            const double w = p[a * dim + j] / scale[j];
            model.weights(c, j) = w;
            bias -= w * mean[j];
        }
        model.biases[c] = bias;
    }
    model.trace = std::move(optimized.trace);
    return model;
}

ProbePrediction probe_predict(const ProbeModel& model, const RealMatrix& features) {
    const std::size_t num_classes = model.class_list.size();
    if (features.cols() != model.weights.cols())
        throw ValidationError("probe: dimension mismatch (model " + std::to_string(model.weights.cols()) +
                              ", features " + std::to_string(features.cols()) + ")");
    ProbePrediction out;
    out.predicted.resize(features.rows());
    out.probabilities = RealMatrix(features.rows(), num_classes);
    std::vector<double> logits;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        logits.clear();
        for (std::size_t c = 0; c < num_classes; ++c)
            if (model.class_trained[c]) logits.push_back(model.biases[c] + dot(model.weights.row(c), features.row(i)));
        const double m = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double& v : logits) {
            v = std::exp(v - m);
            z += v;
        }
        auto probs = out.probabilities.row(i);
        std::size_t a = 0;
        for (std::size_t c = 0; c < num_classes; ++c)
            if (model.class_trained[c]) probs[c] = logits[a++] / z;
        out.predicted[i] = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }
    return out;
}

double probe_subset_score(const TaskDataset& dataset, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> test_rows, const ProbeConfig& config,
                          std::uint64_t seed) {
    if (test_rows.empty()) throw ValidationError("probe: test split is empty");
    const auto& vectors = dataset.embeddings().vectors();
    const RealMatrix train = gather_rows(vectors, train_rows);
    std::vector<int> train_labels;
    for (std::size_t r : train_rows) train_labels.push_back(dataset.class_index()[r]);
    const auto model = train_probe(train, train_labels, RealMatrix(0, dataset.dim()), {}, dataset.class_list(),
                                   config, seed);

    const RealMatrix test = gather_rows(vectors, test_rows);
    std::vector<int> test_labels;
    for (std::size_t r : test_rows) test_labels.push_back(dataset.class_index()[r]);
    return macro_f1(probe_predict(model, test).predicted, test_labels, dataset.num_classes());
}

ScoreSummary linear_frozen_eval(const TaskDataset& dataset, const SplitAssignment& split,
                                const ProbeConfig& config, std::span<const std::uint64_t> seeds,
                                std::size_t jobs) {
    config.validate();
    if (seeds.empty()) throw ConfigError("linear_frozen_eval: at least one seed required");
    const auto train_rows = split.rows(dataset, SplitTag::train);
    const auto val_rows = split.rows(dataset, SplitTag::val);
    const auto test_rows = split.rows(dataset, SplitTag::test);
    if (test_rows.empty()) throw ValidationError("linear_frozen_eval: test split is empty");
    if (train_rows.empty()) throw ValidationError("linear_frozen_eval: train split is empty");

    // The early-stopping set is re-carved from train+val for every seed,
    // keeping the validation share of the split.
    std::vector<std::size_t> pool(train_rows);
    pool.insert(pool.end(), val_rows.begin(), val_rows.end());
    std::sort(pool.begin(), pool.end());
    ProbeConfig per_seed = config;
    if (!val_rows.empty())
        per_seed.holdout_fraction = static_cast<double>(val_rows.size()) / static_cast<double>(pool.size());

    std::vector<double> scores(seeds.size());
    parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        scores[i] = probe_subset_score(dataset, pool, test_rows, per_seed, seeds[i]);
    });
    return aggregate(scores);
}

EmbeddingSet probe_to_embeddings(const ProbeModel& model, std::string_view task, std::uint64_t seed) {
    const std::size_t num_classes = model.class_list.size();
    const std::size_t dim = model.weights.cols();
    FloatMatrix packed(num_classes, dim + 1);
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t j = 0; j < dim; ++j) packed(c, j) = static_cast<float>(model.weights(c, j));
        packed(c, dim) = static_cast<float>(model.biases[c]);
    }
    return EmbeddingSet(model.class_list, std::move(packed),
                        "probe:" + std::string(task) + ":" + std::to_string(seed));
}

void save_probe(const ProbeModel& model, std::string_view task, std::uint64_t seed,
                const std::filesystem::path& path) {
    save_embeddings(probe_to_embeddings(model, task, seed), path);
}

}  // namespace reprbench
