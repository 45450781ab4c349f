#include "cfn/fl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cfn/rng.hpp"

namespace cfn {

void ModelParams::check_finite() const {
    for (double w : weights)
        if (!std::isfinite(w)) throw std::runtime_error("ModelParams: non-finite weight");
}

void TrainingConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainingConfig: bad learning_rate");
    if (local_epochs < 1 || batch_size < 1 || rounds < 1)
        throw std::invalid_argument("TrainingConfig: integers must be >= 1");
}

void ConvergenceParams::validate() const {
    if (!(lipschitz > 0.0) || !(pl_constant > 0.0) || !(grad_variance_bound >= 0.0) ||
        !(confidence > 0.0 && confidence < 1.0) || !(concentration_sum > 0.0))
        throw std::domain_error("ConvergenceParams: domain violation");
}

namespace {

std::size_t feature_dim(const ModelParams& model, int num_classes) {
    if (num_classes < 1 || model.size() % num_classes != 0)
        throw std::invalid_argument("model dimension not divisible by class count");
    return model.size() / num_classes;
}

// Log-softmax probabilities for one sample.
void logits_of(const ModelParams& model, const std::vector<double>& x, int num_classes,
               std::vector<double>& out) {
    const std::size_t d = feature_dim(model, num_classes);
    if (x.size() != d) throw std::invalid_argument("feature dimension mismatch");
    out.assign(num_classes, 0.0);
    for (int c = 0; c < num_classes; ++c) {
        double z = 0.0;
        const double* row = model.weights.data() + (std::size_t)c * d;
        for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
        out[c] = z;
    }
}

double log_sum_exp(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace

double local_loss(const ModelParams& model, const UserDataset& data, int num_classes) {
    if (data.labels.empty()) throw std::domain_error("local_loss: empty dataset");
    std::vector<double> z;
    double total = 0.0;
    for (std::size_t k = 0; k < data.labels.size(); ++k) {
        logits_of(model, data.features[k], num_classes, z);
        total += log_sum_exp(z) - z[data.labels[k]];
    }
    return total / (double)data.labels.size();
}

std::vector<double> local_loss_grad(const ModelParams& model, const UserDataset& data,
                                    int num_classes) {
    if (data.labels.empty()) throw std::domain_error("local_loss_grad: empty dataset");
    const std::size_t d = feature_dim(model, num_classes);
    std::vector<double> grad(model.size(), 0.0);
    std::vector<double> z;
    for (std::size_t k = 0; k < data.labels.size(); ++k) {
        logits_of(model, data.features[k], num_classes, z);
        const double lse = log_sum_exp(z);
        for (int c = 0; c < num_classes; ++c) {
            const double p = std::exp(z[c] - lse);
            const double coeff = p - (c == data.labels[k] ? 1.0 : 0.0);
            double* row = grad.data() + (std::size_t)c * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += coeff * data.features[k][j];
        }
    }
    const double inv = 1.0 / (double)data.labels.size();
    for (double& g : grad) g *= inv;
    return grad;
}

double global_loss(const std::vector<UserDataset>& data, const ModelParams& model,
                   const std::vector<int>& selected, int num_classes) {
    if (selected.empty()) throw std::domain_error("global_loss: empty selection");
    double beta_sum = 0.0;
    for (int i : selected) beta_sum += (double)data[i].labels.size();
    double total = 0.0;
    for (int i : selected)
        total += (double)data[i].labels.size() / beta_sum * local_loss(model, data[i], num_classes);
    return total;
}

ModelParams local_sgd_update(const ModelParams& model, const UserDataset& data,
                             const TrainingConfig& config, int num_classes,
                             std::uint64_t rng_seed) {
    config.validate();
    if (data.labels.empty()) throw std::domain_error("local_sgd_update: empty dataset");
    const std::size_t n = data.labels.size();
    const std::size_t d = feature_dim(model, num_classes);

    ModelParams w = model;
    auto rng = make_rng(rng_seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> z;

    for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + (std::size_t)config.batch_size);
            std::vector<double> grad(w.size(), 0.0);
            for (std::size_t t = start; t < stop; ++t) {
                const std::size_t k = order[t];
                logits_of(w, data.features[k], num_classes, z);
                const double lse = log_sum_exp(z);
                for (int c = 0; c < num_classes; ++c) {
                    const double p = std::exp(z[c] - lse);
                    const double coeff = p - (c == data.labels[k] ? 1.0 : 0.0);
                    double* row = grad.data() + (std::size_t)c * d;
                    for (std::size_t j = 0; j < d; ++j) row[j] += coeff * data.features[k][j];
                }
            }
            const double scale = config.learning_rate / (double)(stop - start);
            for (std::size_t i = 0; i < w.size(); ++i) w.weights[i] -= scale * grad[i];
        }
    }
    w.check_finite();
    return w;
}

ModelParams fedavg_aggregate(const std::vector<std::pair<ModelParams, double>>& updates) {
    if (updates.empty()) throw std::invalid_argument("fedavg_aggregate: no updates");
    const std::size_t dim = updates[0].first.size();
    double beta_sum = 0.0;
    for (const auto& [w, beta] : updates) {
        if (w.size() != dim) throw std::invalid_argument("fedavg_aggregate: dimension mismatch");
        beta_sum += beta;
    }
    if (!(beta_sum > 0.0)) throw std::invalid_argument("fedavg_aggregate: zero total weight");
    ModelParams out = ModelParams::zeros(dim);
    for (const auto& [w, beta] : updates) {
        const double coeff = beta / beta_sum;
        for (std::size_t i = 0; i < dim; ++i) out.weights[i] += coeff * w.weights[i];
    }
    return out;
}

double accuracy(const ModelParams& model, const UserDataset& data, int num_classes) {
    if (data.labels.empty()) return 0.0;
    std::vector<double> z;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < data.labels.size(); ++k) {
        logits_of(model, data.features[k], num_classes, z);
        const int pred = (int)(std::max_element(z.begin(), z.end()) - z.begin());
        if (pred == data.labels[k]) ++hits;
    }
    return (double)hits / (double)data.labels.size();
}

BoundStep convergence_bound_rhs(double prev_gap, const ConvergenceParams& params, double eta,
                                const std::vector<double>& betas) {
    params.validate();
    if (prev_gap < 0.0) throw std::domain_error("convergence_bound_rhs: negative gap");
    if (betas.empty()) throw std::domain_error("convergence_bound_rhs: empty selection");
    double sum = 0.0, sum_sq = 0.0;
    for (double b : betas) {
        sum += b;
        sum_sq += b * b;
    }
    const double ratio = sum_sq / (sum * sum);
    BoundStep step;
    step.contraction = 1.0 - eta * 2.0 * params.pl_constant * ratio;
    step.premise_ok = step.contraction > 0.0 && step.contraction <= 1.0;
    step.value = step.contraction * prev_gap -
                 eta * ratio * params.grad_variance_bound * params.grad_variance_bound;
    return step;
}

double generalization_term(const ConvergenceParams& params, const std::vector<double>& betas,
                           const std::vector<double>& alphas) {
    params.validate();
    if (betas.size() != alphas.size() || betas.empty())
        throw std::domain_error("generalization_term: size mismatch");
    const double log_term = std::log(2.0 / params.confidence);
    double sum = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0) || !(alphas[i] > 0.0))
            throw std::domain_error("generalization_term: betas and alphas must be positive");
        const double denom = 8.0 * betas[i] * betas[i] * alphas[i] * alphas[i];
        sum += params.concentration_sum * params.concentration_sum * log_term / denom;
    }
    return std::sqrt(sum);
}

}  // namespace cfn
