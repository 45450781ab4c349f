#pragma once

#include <cstdint>
#include <vector>

#include "cfn/dirichlet.hpp"

namespace cfn {

// Flat parameter vector; softmax regression interprets it as a C x d
// weight matrix in row-major order.
struct ModelParams {
    std::vector<double> weights;

    static ModelParams zeros(std::size_t dim) { return ModelParams{std::vector<double>(dim, 0.0)}; }
    std::size_t size() const { return weights.size(); }
    void check_finite() const;
};

struct TrainingConfig {
    double learning_rate = 0.1;
    int local_epochs = 1;
    int batch_size = 16;
    int rounds = 10;

    void validate() const;
};

struct ConvergenceParams {
    double lipschitz = 1.0;         // L
    double pl_constant = 1.0;       // mu
    double grad_variance_bound = 0.0;  // G
    double confidence = 0.05;       // delta
    double concentration_sum = 1.0; // A

    void validate() const;
};

// Mean cross-entropy of softmax regression over the dataset.
double local_loss(const ModelParams& model, const UserDataset& data, int num_classes);
std::vector<double> local_loss_grad(const ModelParams& model, const UserDataset& data,
                                    int num_classes);

double global_loss(const std::vector<UserDataset>& data, const ModelParams& model,
                   const std::vector<int>& selected, int num_classes);

// local_epochs of mini-batch SGD, deterministic per seed.
ModelParams local_sgd_update(const ModelParams& model, const UserDataset& data,
                             const TrainingConfig& config, int num_classes,
                             std::uint64_t rng_seed);

ModelParams fedavg_aggregate(const std::vector<std::pair<ModelParams, double>>& updates);

// Fraction of samples whose argmax logit matches the label.
double accuracy(const ModelParams& model, const UserDataset& data, int num_classes);

struct BoundStep {
    double value = 0.0;          // RHS as printed
    double contraction = 1.0;    // the (1 - 2 eta mu sum b^2 / (sum b)^2) factor
    bool premise_ok = true;      // contraction inside (0, 1]
};
BoundStep convergence_bound_rhs(double prev_gap, const ConvergenceParams& params, double eta,
                                const std::vector<double>& betas);

// sqrt( sum_i A^2 log(2/delta) / (8 beta_i^2 alpha_i^2) )
double generalization_term(const ConvergenceParams& params, const std::vector<double>& betas,
                           const std::vector<double>& alphas);

}  // namespace cfn
