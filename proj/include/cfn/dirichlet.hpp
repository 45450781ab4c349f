#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cfn {

// Per-user class counts n_j and their total V.
struct LabelHistogram {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;

    static LabelHistogram from_counts(std::vector<std::int64_t> counts);
    static LabelHistogram from_labels(const std::vector<int>& labels, int num_classes);
    bool all_zero() const;
};

// Estimated Dirichlet concentration parameters of one user.
struct ConcentrationVector {
    std::vector<double> alpha;
    double alpha0 = 0.0;

    static ConcentrationVector from_alpha(std::vector<double> alpha);
    std::size_t size() const { return alpha.size(); }
};

struct PartitionSpec {
    int num_users = 0;
    int num_classes = 0;
    double concentration = 1.0;  // population heterogeneity knob
    std::vector<std::int64_t> samples_per_user;

    void validate() const;
};

struct UserDataset {
    std::vector<std::vector<double>> features;  // one row per sample
    std::vector<int> labels;
    LabelHistogram histogram;
    bool replacement_fallback = false;  // pool exhausted for some class
};

struct EstimateResult {
    ConcentrationVector alpha;
    bool converged = false;
    int iterations = 0;
};

double md_log_likelihood(const LabelHistogram& hist, const ConcentrationVector& alpha);
std::vector<double> md_log_likelihood_grad(const LabelHistogram& hist,
                                           const ConcentrationVector& alpha);

// BFGS maximization of the Multinomial-Dirichlet log-likelihood, run in
// log-parameter space so every component stays strictly positive.
EstimateResult estimate_concentration(const LabelHistogram& hist,
                                      const ConcentrationVector& init,
                                      double tol = 1e-6, int max_iters = 500);

// Joint MLE over several histograms sharing one alpha. A single MD draw
// cannot identify the concentration scale (its likelihood keeps improving
// toward infinite precision); pooled draws can.
EstimateResult estimate_concentration_pooled(const std::vector<LabelHistogram>& hists,
                                             const ConcentrationVector& init,
                                             double tol = 1e-6, int max_iters = 500);

// Splits a label pool across users with Dirichlet-drawn class proportions.
std::vector<UserDataset> sample_dirichlet_partition(const PartitionSpec& spec,
                                                    const std::vector<int>& source_labels,
                                                    std::uint64_t rng_seed);

// Per-user class-proportion draws, optionally from distinct group centers.
std::vector<double> sample_dirichlet(const std::vector<double>& alpha, std::uint64_t seed);

// CSV interchange: user_id, n_1, ..., n_C per row.
std::string histograms_to_csv(const std::vector<LabelHistogram>& hists);
std::vector<LabelHistogram> histograms_from_csv(const std::string& csv);
std::string alphas_to_csv(const std::vector<EstimateResult>& results);

}  // namespace cfn
