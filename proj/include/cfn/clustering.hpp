#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cfn/dirichlet.hpp"
#include "cfn/matrix.hpp"

namespace cfn {

struct SimilarityGraph {
    Matrix weights;               // symmetric, zero diagonal, non-negative
    std::vector<double> degrees;  // d_i = sum_j w_ij
    std::size_t size() const { return degrees.size(); }
};

struct SpectralEmbedding {
    Matrix vectors;                   // n x Z, orthonormal columns
    std::vector<double> eigenvalues;  // ascending, first Z of the full spectrum
};

struct ClusterAssignment {
    std::vector<int> labels;  // cluster id in [0, num_clusters)
    int num_clusters = 0;
    bool degenerate = false;  // all points identical
};

SimilarityGraph build_similarity(const std::vector<ConcentrationVector>& points,
                                 double bandwidth);
Matrix graph_laplacian(const SimilarityGraph& graph);
SpectralEmbedding smallest_eigenpairs(const Matrix& laplacian, int z);
int select_num_clusters(const std::vector<double>& eigenvalues_ascending, int z_min, int z_max);
double ratiocut_objective(const SimilarityGraph& graph, const SpectralEmbedding& embedding);

// Full pipeline: graph -> Laplacian -> eigengap Z (unless overridden) ->
// row-normalized embedding -> k-means. Deterministic per seed.
// bandwidth <= 0 selects the median pairwise distance heuristic.
ClusterAssignment spectral_cluster(const std::vector<ConcentrationVector>& points,
                                   double bandwidth, std::optional<int> z_override,
                                   std::uint64_t rng_seed);

// 2 Z sqrt(2) kappa_s sqrt(log(2/delta)) / sqrt(n)
double excess_risk_bound(int z, int n, double kappa_s, double delta);

// K-means on arbitrary row features; exposed for reuse and testing.
struct KMeansResult {
    std::vector<int> labels;
    double wcss = 0.0;
};
KMeansResult kmeans(const Matrix& rows, int k, std::uint64_t rng_seed, int restarts = 20,
                    int max_iters = 200);

// Agreement between two labelings, corrected for chance.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Mean silhouette score of a labeling over Euclidean row features.
double silhouette_score(const Matrix& rows, const std::vector<int>& labels);

double median_pairwise_distance(const std::vector<ConcentrationVector>& points);

}  // namespace cfn
