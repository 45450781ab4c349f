#include "cfn/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfn/rng.hpp"

namespace cfn {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double row_sq_dist(const Matrix& m, std::size_t i, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
        const double d = m(i, j) - c[j];
        s += d * d;
    }
    return s;
}

}  // namespace

double median_pairwise_distance(const std::vector<ConcentrationVector>& points) {
    std::vector<double> d;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            d.push_back(std::sqrt(sq_dist(points[i].alpha, points[j].alpha)));
    if (d.empty()) return 1.0;
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    return d[d.size() / 2];
}

SimilarityGraph build_similarity(const std::vector<ConcentrationVector>& points,
                                 double bandwidth) {
    if (points.size() < 2) throw std::invalid_argument("build_similarity: need >= 2 points");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("build_similarity: bandwidth <= 0");
    const std::size_t n = points.size();
    const std::size_t dim = points[0].size();
    for (const auto& p : points)
        if (p.size() != dim) throw std::invalid_argument("build_similarity: dimension mismatch");

    SimilarityGraph g;
    g.weights = Matrix(n, n, 0.0);
    g.degrees.assign(n, 0.0);
    const double denom = 2.0 * bandwidth * bandwidth;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = std::exp(-sq_dist(points[i].alpha, points[j].alpha) / denom);
            g.weights(i, j) = g.weights(j, i) = w;
            g.degrees[i] += w;
            g.degrees[j] += w;
        }
    }
    return g;
}

Matrix graph_laplacian(const SimilarityGraph& graph) {
    const std::size_t n = graph.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (graph.weights(i, j) < 0.0)
                throw std::invalid_argument("graph_laplacian: negative weight");
            if (std::abs(graph.weights(i, j) - graph.weights(j, i)) > 1e-12)
                throw std::invalid_argument("graph_laplacian: weights not symmetric");
        }
    Matrix l(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        l(i, i) = graph.degrees[i];
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) l(i, j) = -graph.weights(i, j);
    }
    return l;
}

SpectralEmbedding smallest_eigenpairs(const Matrix& laplacian, int z) {
    const std::size_t n = laplacian.rows;
    if (z < 1 || (std::size_t)z > n) throw std::domain_error("smallest_eigenpairs: Z out of range");
    auto full = jacobi_eigen_symmetric(laplacian);
    SpectralEmbedding e;
    e.eigenvalues.assign(full.eigenvalues.begin(), full.eigenvalues.begin() + z);
    e.vectors = Matrix(n, z);
    for (int col = 0; col < z; ++col)
        for (std::size_t i = 0; i < n; ++i) e.vectors(i, col) = full.eigenvectors(i, col);
    return e;
}

int select_num_clusters(const std::vector<double>& eigenvalues, int z_min, int z_max) {
    const int n = (int)eigenvalues.size();
    if (z_min < 1 || z_min > z_max || z_max >= n)
        throw std::domain_error("select_num_clusters: window out of range");
    for (int i = 1; i < n; ++i)
        if (eigenvalues[i] < eigenvalues[i - 1] - 1e-12)
            throw std::domain_error("select_num_clusters: eigenvalues not ascending");
    int best = z_min;
    double best_gap = -1.0;
    for (int z = z_min; z <= z_max; ++z) {
        // eigenvalues[] is 0-based: lambda_z = eigenvalues[z-1].
        const double gap = eigenvalues[z] - eigenvalues[z - 1];
        if (gap > best_gap + 1e-15) {
            best_gap = gap;
            best = z;
        }
    }
    return best;
}

double ratiocut_objective(const SimilarityGraph& graph, const SpectralEmbedding& embedding) {
    const std::size_t n = graph.size();
    const std::size_t z = embedding.vectors.cols;
    if (embedding.vectors.rows != n) throw std::invalid_argument("ratiocut: size mismatch");
    // Orthonormality check A^T A = I.
    for (std::size_t a = 0; a < z; ++a)
        for (std::size_t b = a; b < z; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                dot += embedding.vectors(i, a) * embedding.vectors(i, b);
            const double expect = (a == b) ? 1.0 : 0.0;
            if (std::abs(dot - expect) > 1e-6)
                throw std::invalid_argument("ratiocut: embedding not orthonormal");
        }
    const double cs = 1.0 / (2.0 * (double)n * (double)(n - 1));
    double total = 0.0;
    for (std::size_t col = 0; col < z; ++col)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double d = embedding.vectors(i, col) - embedding.vectors(j, col);
                total += graph.weights(i, j) * d * d;
            }
    return cs * total;
}

KMeansResult kmeans(const Matrix& rows, int k, std::uint64_t rng_seed, int restarts,
                    int max_iters) {
    const std::size_t n = rows.rows, d = rows.cols;
    if (k < 1 || (std::size_t)k > n) throw std::domain_error("kmeans: bad k");

    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < restarts; ++restart) {
        auto rng = make_rng(derive_seed(rng_seed, 11, (std::uint64_t)restart));

        // k-means++ seeding.
        std::vector<std::vector<double>> centers;
        {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::size_t first = pick(rng);
            centers.push_back(std::vector<double>(rows.data.begin() + first * d,
                                                  rows.data.begin() + (first + 1) * d));
            std::vector<double> dist(n);
            while ((int)centers.size() < k) {
                double sum = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double m = std::numeric_limits<double>::infinity();
                    for (const auto& c : centers) m = std::min(m, row_sq_dist(rows, i, c));
                    dist[i] = m;
                    sum += m;
                }
                std::size_t chosen = 0;
                if (sum > 0.0) {
                    std::uniform_real_distribution<double> u(0.0, sum);
                    double target = u(rng), acc = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        acc += dist[i];
                        if (acc >= target) {
                            chosen = i;
                            break;
                        }
                    }
                } else {
                    chosen = pick(rng);
                }
                centers.push_back(std::vector<double>(rows.data.begin() + chosen * d,
                                                      rows.data.begin() + (chosen + 1) * d));
            }
        }

        std::vector<int> labels(n, 0);
        double wcss = 0.0;
        for (int iter = 0; iter < max_iters; ++iter) {
            bool changed = false;
            wcss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                int arg = 0;
                double m = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    const double dd = row_sq_dist(rows, i, centers[c]);
                    if (dd < m) {
                        m = dd;
                        arg = c;
                    }
                }
                if (labels[i] != arg) changed = true;
                labels[i] = arg;
                wcss += m;
            }
            if (!changed && iter > 0) break;
            std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
            std::vector<int> counts(k, 0);
            for (std::size_t i = 0; i < n; ++i) {
                ++counts[labels[i]];
                for (std::size_t j = 0; j < d; ++j) sums[labels[i]][j] += rows(i, j);
            }
            for (int c = 0; c < k; ++c)
                if (counts[c] > 0)
                    for (std::size_t j = 0; j < d; ++j) centers[c][j] = sums[c][j] / counts[c];
        }
        if (wcss < best.wcss) best = KMeansResult{labels, wcss};
    }
    return best;
}

ClusterAssignment spectral_cluster(const std::vector<ConcentrationVector>& points,
                                   double bandwidth, std::optional<int> z_override,
                                   std::uint64_t rng_seed) {
    if (points.size() < 2) throw std::invalid_argument("spectral_cluster: need >= 2 points");
    const std::size_t n = points.size();

    const double med = median_pairwise_distance(points);
    if (med <= 1e-14) {
        // All points coincide; a single cluster is the only meaningful answer.
        ClusterAssignment a;
        a.labels.assign(n, 0);
        a.num_clusters = 1;
        a.degenerate = true;
        return a;
    }
    // Default scale: half the median pairwise distance. The full median sits
    // at the between-group distance once groups are tight, which fuses them
    // into one component and hides the eigengap.
    const double bw = bandwidth > 0.0 ? bandwidth : 0.5 * med;

    auto graph = build_similarity(points, bw);
    auto lap = graph_laplacian(graph);
    auto full = jacobi_eigen_symmetric(lap);

    int z;
    if (z_override) {
        z = *z_override;
        if (z < 1 || (std::size_t)z > n) throw std::domain_error("spectral_cluster: bad z_override");
    } else {
        const int z_min = 1;
        const int z_max = std::min<int>((int)n - 1, 10);
        z = select_num_clusters(full.eigenvalues, z_min, z_max);

        // If the top eigengap is ambiguous (second-largest within 10%),
        // fall back to silhouette over the candidate range.
        std::vector<double> gaps;
        for (int cand = z_min; cand <= z_max; ++cand)
            gaps.push_back(full.eigenvalues[cand] - full.eigenvalues[cand - 1]);
        std::vector<double> sorted = gaps;
        std::sort(sorted.rbegin(), sorted.rend());
        if (sorted.size() >= 2 && sorted[1] > 0.9 * sorted[0]) {
            double best_score = -2.0;
            int best_z = z;
            for (int cand = std::max(2, z_min); cand <= z_max; ++cand) {
                Matrix emb(n, cand);
                for (int col = 0; col < cand; ++col)
                    for (std::size_t i = 0; i < n; ++i) emb(i, col) = full.eigenvectors(i, col);
                for (std::size_t i = 0; i < n; ++i) {
                    double norm = 0.0;
                    for (int col = 0; col < cand; ++col) norm += emb(i, col) * emb(i, col);
                    norm = std::sqrt(norm);
                    if (norm > 1e-12)
                        for (int col = 0; col < cand; ++col) emb(i, col) /= norm;
                }
                auto km = kmeans(emb, cand, derive_seed(rng_seed, 13, (std::uint64_t)cand));
                const double score = silhouette_score(emb, km.labels);
                if (score > best_score) {
                    best_score = score;
                    best_z = cand;
                }
            }
            z = best_z;
        }
    }

    Matrix emb(n, z);
    for (int col = 0; col < z; ++col)
        for (std::size_t i = 0; i < n; ++i) emb(i, col) = full.eigenvectors(i, col);
    // Row normalization to unit length; zero rows stay zero.
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (int col = 0; col < z; ++col) norm += emb(i, col) * emb(i, col);
        norm = std::sqrt(norm);
        if (norm > 1e-12)
            for (int col = 0; col < z; ++col) emb(i, col) /= norm;
    }

    auto km = kmeans(emb, z, derive_seed(rng_seed, 17));

    // Re-index so every cluster id in [0, num_clusters) is used.
    std::vector<int> remap(z, -1);
    int next = 0;
    ClusterAssignment a;
    a.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (remap[km.labels[i]] < 0) remap[km.labels[i]] = next++;
        a.labels[i] = remap[km.labels[i]];
    }
    a.num_clusters = next;
    return a;
}

double excess_risk_bound(int z, int n, double kappa_s, double delta) {
    if (z < 1 || n < 1 || !(kappa_s > 0.0) || !(delta > 0.0 && delta < 1.0))
        throw std::domain_error("excess_risk_bound: domain violation");
    return 2.0 * z * std::sqrt(2.0) * kappa_s * std::sqrt(std::log(2.0 / delta)) /
           std::sqrt((double)n);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: size mismatch");
    const std::size_t n = a.size();
    const int ka = a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
    const int kb = b.empty() ? 0 : *std::max_element(b.begin(), b.end()) + 1;
    std::vector<std::vector<std::int64_t>> cont(ka, std::vector<std::int64_t>(kb, 0));
    std::vector<std::int64_t> ra(ka, 0), rb(kb, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++cont[a[i]][b[i]];
        ++ra[a[i]];
        ++rb[b[i]];
    }
    auto comb2 = [](std::int64_t x) { return 0.5 * (double)x * (double)(x - 1); };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) sum_ij += comb2(cont[i][j]);
    for (int i = 0; i < ka; ++i) sum_a += comb2(ra[i]);
    for (int j = 0; j < kb; ++j) sum_b += comb2(rb[j]);
    const double total = comb2((std::int64_t)n);
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (std::abs(max_index - expected) < 1e-15) return 1.0;
    return (sum_ij - expected) / (max_index - expected);
}

double silhouette_score(const Matrix& rows, const std::vector<int>& labels) {
    const std::size_t n = rows.rows;
    const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (k < 2) return 0.0;
    std::vector<int> counts(k, 0);
    for (int l : labels) ++counts[l];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> mean_dist(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < rows.cols; ++c) {
                const double d = rows(i, c) - rows(j, c);
                s += d * d;
            }
            mean_dist[labels[j]] += std::sqrt(s);
        }
        const int own = labels[i];
        double a_i = counts[own] > 1 ? mean_dist[own] / (counts[own] - 1) : 0.0;
        double b_i = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            if (c != own && counts[c] > 0) b_i = std::min(b_i, mean_dist[c] / counts[c]);
        const double denom = std::max(a_i, b_i);
        total += denom > 0.0 ? (b_i - a_i) / denom : 0.0;
    }
    return total / (double)n;
}

}  // namespace cfn
