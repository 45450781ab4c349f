#include "cfn/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cfn/rng.hpp"
#include "cfn/special.hpp"

namespace cfn {

LabelHistogram LabelHistogram::from_counts(std::vector<std::int64_t> counts) {
    if (counts.empty()) throw std::invalid_argument("LabelHistogram: empty counts");
    std::int64_t total = 0;
    for (auto c : counts) {
        if (c < 0) throw std::invalid_argument("LabelHistogram: negative count");
        total += c;
    }
    return LabelHistogram{std::move(counts), total};
}

LabelHistogram LabelHistogram::from_labels(const std::vector<int>& labels, int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("LabelHistogram: num_classes < 1");
    std::vector<std::int64_t> counts(num_classes, 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw std::invalid_argument("LabelHistogram: label out of range");
        ++counts[y];
    }
    return from_counts(std::move(counts));
}

bool LabelHistogram::all_zero() const { return total == 0; }

ConcentrationVector ConcentrationVector::from_alpha(std::vector<double> alpha) {
    if (alpha.empty()) throw std::invalid_argument("ConcentrationVector: empty");
    double alpha0 = 0.0;
    for (double a : alpha) {
        if (!(a > 0.0) || !std::isfinite(a))
            throw std::domain_error("ConcentrationVector: components must be positive");
        alpha0 += a;
    }
    return ConcentrationVector{std::move(alpha), alpha0};
}

void PartitionSpec::validate() const {
    if (num_users < 1) throw std::invalid_argument("PartitionSpec: num_users < 1");
    if (num_classes < 2) throw std::invalid_argument("PartitionSpec: num_classes < 2");
    if (!(concentration > 0.0)) throw std::invalid_argument("PartitionSpec: concentration <= 0");
    if ((int)samples_per_user.size() != num_users)
        throw std::invalid_argument("PartitionSpec: samples_per_user size mismatch");
    for (auto b : samples_per_user)
        if (b < 1) throw std::invalid_argument("PartitionSpec: samples_per_user < 1");
}

double md_log_likelihood(const LabelHistogram& hist, const ConcentrationVector& alpha) {
    if (hist.counts.size() != alpha.alpha.size())
        throw std::invalid_argument("md_log_likelihood: dimension mismatch");
    const double a0 = alpha.alpha0;
    const double v = static_cast<double>(hist.total);
    double ll = log_gamma(a0) - log_gamma(a0 + v);
    for (std::size_t j = 0; j < alpha.alpha.size(); ++j) {
        const double aj = alpha.alpha[j];
        const double nj = static_cast<double>(hist.counts[j]);
        ll += log_gamma(aj + nj) - log_gamma(aj);
    }
    return ll;
}

std::vector<double> md_log_likelihood_grad(const LabelHistogram& hist,
                                           const ConcentrationVector& alpha) {
    if (hist.counts.size() != alpha.alpha.size())
        throw std::invalid_argument("md_log_likelihood_grad: dimension mismatch");
    const double a0 = alpha.alpha0;
    const double v = static_cast<double>(hist.total);
    const double common = digamma(a0) - digamma(a0 + v);
    std::vector<double> grad(alpha.alpha.size());
    for (std::size_t j = 0; j < grad.size(); ++j) {
        const double aj = alpha.alpha[j];
        const double nj = static_cast<double>(hist.counts[j]);
        grad[j] = common + digamma(aj + nj) - digamma(aj);
    }
    return grad;
}

namespace {

// Objective and gradient in theta = ln(alpha) space over one or more
// histograms sharing the same alpha. We minimize -sum_h L_h.
struct LogSpaceObjective {
    const std::vector<LabelHistogram>& hists;

    double value(const std::vector<double>& theta) const {
        const auto alpha = alpha_of(theta);
        double total = 0.0;
        for (const auto& h : hists) total -= md_log_likelihood(h, alpha);
        return total;
    }
    std::vector<double> gradient(const std::vector<double>& theta) const {
        auto alpha = alpha_of(theta);
        std::vector<double> g(theta.size(), 0.0);
        for (const auto& h : hists) {
            const auto gh = md_log_likelihood_grad(h, alpha);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += gh[j];
        }
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = -g[j] * alpha.alpha[j];
        return g;
    }
    std::vector<double> alpha_space_gradient(const std::vector<double>& theta) const {
        const auto alpha = alpha_of(theta);
        std::vector<double> g(theta.size(), 0.0);
        for (const auto& h : hists) {
            const auto gh = md_log_likelihood_grad(h, alpha);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += gh[j];
        }
        return g;
    }
    // A single MD draw cannot bound the precision from above (the likelihood
    // can climb forever along the observed proportions), so theta is boxed;
    // divergent instances park at the edge. The box also keeps lnGamma(a0)
    // - lnGamma(a0+V) numerically resolvable: past ~1e13 the difference of
    // the two lgamma values drowns in their rounding error.
    static ConcentrationVector alpha_of(const std::vector<double>& theta) {
        std::vector<double> a(theta.size());
        for (std::size_t j = 0; j < theta.size(); ++j)
            a[j] = std::exp(std::clamp(theta[j], -30.0, 30.0));
        return ConcentrationVector::from_alpha(std::move(a));
    }
};

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

EstimateResult estimate_concentration_pooled(const std::vector<LabelHistogram>& hists,
                                             const ConcentrationVector& init, double tol,
                                             int max_iters) {
    if (hists.empty())
        throw std::invalid_argument("estimate_concentration: no histograms");
    for (const auto& h : hists)
        if (h.counts.size() != init.alpha.size())
            throw std::invalid_argument("estimate_concentration: dimension mismatch");
    if (!(tol > 0.0)) throw std::domain_error("estimate_concentration: tol <= 0");
    for (double a : init.alpha)
        if (!(a > 0.0)) throw std::domain_error("estimate_concentration: init not positive");

    // Likelihood is identically zero on empty histograms.
    bool all_empty = true;
    for (const auto& h : hists) all_empty = all_empty && h.all_zero();
    if (all_empty) return EstimateResult{init, true, 0};

    const std::size_t n = init.alpha.size();
    LogSpaceObjective obj{hists};

    std::vector<double> theta(n);
    for (std::size_t j = 0; j < n; ++j) theta[j] = std::log(init.alpha[j]);

    // Inverse Hessian approximation, identity start.
    std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) h[i][i] = 1.0;

    double f = obj.value(theta);
    auto grad = obj.gradient(theta);
    bool converged = false;
    int iter = 0;

    for (; iter < max_iters; ++iter) {
        // Convergence on the alpha-space gradient of L.
        if (norm2(obj.alpha_space_gradient(theta)) < tol) {
            converged = true;
            break;
        }

        // Search direction p = -H g.
        std::vector<double> dir(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dir[i] -= h[i][j] * grad[j];

        double slope = std::inner_product(dir.begin(), dir.end(), grad.begin(), 0.0);
        if (slope >= 0.0) {
            // H lost descent; restart from steepest descent.
            for (std::size_t i = 0; i < n; ++i) {
                std::fill(h[i].begin(), h[i].end(), 0.0);
                h[i][i] = 1.0;
                dir[i] = -grad[i];
            }
            slope = -norm2(grad) * norm2(grad);
        }

        // Backtracking Armijo line search, c = 1e-4, shrink 0.5.
        double step = 1.0;
        std::vector<double> theta_new(n);
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) theta_new[i] = theta[i] + step * dir[i];
            f_new = obj.value(theta_new);
            if (f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        auto grad_new = obj.gradient(theta_new);

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = theta_new[i] - theta[i];
            y[i] = grad_new[i] - grad[i];
        }
        // Step-size convergence in alpha space.
        auto a_old = LogSpaceObjective::alpha_of(theta);
        auto a_new = LogSpaceObjective::alpha_of(theta_new);
        double step_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = a_new.alpha[i] - a_old.alpha[i];
            step_norm += d * d;
        }
        step_norm = std::sqrt(step_norm);

        theta = theta_new;
        f = f_new;
        grad = grad_new;

        const double ys = std::inner_product(y.begin(), y.end(), s.begin(), 0.0);
        if (ys > 1e-12) {
            // H <- (I - s y^T / ys) H (I - y s^T / ys) + s s^T / ys
            const double rho = 1.0 / ys;
            std::vector<double> hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) hy[i] += h[i][j] * y[j];
            const double yhy = std::inner_product(y.begin(), y.end(), hy.begin(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    h[i][j] += rho * rho * (yhy + 1.0 / rho) * s[i] * s[j] -
                               rho * (hy[i] * s[j] + s[i] * hy[j]);
        }

        if (step_norm < tol) {
            ++iter;
            converged = true;
            break;
        }
    }

    return EstimateResult{LogSpaceObjective::alpha_of(theta), converged, iter};
}

EstimateResult estimate_concentration(const LabelHistogram& hist,
                                      const ConcentrationVector& init, double tol,
                                      int max_iters) {
    return estimate_concentration_pooled({hist}, init, tol, max_iters);
}

std::vector<double> sample_dirichlet(const std::vector<double>& alpha, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::vector<double> p(alpha.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        std::gamma_distribution<double> gamma(alpha[j], 1.0);
        p[j] = gamma(rng);
        sum += p[j];
    }
    if (sum <= 0.0) {
        // All gamma draws underflowed (tiny alpha); put mass on one class.
        std::uniform_int_distribution<std::size_t> pick(0, alpha.size() - 1);
        std::fill(p.begin(), p.end(), 0.0);
        p[pick(rng)] = 1.0;
        return p;
    }
    for (double& x : p) x /= sum;
    return p;
}

std::vector<UserDataset> sample_dirichlet_partition(const PartitionSpec& spec,
                                                    const std::vector<int>& source_labels,
                                                    std::uint64_t rng_seed) {
    spec.validate();
    const int c = spec.num_classes;

    std::vector<std::vector<int>> pool(c);  // indices unused; we only need labels
    for (int y : source_labels) {
        if (y < 0 || y >= c) throw std::invalid_argument("sample_dirichlet_partition: label out of range");
        pool[y].push_back(y);
    }
    for (int j = 0; j < c; ++j)
        if (pool[j].empty())
            throw std::invalid_argument("sample_dirichlet_partition: pool missing class " +
                                        std::to_string(j));

    std::vector<std::size_t> remaining(c);
    for (int j = 0; j < c; ++j) remaining[j] = pool[j].size();

    std::vector<UserDataset> out(spec.num_users);
    const std::vector<double> alpha(c, spec.concentration);

    for (int i = 0; i < spec.num_users; ++i) {
        auto props = sample_dirichlet(alpha, derive_seed(rng_seed, 1, (std::uint64_t)i));
        auto rng = make_rng(derive_seed(rng_seed, 2, (std::uint64_t)i));
        const std::int64_t beta = spec.samples_per_user[i];

        std::vector<int> labels;
        labels.reserve(beta);
        std::discrete_distribution<int> which(props.begin(), props.end());
        bool fallback = false;
        for (std::int64_t k = 0; k < beta; ++k) {
            int y = which(rng);
            if (remaining[y] > 0) {
                --remaining[y];
            } else {
                fallback = true;  // class exhausted, sample with replacement
            }
            labels.push_back(y);
        }
        UserDataset ds;
        ds.labels = std::move(labels);
        ds.histogram = LabelHistogram::from_labels(ds.labels, c);
        ds.features.assign(ds.labels.size(), {});
        ds.replacement_fallback = fallback;
        out[i] = std::move(ds);
    }
    return out;
}

std::string histograms_to_csv(const std::vector<LabelHistogram>& hists) {
    std::ostringstream os;
    for (std::size_t i = 0; i < hists.size(); ++i) {
        os << i;
        for (auto c : hists[i].counts) os << ',' << c;
        os << '\n';
    }
    return os.str();
}

std::vector<LabelHistogram> histograms_from_csv(const std::string& csv) {
    std::vector<LabelHistogram> out;
    std::istringstream is(csv);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::int64_t> counts;
        bool first = true;
        while (std::getline(ls, cell, ',')) {
            if (first) {
                first = false;  // user_id column
                continue;
            }
            counts.push_back(std::stoll(cell));
        }
        out.push_back(LabelHistogram::from_counts(std::move(counts)));
    }
    return out;
}

std::string alphas_to_csv(const std::vector<EstimateResult>& results) {
    std::ostringstream os;
    os.precision(17);
    os << "user_id";
    if (!results.empty())
        for (std::size_t j = 0; j < results[0].alpha.size(); ++j) os << ",alpha_" << j + 1;
    os << ",converged,iterations\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        os << i;
        for (double a : results[i].alpha.alpha) os << ',' << a;
        os << ',' << (results[i].converged ? 1 : 0) << ',' << results[i].iterations << '\n';
    }
    return os.str();
}

}  // namespace cfn
