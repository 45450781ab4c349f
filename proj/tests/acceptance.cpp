// End-to-end acceptance audit. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails or exceeds its budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cfn/allocation.hpp"
#include "cfn/channel.hpp"
#include "cfn/clustering.hpp"
#include "cfn/dirichlet.hpp"
#include "cfn/fl.hpp"
#include "cfn/rng.hpp"
#include "cfn/sim.hpp"

using namespace cfn;

namespace {

struct Criterion {
    std::string name;
    double budget_s;
    std::function<bool(std::string&)> run;
};

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

ConcentrationVector cv(std::vector<double> a) {
    return ConcentrationVector::from_alpha(std::move(a));
}

std::vector<ConcentrationVector> three_group_mixture(std::uint64_t seed, int per_group,
                                                     double sigma, std::vector<int>* truth) {
    const std::vector<std::vector<double>> centers{{5, 1, 1}, {1, 5, 1}, {1, 1, 5}};
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<ConcentrationVector> pts;
    for (int g = 0; g < 3; ++g)
        for (int i = 0; i < per_group; ++i) {
            auto a = centers[g];
            for (auto& x : a) x = std::max(1e-3, x + noise(rng));
            pts.push_back(cv(a));
            if (truth) truth->push_back(g);
        }
    return pts;
}

LabelHistogram draw_md_histogram(const std::vector<double>& alpha, std::int64_t total,
                                 std::uint64_t seed) {
    const auto props = sample_dirichlet(alpha, derive_seed(seed, 1));
    auto rng = make_rng(derive_seed(seed, 2));
    std::discrete_distribution<int> which(props.begin(), props.end());
    std::vector<std::int64_t> counts(alpha.size(), 0);
    for (std::int64_t k = 0; k < total; ++k) ++counts[which(rng)];
    return LabelHistogram::from_counts(std::move(counts));
}

bool has_blocking_pair(const Matching& mu, const AllocationContext& ctx) {
    for (int m = 0; m < ctx.num_users(); ++m)
        for (int j = m + 1; j < ctx.num_users(); ++j) {
            if (mu.channel_of[m] == mu.channel_of[j]) continue;
            if (swap_blocking_pair(mu, m, j, ctx)) return true;
        }
    return false;
}

// ---- criteria ------------------------------------------------------------

bool check_gradients(std::string& detail) {
    auto rng = make_rng(2024);
    std::uniform_int_distribution<int> classes(3, 6);
    std::uniform_int_distribution<std::int64_t> count(0, 50);
    std::uniform_real_distribution<double> logu(std::log(0.1), std::log(10.0));
    double worst_md = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int c = classes(rng);
        std::vector<std::int64_t> n(c);
        std::vector<double> a(c);
        for (int j = 0; j < c; ++j) {
            n[j] = count(rng);
            a[j] = std::exp(logu(rng));
        }
        n[0] += 1;  // avoid the all-zero histogram
        const auto hist = LabelHistogram::from_counts(n);
        const auto grad = md_log_likelihood_grad(hist, cv(a));
        for (int j = 0; j < c; ++j) {
            const double h = 1e-6 * std::max(1.0, a[j]);
            auto hi = a, lo = a;
            hi[j] += h;
            lo[j] -= h;
            const double fd =
                (md_log_likelihood(hist, cv(hi)) - md_log_likelihood(hist, cv(lo))) / (2 * h);
            worst_md = std::max(worst_md, rel_err(grad[j], fd));
        }
    }

    double worst_sgd = 0.0;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, 2);
    for (int t = 0; t < 100; ++t) {
        UserDataset d;
        for (int k = 0; k < 8; ++k) {
            std::vector<double> x(4);
            for (auto& v : x) v = normal(rng);
            d.features.push_back(std::move(x));
            d.labels.push_back(lab(rng));
        }
        d.histogram = LabelHistogram::from_labels(d.labels, 3);
        ModelParams m = ModelParams::zeros(12);
        for (auto& w : m.weights) w = 0.5 * normal(rng);
        const auto grad = local_loss_grad(m, d, 3);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double h = 1e-6;
            auto hi = m, lo = m;
            hi.weights[i] += h;
            lo.weights[i] -= h;
            const double fd = (local_loss(hi, d, 3) - local_loss(lo, d, 3)) / (2 * h);
            worst_sgd = std::max(worst_sgd, rel_err(grad[i], fd));
        }
    }
    std::ostringstream os;
    os << "max rel err: likelihood " << worst_md << ", sgd " << worst_sgd;
    detail = os.str();
    return worst_md <= 1e-5 && worst_sgd <= 1e-4;
}

bool check_bfgs_recovery(std::string& detail) {
    // 10^4 samples per seed, spread over 100 histograms sharing one alpha:
    // a lone histogram fixes only the direction of alpha, never its scale.
    const std::vector<double> truth{2.0, 2.0, 2.0};
    std::vector<double> avg(3, 0.0);
    for (int s = 0; s < 20; ++s) {
        std::vector<LabelHistogram> hists;
        for (int k = 0; k < 100; ++k)
            hists.push_back(draw_md_histogram(truth, 100, derive_seed(40, s, k)));
        const auto est =
            estimate_concentration_pooled(hists, cv({1.0, 1.0, 1.0}));
        if (!est.converged) {
            detail = "estimator failed to converge";
            return false;
        }
        for (int j = 0; j < 3; ++j) avg[j] += est.alpha.alpha[j] / 20.0;
    }
    std::ostringstream os;
    os << "mean estimate (" << avg[0] << ", " << avg[1] << ", " << avg[2] << ") vs (2, 2, 2)";
    detail = os.str();
    for (int j = 0; j < 3; ++j)
        if (std::abs(avg[j] - 2.0) / 2.0 > 0.10) return false;
    return true;
}

bool check_spectral(std::string& detail) {
    // Exact near-zero eigenvalue counts on disconnected block graphs.
    for (int z = 2; z <= 4; ++z) {
        const int n = 12, per = n / z;
        SimilarityGraph g;
        g.weights = Matrix(n, n, 0.0);
        g.degrees.assign(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && i / per == j / per) {
                    g.weights(i, j) = 1.0;
                    g.degrees[i] += 1.0;
                }
        const auto eig = smallest_eigenpairs(graph_laplacian(g), n);
        int near_zero = 0;
        for (double v : eig.eigenvalues)
            if (std::abs(v) < 1e-8) ++near_zero;
        if (near_zero != z || select_num_clusters(eig.eigenvalues, 1, n - 1) != z) {
            detail = "block graph with " + std::to_string(z) + " components: got " +
                     std::to_string(near_zero) + " null directions";
            return false;
        }
    }

    // Cluster-count selection and agreement on the noisy 3-center mixture.
    int hits = 0;
    double ari_sum = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        std::vector<int> truth;
        const auto pts = three_group_mixture(derive_seed(50, 0, s), 4, 0.1, &truth);
        const auto a = spectral_cluster(pts, 0.0, std::nullopt, derive_seed(50, 1, s));
        if (a.num_clusters == 3) ++hits;
        ari_sum += adjusted_rand_index(a.labels, truth);
    }
    std::ostringstream os;
    os << "selected Z=3 on " << hits << "/100 seeds, mean ARI " << ari_sum / seeds;
    detail = os.str();
    return hits >= 95 && ari_sum / seeds >= 0.9;
}

bool check_kkt_oracle(std::string& detail) {
    ExperimentConfig cfg;
    cfg.seed = 60;
    const auto rows = run_oracle_check(cfg, 500);
    double worst_gap = 0.0, worst_res = 0.0;
    for (const auto& r : rows) {
        worst_gap = std::max(worst_gap, r.relative_gap);
        worst_res = std::max(worst_res, r.kkt_residual);
    }
    std::ostringstream os;
    os << rows.size() << " instances, worst energy gap " << worst_gap << ", worst residual "
       << worst_res;
    detail = os.str();
    return rows.size() == 500 && worst_gap <= 1e-4 && worst_res <= 1e-6;
}

bool check_matching(std::string& detail) {
    ExperimentConfig cfg;
    cfg.seed = 70;

    // N = 4: the swap dynamics must land on the exhaustive optimum.
    for (int s = 0; s < 50; ++s) {
        const auto ctx = make_allocation_instance(cfg, 4, derive_seed(70, 0, s));
        const auto matched = match_subchannels(ctx, derive_seed(70, 1, s));
        const auto best = brute_force_matching(ctx);
        if (has_blocking_pair(matched.matching, ctx)) {
            detail = "blocking pair left at N=4, seed " + std::to_string(s);
            return false;
        }
        if (rel_err(matched.energy, best.energy) > 1e-9) {
            detail = "N=4 seed " + std::to_string(s) + " not optimal";
            return false;
        }
    }

    // N = 10: near-optimal with bounded work.
    std::vector<double> ratios;
    int max_cycles = 0;
    for (int s = 0; s < 50; ++s) {
        const auto ctx = make_allocation_instance(cfg, 10, derive_seed(70, 2, s));
        const auto matched = match_subchannels(ctx, derive_seed(70, 3, s));
        const auto best = brute_force_matching(ctx);
        if (has_blocking_pair(matched.matching, ctx)) {
            detail = "blocking pair left at N=10, seed " + std::to_string(s);
            return false;
        }
        ratios.push_back(matched.energy / best.energy);
        max_cycles = std::max(max_cycles, matched.cycles);
    }
    std::sort(ratios.begin(), ratios.end());
    const double median = 0.5 * (ratios[24] + ratios[25]);
    std::ostringstream os;
    os << "N=4 exact on 50 seeds; N=10 median ratio " << median << ", worst " << ratios.back()
       << ", max cycles " << max_cycles;
    detail = os.str();
    return median <= 1.25 && max_cycles <= 100;
}

bool check_energy_direction(std::string& detail) {
    // Longer deadlines never cost more energy.
    const std::vector<double> ts{2.5, 3.0, 4.0, 5.0, 6.0};
    for (int s = 0; s < 10; ++s) {
        ExperimentConfig cfg;
        cfg.seed = 80 + (std::uint64_t)s;
        const auto rows = sweep_t_max(cfg, ts);
        double prev = 1e300;
        for (const auto& r : rows) {
            if (!r.feasible) continue;
            if (r.kkt_energy > prev * (1.0 + 1e-9)) {
                detail = "energy increased with t_max at seed " + std::to_string(s);
                return false;
            }
            prev = r.kkt_energy;
        }
    }

    // Shared-channel transmission beats pure time-splitting in total energy
    // when the deadline actually binds.
    ExperimentConfig cfg;
    cfg.seed = 81;
    cfg.t_max_s = 0.8;
    double total_noma = 0.0, total_oma = 0.0;
    int wins = 0;
    for (int s = 0; s < 20; ++s) {
        auto ctx = make_allocation_instance(cfg, 8, derive_seed(81, 0, s));
        auto oma = ctx;
        oma.access = AccessMode::oma;
        const double en = brute_force_matching(ctx).energy;
        const double eo = brute_force_matching(oma).energy;
        total_noma += en;
        total_oma += eo;
        if (en <= eo + 1e-12) ++wins;
    }
    std::ostringstream os;
    os << "monotone in t_max on 10 seeds; noma total " << total_noma << " J vs oma "
       << total_oma << " J (" << wins << "/20 instances)";
    detail = os.str();
    return total_noma <= total_oma;
}

bool check_clustering_benefit(std::string& detail) {
    int wins = 0;
    double mean_prop = 0.0, mean_none = 0.0;
    for (int s = 1; s <= 20; ++s) {
        ExperimentConfig cfg;
        cfg.seed = (std::uint64_t)s * 1000 + 7;
        cfg.num_users = 12;
        cfg.num_classes = 3;
        cfg.feature_dim = 6;
        cfg.samples_per_user = 60;
        cfg.groups = {{20.0, 1.0, 1.0}, {1.0, 20.0, 1.0}, {1.0, 1.0, 20.0}};
        cfg.feature_noise = 2.5;
        cfg.training.rounds = 15;

        auto run_mode = [&](ClusteringMode m) {
            auto c = cfg;
            c.clustering_mode = m;
            return run_experiment(c).final_accuracy;
        };
        const double prop = run_mode(ClusteringMode::proposed);
        const double rand = run_mode(ClusteringMode::random_clusters);
        const double none = run_mode(ClusteringMode::no_clustering);
        if (prop > rand) ++wins;
        mean_prop += prop / 20.0;
        mean_none += none / 20.0;
    }
    std::ostringstream os;
    os << "beats random assignment on " << wins << "/20 paired seeds; mean accuracy "
       << mean_prop << " vs " << mean_none << " without clustering";
    detail = os.str();
    return wins >= 16 && mean_prop > mean_none;
}

bool check_bound_formulas(std::string& detail) {
    ConvergenceParams p;
    p.lipschitz = 2.0;
    p.pl_constant = 0.5;
    p.grad_variance_bound = 0.0;
    const double eta = 0.5;

    // Hand-computed spot values, exact.
    const auto single = convergence_bound_rhs(1.0, p, eta, {7.0});
    if (single.contraction != 0.5 || single.value != 0.5) {
        detail = "single-user contraction off";
        return false;
    }
    const auto equal = convergence_bound_rhs(2.0, p, eta, {3.0, 3.0, 3.0, 3.0});
    if (std::abs(equal.contraction - 0.875) > 1e-15) {
        detail = "equal-weight contraction off";
        return false;
    }
    ConvergenceParams q;
    q.confidence = 0.05;
    q.concentration_sum = 2.5;
    const double gen = generalization_term(q, {6.0}, {2.5});
    if (rel_err(gen, std::sqrt(std::log(40.0) / 288.0)) > 1e-15) {
        detail = "single-user generalization term off";
        return false;
    }

    // Quadratic toy: n local losses 0.5 (w - c_i)^2, full participation,
    // equal weights, eta = 1/L. Emit both sequences; the bound's contraction
    // factor must equal 1 - 2 eta mu / n analytically and dominate the run.
    const int n = 5;
    const std::vector<double> centers{-1.0, 0.5, 2.0, 0.0, -0.5};
    double cbar = 0.0;
    for (double c : centers) cbar += c / n;
    ConvergenceParams toy;
    toy.lipschitz = 1.0;
    toy.pl_constant = 1.0;
    toy.grad_variance_bound = 0.0;
    auto loss = [&](double w) {
        double f = 0.0;
        for (double c : centers) f += 0.5 * (w - c) * (w - c) / n;
        return f;
    };
    const double fstar = loss(cbar);
    const double toy_eta = 0.3;
    double w = 4.0, gap = loss(w) - fstar;
    std::ostringstream seq;
    seq << "gap/bound:";
    for (int r = 0; r < 8; ++r) {
        const auto step = convergence_bound_rhs(gap, toy, toy_eta, std::vector<double>(n, 1.0));
        if (std::abs(step.contraction - (1.0 - 2.0 * toy_eta / n)) > 1e-15) {
            detail = "toy contraction factor off";
            return false;
        }
        w -= toy_eta * (w - cbar);  // one exact gradient step
        const double next = loss(w) - fstar;
        seq << ' ' << next << '/' << step.value;
        if (next > step.value + 1e-12) {
            detail = "bound violated on the toy problem";
            return false;
        }
        gap = next;
    }
    detail = seq.str();
    return true;
}

bool check_determinism(std::string& detail) {
    ExperimentConfig cfg;
    cfg.seed = 42;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    const bool same = a.metrics_csv() == b.metrics_csv() && a.clusters_csv() == b.clusters_csv();
    detail = same ? "seed-42 metrics byte-identical across runs" : "runs diverged";
    return same;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"gradient-correctness", 10.0, check_gradients},
        {"concentration-recovery", 30.0, check_bfgs_recovery},
        {"spectral-pipeline", 60.0, check_spectral},
        {"power-allocation-vs-oracle", 60.0, check_kkt_oracle},
        {"swap-matching-quality", 120.0, check_matching},
        {"energy-direction", 120.0, check_energy_direction},
        {"clustering-benefit", 600.0, check_clustering_benefit},
        {"bound-formulas", 30.0, check_bound_formulas},
        {"determinism", 300.0, check_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            ok = false;
            detail += " [over budget]";
        }
        std::printf("%s %-28s (%6.2f s)  %s\n", ok ? "PASS" : "FAIL", c.name.c_str(), secs,
                    detail.c_str());
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
