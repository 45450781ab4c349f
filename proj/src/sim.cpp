#include "cfn/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cfn/rng.hpp"

namespace cfn {

using nlohmann::json;

namespace {

const char* to_string(ClusteringMode m) {
    switch (m) {
        case ClusteringMode::proposed: return "proposed";
        case ClusteringMode::random_clusters: return "random_clusters";
        case ClusteringMode::no_clustering: return "no_clustering";
    }
    return "?";
}
const char* to_string(AllocationMode m) {
    switch (m) {
        case AllocationMode::matching_kkt: return "matching_kkt";
        case AllocationMode::matching_fixed_power: return "matching_fixed_power";
        case AllocationMode::random_fixed_power: return "random_fixed_power";
    }
    return "?";
}
const char* to_string(AccessMode m) { return m == AccessMode::noma ? "noma" : "oma"; }

ClusteringMode clustering_mode_of(const std::string& s) {
    if (s == "proposed") return ClusteringMode::proposed;
    if (s == "random_clusters") return ClusteringMode::random_clusters;
    if (s == "no_clustering") return ClusteringMode::no_clustering;
    throw std::invalid_argument("clustering_mode: unknown value '" + s + "'");
}
AllocationMode allocation_mode_of(const std::string& s) {
    if (s == "matching_kkt") return AllocationMode::matching_kkt;
    if (s == "matching_fixed_power") return AllocationMode::matching_fixed_power;
    if (s == "random_fixed_power") return AllocationMode::random_fixed_power;
    throw std::invalid_argument("allocation_mode: unknown value '" + s + "'");
}
AccessMode access_mode_of(const std::string& s) {
    if (s == "noma") return AccessMode::noma;
    if (s == "oma") return AccessMode::oma;
    throw std::invalid_argument("access_mode: unknown value '" + s + "'");
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& path, std::vector<std::string>& errors) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            errors.push_back(path + ": unknown key '" + it.key() + "'");
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    if (num_users < 1) errors.push_back("num_users: must be >= 1");
    if (num_classes < 2) errors.push_back("num_classes: must be >= 2");
    if (feature_dim < 1) errors.push_back("feature_dim: must be >= 1");
    if (samples_per_user < 4) errors.push_back("samples_per_user: must be >= 4");
    if (!(concentration > 0.0)) errors.push_back("concentration: must be > 0");
    for (const auto& g : groups) {
        if ((int)g.size() != num_classes)
            errors.push_back("groups: each center must have num_classes entries");
        for (double a : g)
            if (!(a > 0.0)) errors.push_back("groups: concentrations must be > 0");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        errors.push_back("test_fraction: must be in (0,1)");
    if (num_subchannels < 1) errors.push_back("num_subchannels: must be >= 1");
    if (!(t_max_s > 0.0)) errors.push_back("t_max_s: must be > 0");
    if (!(model_bits > 0.0)) errors.push_back("model_bits: must be > 0");
    if (!(cpu_hz_min > 0.0) || cpu_hz_max < cpu_hz_min)
        errors.push_back("cpu_hz: need 0 < cpu_hz_min <= cpu_hz_max");
    if (!(max_power_w > 0.0)) errors.push_back("max_power_w: must be > 0");
    if (!(fixed_power_w > 0.0)) errors.push_back("fixed_power_w: must be > 0");
    try {
        link.validate();
    } catch (const std::exception& e) {
        errors.push_back(std::string("link: ") + e.what());
    }
    try {
        training.validate();
    } catch (const std::exception& e) {
        errors.push_back(std::string("training: ") + e.what());
    }
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
}

ExperimentConfig config_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    std::vector<std::string> errors;
    ExperimentConfig c;

    reject_unknown_keys(j,
                        {"seed", "num_users", "num_classes", "feature_dim", "samples_per_user",
                         "concentration", "groups", "feature_noise", "test_fraction",
                         "num_subchannels", "t_max_s", "model_bits", "clustering_mode",
                         "allocation_mode", "access_mode", "z_override", "cluster_bandwidth",
                         "link", "device", "training", "convergence"},
                        "config", errors);
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
    if (!j.contains("seed")) throw std::invalid_argument("invalid config: seed is required");

    c.seed = j.at("seed").get<std::uint64_t>();
    c.num_users = j.value("num_users", c.num_users);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.samples_per_user = j.value("samples_per_user", c.samples_per_user);
    c.concentration = j.value("concentration", c.concentration);
    if (j.contains("groups"))
        c.groups = j.at("groups").get<std::vector<std::vector<double>>>();
    c.feature_noise = j.value("feature_noise", c.feature_noise);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.num_subchannels = j.value("num_subchannels", c.num_subchannels);
    c.t_max_s = j.value("t_max_s", c.t_max_s);
    c.model_bits = j.value("model_bits", c.model_bits);
    if (j.contains("clustering_mode"))
        c.clustering_mode = clustering_mode_of(j.at("clustering_mode").get<std::string>());
    if (j.contains("allocation_mode"))
        c.allocation_mode = allocation_mode_of(j.at("allocation_mode").get<std::string>());
    if (j.contains("access_mode"))
        c.access_mode = access_mode_of(j.at("access_mode").get<std::string>());
    c.z_override = j.value("z_override", c.z_override);
    c.cluster_bandwidth = j.value("cluster_bandwidth", c.cluster_bandwidth);

    if (j.contains("link")) {
        const auto& l = j.at("link");
        reject_unknown_keys(l,
                            {"bandwidth_hz", "noise_variance", "wavelength_m", "antenna_gain",
                             "pathloss_exp", "cell_radius_m"},
                            "config.link", errors);
        c.link.bandwidth_hz = l.value("bandwidth_hz", c.link.bandwidth_hz);
        c.link.noise_variance = l.value("noise_variance", c.link.noise_variance);
        c.link.wavelength_m = l.value("wavelength_m", c.link.wavelength_m);
        c.link.antenna_gain = l.value("antenna_gain", c.link.antenna_gain);
        c.link.pathloss_exp = l.value("pathloss_exp", c.link.pathloss_exp);
        c.link.cell_radius_m = l.value("cell_radius_m", c.link.cell_radius_m);
    }
    if (j.contains("device")) {
        const auto& d = j.at("device");
        reject_unknown_keys(d,
                            {"cpu_hz_min", "cpu_hz_max", "cycles_per_bit", "energy_coeff",
                             "max_power_w", "fixed_power_w"},
                            "config.device", errors);
        c.cpu_hz_min = d.value("cpu_hz_min", c.cpu_hz_min);
        c.cpu_hz_max = d.value("cpu_hz_max", c.cpu_hz_max);
        c.cycles_per_bit = d.value("cycles_per_bit", c.cycles_per_bit);
        c.energy_coeff = d.value("energy_coeff", c.energy_coeff);
        c.max_power_w = d.value("max_power_w", c.max_power_w);
        c.fixed_power_w = d.value("fixed_power_w", c.fixed_power_w);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        reject_unknown_keys(t, {"learning_rate", "local_epochs", "batch_size", "rounds"},
                            "config.training", errors);
        c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
        c.training.local_epochs = t.value("local_epochs", c.training.local_epochs);
        c.training.batch_size = t.value("batch_size", c.training.batch_size);
        c.training.rounds = t.value("rounds", c.training.rounds);
    }
    if (j.contains("convergence")) {
        const auto& v = j.at("convergence");
        reject_unknown_keys(v,
                            {"lipschitz", "pl_constant", "grad_variance_bound", "confidence",
                             "concentration_sum"},
                            "config.convergence", errors);
        c.convergence.lipschitz = v.value("lipschitz", c.convergence.lipschitz);
        c.convergence.pl_constant = v.value("pl_constant", c.convergence.pl_constant);
        c.convergence.grad_variance_bound =
            v.value("grad_variance_bound", c.convergence.grad_variance_bound);
        c.convergence.confidence = v.value("confidence", c.convergence.confidence);
        c.convergence.concentration_sum =
            v.value("concentration_sum", c.convergence.concentration_sum);
    }
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["num_users"] = c.num_users;
    j["num_classes"] = c.num_classes;
    j["feature_dim"] = c.feature_dim;
    j["samples_per_user"] = c.samples_per_user;
    j["concentration"] = c.concentration;
    if (!c.groups.empty()) j["groups"] = c.groups;
    j["feature_noise"] = c.feature_noise;
    j["test_fraction"] = c.test_fraction;
    j["num_subchannels"] = c.num_subchannels;
    j["t_max_s"] = c.t_max_s;
    j["model_bits"] = c.model_bits;
    j["clustering_mode"] = to_string(c.clustering_mode);
    j["allocation_mode"] = to_string(c.allocation_mode);
    j["access_mode"] = to_string(c.access_mode);
    j["z_override"] = c.z_override;
    j["cluster_bandwidth"] = c.cluster_bandwidth;
    j["link"] = {{"bandwidth_hz", c.link.bandwidth_hz},
                 {"noise_variance", c.link.noise_variance},
                 {"wavelength_m", c.link.wavelength_m},
                 {"antenna_gain", c.link.antenna_gain},
                 {"pathloss_exp", c.link.pathloss_exp},
                 {"cell_radius_m", c.link.cell_radius_m}};
    j["device"] = {{"cpu_hz_min", c.cpu_hz_min},     {"cpu_hz_max", c.cpu_hz_max},
                   {"cycles_per_bit", c.cycles_per_bit}, {"energy_coeff", c.energy_coeff},
                   {"max_power_w", c.max_power_w},   {"fixed_power_w", c.fixed_power_w}};
    j["training"] = {{"learning_rate", c.training.learning_rate},
                     {"local_epochs", c.training.local_epochs},
                     {"batch_size", c.training.batch_size},
                     {"rounds", c.training.rounds}};
    j["convergence"] = {{"lipschitz", c.convergence.lipschitz},
                        {"pl_constant", c.convergence.pl_constant},
                        {"grad_variance_bound", c.convergence.grad_variance_bound},
                        {"confidence", c.convergence.confidence},
                        {"concentration_sum", c.convergence.concentration_sum}};
    return j.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

Population make_population(const ExperimentConfig& config) {
    config.validate();
    const int c = config.num_classes;
    const int d = config.feature_dim;

    // Class feature centers, shared by all groups (label-distribution skew only).
    std::vector<std::vector<double>> centers(c, std::vector<double>(d, 0.0));
    {
        auto rng = make_rng(derive_seed(config.seed, 101));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int y = 0; y < c; ++y)
            for (int jj = 0; jj < d; ++jj) centers[y][jj] = 2.0 * normal(rng);
    }

    Population pop;
    pop.group_of.assign(config.num_users, -1);
    pop.train.resize(config.num_users);
    pop.test.resize(config.num_users);

    for (int i = 0; i < config.num_users; ++i) {
        std::vector<double> alpha;
        if (config.groups.empty()) {
            alpha.assign(c, config.concentration);
        } else {
            pop.group_of[i] = i % (int)config.groups.size();
            alpha = config.groups[pop.group_of[i]];
        }
        auto props = sample_dirichlet(alpha, derive_seed(config.seed, 102, (std::uint64_t)i));

        auto rng = make_rng(derive_seed(config.seed, 103, (std::uint64_t)i));
        std::discrete_distribution<int> which(props.begin(), props.end());
        std::normal_distribution<double> noise(0.0, config.feature_noise);

        const int total = config.samples_per_user;
        const int test_count = std::max(1, (int)std::lround(total * config.test_fraction));
        const int train_count = total - test_count;

        auto draw_into = [&](UserDataset& ds, int count) {
            ds.labels.reserve(count);
            ds.features.reserve(count);
            for (int k = 0; k < count; ++k) {
                const int y = which(rng);
                std::vector<double> x(d);
                for (int jj = 0; jj < d; ++jj) x[jj] = centers[y][jj] + noise(rng);
                ds.labels.push_back(y);
                ds.features.push_back(std::move(x));
            }
            ds.histogram = LabelHistogram::from_labels(ds.labels, c);
        };
        draw_into(pop.train[i], train_count);
        draw_into(pop.test[i], test_count);
    }
    return pop;
}

AllocationContext make_allocation_instance(const ExperimentConfig& config, int num_users,
                                           std::uint64_t seed) {
    if (num_users % 2 != 0) throw std::invalid_argument("make_allocation_instance: odd N");
    AllocationContext ctx;
    ctx.budget = config.link;
    ctx.t_max = config.t_max_s;
    ctx.model_bits = config.model_bits;
    ctx.policy = config.allocation_mode == AllocationMode::matching_kkt ? PowerPolicy::kkt
                                                                       : PowerPolicy::fixed;
    ctx.access = config.access_mode;
    ctx.fixed_power_w = config.fixed_power_w;

    auto rng = make_rng(derive_seed(seed, 201));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int channels = num_users / 2;
    for (int i = 0; i < num_users; ++i) {
        DeviceProfile dev;
        dev.cpu_hz = config.cpu_hz_min + (config.cpu_hz_max - config.cpu_hz_min) * u01(rng);
        dev.samples = (double)config.samples_per_user;
        dev.cycles_per_bit = config.cycles_per_bit;
        dev.energy_coeff = config.energy_coeff;
        dev.distance_m = config.link.cell_radius_m * std::sqrt(u01(rng));
        dev.max_power_w = config.max_power_w;
        ctx.devices.push_back(dev);
        ctx.data_bits.push_back(config.model_bits);
        std::vector<double> g(channels);
        for (int k = 0; k < channels; ++k)
            g[k] = sample_channel_gain(dev, config.link,
                                       derive_seed(seed, 202, (std::uint64_t)(i * 1000 + k)));
        ctx.gains.push_back(std::move(g));
    }
    return ctx;
}

namespace {

struct RoundAllocation {
    std::vector<int> feasible_users;  // indices into the context's user list
    double energy = 0.0;
    int infeasible = 0;
    int cycles = 0;
};

RoundAllocation allocate_round(const AllocationContext& ctx, AllocationMode mode,
                               std::uint64_t seed) {
    RoundAllocation out;
    MatchResult mr;
    if (mode == AllocationMode::random_fixed_power) {
        // Random matching, no swaps.
        const int n = ctx.num_users();
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        auto rng = make_rng(derive_seed(seed, 31));
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::array<int, 2>> pairs(n / 2);
        for (int c = 0; c < n / 2; ++c) pairs[c] = {order[2 * c], order[2 * c + 1]};
        mr.matching = Matching::from_pairs(std::move(pairs), n);
        mr.cycles = 0;
    } else {
        mr = match_subchannels(ctx, derive_seed(seed, 32));
    }
    out.cycles = mr.cycles;
    for (int k = 0; k < (int)mr.matching.pairs.size(); ++k) {
        const auto po = ctx.evaluate_pair(mr.matching.pairs[k][0], mr.matching.pairs[k][1], k);
        if (po.feasible) {
            out.energy += po.total();
            for (int u : mr.matching.pairs[k])
                if (ctx.data_bits[u] > 0.0) out.feasible_users.push_back(u);
        } else {
            for (int u : mr.matching.pairs[k])
                if (ctx.data_bits[u] > 0.0) ++out.infeasible;
        }
    }
    return out;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    RunReport report;
    auto pop = make_population(config);
    const int n = config.num_users;
    const int c = config.num_classes;

    // Per-user concentration estimates from the training histograms.
    std::vector<ConcentrationVector> alpha_hat;
    for (int i = 0; i < n; ++i) {
        auto init = ConcentrationVector::from_alpha(std::vector<double>(c, 1.0));
        auto est = estimate_concentration(pop.train[i].histogram, init);
        report.alpha_estimates.push_back(est);
        alpha_hat.push_back(est.alpha);
    }

    // Clustering on the normalized estimates. A single histogram pins down the
    // concentration direction but not its scale, so the raw magnitudes carry
    // optimizer artifacts; alpha / alpha0 is the identifiable part.
    std::vector<ConcentrationVector> alpha_dir;
    for (const auto& a : alpha_hat) {
        std::vector<double> v = a.alpha;
        for (double& x : v) x /= a.alpha0;
        alpha_dir.push_back(ConcentrationVector::from_alpha(std::move(v)));
    }

    std::vector<int> cluster_of(n, 0);
    int num_clusters = 1;
    if (config.clustering_mode != ClusteringMode::no_clustering && n >= 2) {
        std::optional<int> z;
        if (config.z_override > 0) z = config.z_override;
        auto assign = spectral_cluster(alpha_dir, config.cluster_bandwidth, z,
                                       derive_seed(config.seed, 301));
        num_clusters = assign.num_clusters;
        if (config.clustering_mode == ClusteringMode::proposed) {
            cluster_of = assign.labels;
        } else {
            // Same number of clusters, membership shuffled.
            auto rng = make_rng(derive_seed(config.seed, 302));
            for (int i = 0; i < n; ++i) cluster_of[i] = i % num_clusters;
            std::shuffle(cluster_of.begin(), cluster_of.end(), rng);
        }
    }
    report.cluster_labels = cluster_of;
    report.num_clusters = num_clusters;

    std::vector<std::vector<int>> members(num_clusters);
    for (int i = 0; i < n; ++i) members[cluster_of[i]].push_back(i);

    // Devices.
    std::vector<DeviceProfile> devices(n);
    {
        auto rng = make_rng(derive_seed(config.seed, 303));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            devices[i].cpu_hz =
                config.cpu_hz_min + (config.cpu_hz_max - config.cpu_hz_min) * u01(rng);
            devices[i].samples = (double)pop.train[i].labels.size();
            devices[i].cycles_per_bit = config.cycles_per_bit;
            devices[i].energy_coeff = config.energy_coeff;
            devices[i].distance_m = config.link.cell_radius_m * std::sqrt(u01(rng));
            devices[i].max_power_w = config.max_power_w;
        }
    }

    const int dim = c * config.feature_dim;
    std::vector<ModelParams> models(num_clusters, ModelParams::zeros(dim));
    std::vector<double> prev_loss(num_clusters, -1.0);

    for (int round = 0; round < config.training.rounds; ++round) {
        for (int z = 0; z < num_clusters; ++z) {
            if (members[z].empty()) continue;

            // Select up to 2K participants, pad to an even count with a
            // zero-data virtual user.
            std::vector<int> selected = members[z];
            auto rng = make_rng(derive_seed(config.seed, 401,
                                            (std::uint64_t)(round * 1000 + z)));
            std::shuffle(selected.begin(), selected.end(), rng);
            const int want = std::min<int>(2 * config.num_subchannels, (int)selected.size());
            selected.resize(want);
            std::sort(selected.begin(), selected.end());

            AllocationContext ctx;
            ctx.budget = config.link;
            ctx.t_max = config.t_max_s;
            ctx.model_bits = config.model_bits;
            ctx.policy = config.allocation_mode == AllocationMode::matching_kkt
                             ? PowerPolicy::kkt
                             : PowerPolicy::fixed;
            ctx.access = config.access_mode;
            ctx.fixed_power_w = config.fixed_power_w;
            for (int u : selected) {
                ctx.devices.push_back(devices[u]);
                ctx.data_bits.push_back(config.model_bits);
                std::vector<double> g(config.num_subchannels);
                for (int k = 0; k < config.num_subchannels; ++k)
                    g[k] = sample_channel_gain(
                        devices[u], config.link,
                        derive_seed(config.seed, 402,
                                    mix64((std::uint64_t)round) ^
                                        (std::uint64_t)(u * 1009 + k * 7 + z * 131071)));
                ctx.gains.push_back(std::move(g));
            }
            // Pad with virtual zero-data users up to 2K.
            while ((int)ctx.devices.size() < 2 * config.num_subchannels) {
                DeviceProfile virt;
                virt.cpu_hz = config.cpu_hz_min;
                virt.samples = 0.0;
                virt.cycles_per_bit = config.cycles_per_bit;
                virt.energy_coeff = config.energy_coeff;
                virt.distance_m = config.link.cell_radius_m;
                virt.max_power_w = config.max_power_w;
                ctx.devices.push_back(virt);
                ctx.data_bits.push_back(0.0);
                ctx.gains.push_back(std::vector<double>(config.num_subchannels, 0.0));
            }

            const auto alloc =
                allocate_round(ctx, config.allocation_mode,
                               derive_seed(config.seed, 403, (std::uint64_t)(round * 1000 + z)));
            report.matching_cycles.push_back(alloc.cycles);

            // Local updates for users in feasible pairs.
            std::vector<std::pair<ModelParams, double>> updates;
            for (int local : alloc.feasible_users) {
                const int u = selected[local];
                auto w = local_sgd_update(models[z], pop.train[u], config.training, c,
                                          derive_seed(config.seed, 404,
                                                      (std::uint64_t)(round * 100000 + u)));
                updates.emplace_back(std::move(w), (double)pop.train[u].labels.size());
            }
            if (!updates.empty()) models[z] = fedavg_aggregate(updates);

            // Metrics over the cluster's members.
            double loss = global_loss(pop.train, models[z], members[z], c);
            double beta_total = 0.0, acc = 0.0;
            for (int u : members[z]) {
                const double b = (double)pop.test[u].labels.size();
                acc += b * accuracy(models[z], pop.test[u], c);
                beta_total += b;
            }
            acc /= beta_total;

            std::vector<double> betas;
            for (int local : alloc.feasible_users)
                betas.push_back((double)pop.train[selected[local]].labels.size());
            double bound = 0.0;
            if (!betas.empty() && prev_loss[z] >= 0.0)
                bound = convergence_bound_rhs(prev_loss[z], config.convergence,
                                              1.0 / config.convergence.lipschitz, betas)
                            .value;
            prev_loss[z] = loss;

            RoundMetrics row;
            row.round = round;
            row.cluster = z;
            row.global_loss = loss;
            row.test_accuracy = acc;
            row.participants = (int)alloc.feasible_users.size();
            row.infeasible = alloc.infeasible;
            row.energy_joules = alloc.energy;
            row.bound_rhs = bound;
            report.rows.push_back(row);
            report.total_energy += alloc.energy;
        }
    }

    // Final accuracies.
    report.final_accuracy_per_cluster.assign(num_clusters, 0.0);
    double beta_all = 0.0, acc_all = 0.0;
    for (int z = 0; z < num_clusters; ++z) {
        double beta_total = 0.0, acc = 0.0;
        for (int u : members[z]) {
            const double b = (double)pop.test[u].labels.size();
            acc += b * accuracy(models[z], pop.test[u], c);
            beta_total += b;
        }
        if (beta_total > 0.0) report.final_accuracy_per_cluster[z] = acc / beta_total;
        acc_all += acc;
        beta_all += beta_total;
    }
    report.final_accuracy = beta_all > 0.0 ? acc_all / beta_all : 0.0;

    report.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

std::string RunReport::metrics_csv() const {
    // Smoothed accuracy: centered moving average (window 5) per cluster.
    std::vector<double> smooth(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (rows[j].cluster != rows[i].cluster) continue;
            if (std::abs(rows[j].round - rows[i].round) <= 2) {
                sum += rows[j].test_accuracy;
                ++count;
            }
        }
        smooth[i] = count > 0 ? sum / count : rows[i].test_accuracy;
    }

    std::ostringstream os;
    os.precision(17);
    os << "round,cluster_id,global_loss,test_accuracy,test_accuracy_smooth,participants,"
          "infeasible,energy_joules,bound_rhs\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        os << r.round << ',' << r.cluster << ',' << fmt(r.global_loss) << ','
           << fmt(r.test_accuracy) << ',' << fmt(smooth[i]) << ',' << r.participants << ','
           << r.infeasible << ',' << fmt(r.energy_joules) << ',' << fmt(r.bound_rhs) << '\n';
    }
    return os.str();
}

std::string RunReport::clusters_csv() const {
    std::ostringstream os;
    os << "user_id,cluster_id\n";
    for (std::size_t i = 0; i < cluster_labels.size(); ++i)
        os << i << ',' << cluster_labels[i] << '\n';
    return os.str();
}

std::vector<BenchmarkRow> run_allocation_benchmark(const ExperimentConfig& config,
                                                   const std::vector<int>& instance_sizes,
                                                   int seeds_per_size) {
    std::vector<BenchmarkRow> rows;
    for (int n : instance_sizes) {
        for (int s = 0; s < seeds_per_size; ++s) {
            const std::uint64_t seed = derive_seed(config.seed, 501, (std::uint64_t)(n * 1000 + s));
            auto ctx = make_allocation_instance(config, n, seed);

            BenchmarkRow row;
            row.num_users = n;
            row.seed = seed;

            auto t0 = std::chrono::steady_clock::now();
            auto matched = match_subchannels(ctx, seed);
            auto t1 = std::chrono::steady_clock::now();
            auto optimal = brute_force_matching(ctx);
            auto t2 = std::chrono::steady_clock::now();

            row.matched_energy = matched.energy;
            row.optimal_energy = optimal.energy;
            row.energy_ratio = optimal.energy > 0.0 ? matched.energy / optimal.energy : 1.0;
            row.cycles = matched.cycles;
            row.matching_seconds = std::chrono::duration<double>(t1 - t0).count();
            row.brute_force_seconds = std::chrono::duration<double>(t2 - t1).count();
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SweepRow> sweep_t_max(const ExperimentConfig& config,
                                  const std::vector<double>& t_values) {
    for (std::size_t i = 1; i < t_values.size(); ++i)
        if (t_values[i] <= t_values[i - 1])
            throw std::invalid_argument("sweep_t_max: t_values must be ascending");

    std::vector<SweepRow> rows;
    const int n = 2 * config.num_subchannels >= 2 ? 2 * config.num_subchannels : 2;
    for (double t : t_values) {
        ExperimentConfig kkt_cfg = config;
        kkt_cfg.t_max_s = t;
        kkt_cfg.allocation_mode = AllocationMode::matching_kkt;
        auto ctx = make_allocation_instance(kkt_cfg, n, derive_seed(config.seed, 601));
        auto matched = match_subchannels(ctx, derive_seed(config.seed, 602));

        ExperimentConfig fixed_cfg = kkt_cfg;
        fixed_cfg.allocation_mode = AllocationMode::matching_fixed_power;
        auto fctx = make_allocation_instance(fixed_cfg, n, derive_seed(config.seed, 601));
        auto fixed = match_subchannels(fctx, derive_seed(config.seed, 602));

        SweepRow row;
        row.t_max = t;
        row.kkt_energy = matched.energy;
        row.fixed_energy = fixed.energy;
        row.feasible = matched.energy < 1e29;
        rows.push_back(row);
    }
    return rows;
}

std::vector<OracleRow> run_oracle_check(const ExperimentConfig& config, int instances) {
    std::vector<OracleRow> rows;
    int made = 0;
    for (int attempt = 0; made < instances && attempt < instances * 50; ++attempt) {
        const std::uint64_t seed = derive_seed(config.seed, 701, (std::uint64_t)attempt);
        auto ctx = make_allocation_instance(config, 2, seed);
        ctx.policy = PowerPolicy::kkt;
        const auto out = ctx.evaluate_pair(0, 1, 0);
        if (!out.feasible) continue;
        const int f = out.first_user, s = out.second_user;
        const auto oracle = solve_pair_power_oracle(
            ctx.gains[f][0], ctx.gains[s][0], ctx.data_bits[f], ctx.data_bits[s], out.times,
            ctx.devices[f].max_power_w, ctx.devices[s].max_power_w, ctx.budget);
        if (!oracle.feasible) continue;

        const double e_kkt = transmit_energy(out.powers, out.times);
        const double e_oracle = transmit_energy(oracle, out.times);
        OracleRow row;
        row.instance = made;
        row.kkt_energy = e_kkt;
        row.oracle_energy = e_oracle;
        row.relative_gap = std::abs(e_kkt - e_oracle) / std::max(e_oracle, 1e-30);
        row.kkt_residual = kkt_condition_residual(out.powers, ctx.gains[f][0], ctx.gains[s][0],
                                                  ctx.data_bits[f], ctx.data_bits[s], out.times,
                                                  ctx.devices[f].max_power_w, ctx.budget);
        rows.push_back(row);
        ++made;
    }
    return rows;
}

}  // namespace cfn
