#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfn/rng.hpp"
#include "cfn/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string mode;    // proposed | random | none
    std::string access;  // noma | oma
    std::string alloc;   // kkt | fixed | random
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment config");
    cmd->add_option("--seed", o.seed, "master seed (overrides config)");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--mode", o.mode, "clustering mode: proposed|random|none")
        ->check(CLI::IsMember({"proposed", "random", "none"}));
    cmd->add_option("--access", o.access, "access mode: noma|oma")
        ->check(CLI::IsMember({"noma", "oma"}));
    cmd->add_option("--alloc", o.alloc, "allocation mode: kkt|fixed|random")
        ->check(CLI::IsMember({"kkt", "fixed", "random"}));
}

cfn::ExperimentConfig resolve_config(const CommonOpts& o) {
    cfn::ExperimentConfig cfg;
    if (!o.config_path.empty()) {
        cfg = cfn::load_config(o.config_path);
    } else if (o.seed) {
        cfg.seed = *o.seed;
    } else {
        throw std::runtime_error("either --config or --seed is required");
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.mode == "proposed") cfg.clustering_mode = cfn::ClusteringMode::proposed;
    if (o.mode == "random") cfg.clustering_mode = cfn::ClusteringMode::random_clusters;
    if (o.mode == "none") cfg.clustering_mode = cfn::ClusteringMode::no_clustering;
    if (o.access == "noma") cfg.access_mode = cfn::AccessMode::noma;
    if (o.access == "oma") cfg.access_mode = cfn::AccessMode::oma;
    if (o.alloc == "kkt") cfg.allocation_mode = cfn::AllocationMode::matching_kkt;
    if (o.alloc == "fixed") cfg.allocation_mode = cfn::AllocationMode::matching_fixed_power;
    if (o.alloc == "random") cfg.allocation_mode = cfn::AllocationMode::random_fixed_power;
    cfg.validate();
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::vector<cfn::EstimateResult> estimate_all(const cfn::Population& pop, int num_classes) {
    std::vector<cfn::EstimateResult> out;
    for (const auto& user : pop.train) {
        auto init = cfn::ConcentrationVector::from_alpha(
            std::vector<double>((std::size_t)num_classes, 1.0));
        out.push_back(cfn::estimate_concentration(user.histogram, init));
    }
    return out;
}

int cmd_partition(const CommonOpts& o) {
    auto cfg = resolve_config(o);
    auto pop = cfn::make_population(cfg);
    std::vector<cfn::LabelHistogram> hists;
    for (const auto& u : pop.train) hists.push_back(u.histogram);
    write_file(fs::path(o.out_dir) / "histograms.csv", cfn::histograms_to_csv(hists));
    std::cout << "wrote " << (fs::path(o.out_dir) / "histograms.csv").string() << " ("
              << hists.size() << " users)\n";
    return 0;
}

int cmd_estimate(const CommonOpts& o) {
    auto cfg = resolve_config(o);
    auto pop = cfn::make_population(cfg);
    auto results = estimate_all(pop, cfg.num_classes);
    write_file(fs::path(o.out_dir) / "alphas.csv", cfn::alphas_to_csv(results));
    std::cout << "wrote " << (fs::path(o.out_dir) / "alphas.csv").string() << " ("
              << results.size() << " users)\n";
    return 0;
}

int cmd_cluster(const CommonOpts& o) {
    auto cfg = resolve_config(o);
    auto pop = cfn::make_population(cfg);
    auto results = estimate_all(pop, cfg.num_classes);
    std::vector<cfn::ConcentrationVector> alphas;
    for (const auto& r : results) alphas.push_back(r.alpha);
    std::optional<int> z;
    if (cfg.z_override > 0) z = cfg.z_override;
    auto assign = cfn::spectral_cluster(alphas, cfg.cluster_bandwidth, z,
                                        cfn::derive_seed(cfg.seed, 301));
    std::ostringstream csv;
    csv << "user_id,cluster_id\n";
    for (std::size_t i = 0; i < assign.labels.size(); ++i)
        csv << i << ',' << assign.labels[i] << '\n';
    write_file(fs::path(o.out_dir) / "clusters.csv", csv.str());
    write_file(fs::path(o.out_dir) / "alphas.csv", cfn::alphas_to_csv(results));
    std::cout << "clusters: " << assign.num_clusters << "\n";
    return 0;
}

int cmd_allocate(const CommonOpts& o) {
    auto cfg = resolve_config(o);
    auto ctx = cfn::make_allocation_instance(cfg, 2 * cfg.num_subchannels,
                                             cfn::derive_seed(cfg.seed, 201));
    auto result = cfn::match_subchannels(ctx, cfn::derive_seed(cfg.seed, 202));
    write_file(fs::path(o.out_dir) / "matching.csv",
               cfn::matching_to_csv(result.matching, ctx));
    std::cout << "total energy: " << result.energy << " J, cycles: " << result.cycles
              << ", swaps: " << result.swaps << "\n";
    return 0;
}

int cmd_run(const CommonOpts& o, bool no_clustering) {
    auto cfg = resolve_config(o);
    if (no_clustering) cfg.clustering_mode = cfn::ClusteringMode::no_clustering;
    auto report = cfn::run_experiment(cfg);

    write_file(fs::path(o.out_dir) / "metrics.csv", report.metrics_csv());
    write_file(fs::path(o.out_dir) / "clusters.csv", report.clusters_csv());
    write_file(fs::path(o.out_dir) / "alphas.csv", cfn::alphas_to_csv(report.alpha_estimates));

    json summary;
    summary["num_clusters"] = report.num_clusters;
    summary["final_accuracy"] = report.final_accuracy;
    summary["final_accuracy_per_cluster"] = report.final_accuracy_per_cluster;
    summary["total_energy_joules"] = report.total_energy;
    summary["matching_cycles"] = report.matching_cycles;
    summary["rounds"] = cfg.training.rounds;
    summary["wall_clock_s"] = report.wall_clock_s;
    summary["config"] = json::parse(cfn::config_to_json(cfg));
    write_file(fs::path(o.out_dir) / "report.json", summary.dump(2) + "\n");

    std::cout << "final accuracy: " << report.final_accuracy
              << ", total energy: " << report.total_energy << " J, clusters: "
              << report.num_clusters << "\n";
    return 0;
}

int cmd_bench(const CommonOpts& o, std::vector<int> sizes, int seeds_per_size) {
    auto cfg = resolve_config(o);
    if (sizes.empty()) sizes = {4, 6, 8, 10};
    auto rows = cfn::run_allocation_benchmark(cfg, sizes, seeds_per_size);
    std::ostringstream csv;
    csv.precision(17);
    csv << "num_users,seed,matched_energy,optimal_energy,energy_ratio,cycles,"
           "matching_seconds,brute_force_seconds\n";
    for (const auto& r : rows)
        csv << r.num_users << ',' << r.seed << ',' << r.matched_energy << ','
            << r.optimal_energy << ',' << r.energy_ratio << ',' << r.cycles << ','
            << r.matching_seconds << ',' << r.brute_force_seconds << '\n';
    write_file(fs::path(o.out_dir) / "bench.csv", csv.str());
    std::cout << "wrote " << (fs::path(o.out_dir) / "bench.csv").string() << " ("
              << rows.size() << " rows)\n";
    return 0;
}

int cmd_sweep(const CommonOpts& o, std::vector<double> t_values) {
    auto cfg = resolve_config(o);
    if (t_values.empty()) t_values = {4.0, 5.0, 6.0, 8.0, 12.0};
    auto rows = cfn::sweep_t_max(cfg, t_values);
    std::ostringstream csv;
    csv.precision(17);
    csv << "t_max_s,kkt_energy,fixed_energy,feasible\n";
    for (const auto& r : rows)
        csv << r.t_max << ',' << r.kkt_energy << ',' << r.fixed_energy << ','
            << (r.feasible ? 1 : 0) << '\n';
    write_file(fs::path(o.out_dir) / "sweep.csv", csv.str());
    std::cout << "wrote " << (fs::path(o.out_dir) / "sweep.csv").string() << "\n";
    return 0;
}

int cmd_oracle(const CommonOpts& o, int instances) {
    auto cfg = resolve_config(o);
    auto rows = cfn::run_oracle_check(cfg, instances);
    std::ostringstream csv;
    csv.precision(17);
    csv << "instance,kkt_energy,oracle_energy,relative_gap,kkt_residual\n";
    double worst_gap = 0.0, worst_res = 0.0;
    for (const auto& r : rows) {
        csv << r.instance << ',' << r.kkt_energy << ',' << r.oracle_energy << ','
            << r.relative_gap << ',' << r.kkt_residual << '\n';
        worst_gap = std::max(worst_gap, r.relative_gap);
        worst_res = std::max(worst_res, r.kkt_residual);
    }
    write_file(fs::path(o.out_dir) / "oracle.csv", csv.str());
    std::cout << rows.size() << " instances, worst relative gap " << worst_gap
              << ", worst residual " << worst_res << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustered federated learning simulator over a hybrid-NOMA uplink"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::vector<int> bench_sizes;
    int seeds_per_size = 10;
    std::vector<double> t_values;
    int oracle_instances = 100;

    auto* partition = app.add_subcommand("partition", "generate per-user label histograms");
    auto* estimate = app.add_subcommand("estimate", "estimate concentration parameters");
    auto* cluster = app.add_subcommand("cluster", "spectral clustering of users");
    auto* allocate = app.add_subcommand("allocate", "match sub-channels and allocate power");
    auto* train = app.add_subcommand("train", "federated training without clustering");
    auto* run = app.add_subcommand("run", "full pipeline");
    auto* bench = app.add_subcommand("bench-matching", "matching vs exhaustive optimum");
    auto* sweep = app.add_subcommand("sweep-tmax", "energy vs deadline sweep");
    auto* oracle = app.add_subcommand("oracle-check", "closed-form power vs numeric oracle");

    for (auto* cmd : {partition, estimate, cluster, allocate, train, run, bench, sweep, oracle})
        add_common(cmd, opts);
    bench->add_option("--sizes", bench_sizes, "instance sizes (even, <= 12)");
    bench->add_option("--seeds-per-size", seeds_per_size, "seeds per instance size");
    sweep->add_option("--t-values", t_values, "ascending deadlines in seconds");
    oracle->add_option("--instances", oracle_instances, "number of random instances");

    CLI11_PARSE(app, argc, argv);

    try {
        if (partition->parsed()) return cmd_partition(opts);
        if (estimate->parsed()) return cmd_estimate(opts);
        if (cluster->parsed()) return cmd_cluster(opts);
        if (allocate->parsed()) return cmd_allocate(opts);
        if (train->parsed()) return cmd_run(opts, true);
        if (run->parsed()) return cmd_run(opts, false);
        if (bench->parsed()) return cmd_bench(opts, bench_sizes, seeds_per_size);
        if (sweep->parsed()) return cmd_sweep(opts, t_values);
        if (oracle->parsed()) return cmd_oracle(opts, oracle_instances);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
