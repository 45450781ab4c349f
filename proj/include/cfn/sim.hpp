#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfn/allocation.hpp"
#include "cfn/channel.hpp"
#include "cfn/clustering.hpp"
#include "cfn/dirichlet.hpp"
#include "cfn/fl.hpp"

namespace cfn {

enum class ClusteringMode { proposed, random_clusters, no_clustering };
enum class AllocationMode { matching_kkt, matching_fixed_power, random_fixed_power };

struct ExperimentConfig {
    std::uint64_t seed = 0;
    int num_users = 12;
    int num_classes = 3;
    int feature_dim = 6;
    int samples_per_user = 60;
    double concentration = 0.5;                 // single-population Dirichlet knob
    std::vector<std::vector<double>> groups;    // optional per-group concentration vectors
    double feature_noise = 0.5;
    double test_fraction = 0.25;

    int num_subchannels = 2;
    double t_max_s = 6.0;
    double model_bits = 1.1e6;

    ClusteringMode clustering_mode = ClusteringMode::proposed;
    AllocationMode allocation_mode = AllocationMode::matching_kkt;
    AccessMode access_mode = AccessMode::noma;
    int z_override = 0;  // 0 = eigengap selection
    double cluster_bandwidth = 0.0;  // 0 = median heuristic

    LinkBudget link;
    double cpu_hz_min = 1.8e9;
    double cpu_hz_max = 2.2e9;
    double cycles_per_bit = 1e7;
    double energy_coeff = 1e-28;
    double max_power_w = 1.0;
    double fixed_power_w = 0.5;  // P_max/2 baseline

    TrainingConfig training;
    ConvergenceParams convergence;

    void validate() const;  // throws with an itemized message on failure
};

ExperimentConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

struct RoundMetrics {
    int round = 0;
    int cluster = 0;
    double global_loss = 0.0;
    double test_accuracy = 0.0;
    int participants = 0;
    int infeasible = 0;
    double energy_joules = 0.0;
    double bound_rhs = 0.0;
};

struct RunReport {
    std::vector<RoundMetrics> rows;
    std::vector<double> final_accuracy_per_cluster;
    double final_accuracy = 0.0;  // beta-weighted across clusters
    double total_energy = 0.0;
    int num_clusters = 0;
    std::vector<int> cluster_labels;
    std::vector<EstimateResult> alpha_estimates;
    std::vector<int> matching_cycles;
    double wall_clock_s = 0.0;

    std::string metrics_csv() const;
    std::string clusters_csv() const;
};

RunReport run_experiment(const ExperimentConfig& config);

struct BenchmarkRow {
    int num_users = 0;
    std::uint64_t seed = 0;
    double matched_energy = 0.0;
    double optimal_energy = 0.0;
    double energy_ratio = 0.0;
    int cycles = 0;
    double matching_seconds = 0.0;
    double brute_force_seconds = 0.0;
};

std::vector<BenchmarkRow> run_allocation_benchmark(const ExperimentConfig& config,
                                                   const std::vector<int>& instance_sizes,
                                                   int seeds_per_size);

struct SweepRow {
    double t_max = 0.0;
    double kkt_energy = 0.0;
    double fixed_energy = 0.0;
    bool feasible = true;
};

std::vector<SweepRow> sweep_t_max(const ExperimentConfig& config,
                                  const std::vector<double>& t_values);

struct OracleRow {
    int instance = 0;
    double kkt_energy = 0.0;
    double oracle_energy = 0.0;
    double relative_gap = 0.0;
    double kkt_residual = 0.0;
};

std::vector<OracleRow> run_oracle_check(const ExperimentConfig& config, int instances);

// Deterministic allocation instance used by the benchmark/sweep/oracle legs.
AllocationContext make_allocation_instance(const ExperimentConfig& config, int num_users,
                                           std::uint64_t seed);

// Synthetic Gaussian-class datasets split into train/test per user.
struct Population {
    std::vector<UserDataset> train;
    std::vector<UserDataset> test;
    std::vector<int> group_of;  // generative group per user (-1 if single population)
};
Population make_population(const ExperimentConfig& config);

}  // namespace cfn
