#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cfn/channel.hpp"

namespace cfn {

enum class KktCase { interior, p11_zero, p11_max, infeasible };

const char* to_string(KktCase c);

struct PowerSolution {
    double p11 = 0.0;  // solo-phase power of the first user
    double p12 = 0.0;  // NOMA-phase power of the first user
    double p2 = 0.0;   // power of the second user
    KktCase kkt_case = KktCase::infeasible;
    bool feasible = false;
};

struct TimeBudget {
    double t_off_solo = 0.0;
    double t_off_noma = 0.0;
    double t_com_first = 0.0;
    double t_com_second = 0.0;
    double t_max = 0.0;

    // Deadline-tight schedule: both users finish exactly at t_max. The solo
    // window is the gap between the two computation times.
    static TimeBudget deadline_tight(const DeviceProfile& first, const DeviceProfile& second,
                                     double t_max);
    bool time_feasible() const { return t_off_noma > 0.0 && t_off_solo >= 0.0; }
};

// E_1 + E_2 of the pair under the given schedule and powers.
double pair_energy(const DeviceProfile& first, const DeviceProfile& second,
                   const PowerSolution& powers, const TimeBudget& times);
double transmit_energy(const PowerSolution& powers, const TimeBudget& times);

// Minimum power at which the second user delivers model_bits in t_off.
double min_power_second_user(double model_bits, double t_off, double gain2,
                             const LinkBudget& budget);

// Closed-form KKT power allocation: evaluates the interior and the two
// boundary cases, keeps the feasible one with minimum energy.
PowerSolution kkt_power_allocate(const ChannelPairState& pair, const DeviceProfile& first,
                                 const DeviceProfile& second, double model_bits, double t_max,
                                 const LinkBudget& budget);

// Generalized form with per-user payloads (virtual users carry zero bits).
PowerSolution solve_pair_power(double gain1, double gain2, double bits_first,
                               double bits_second, const TimeBudget& times, double pmax1,
                               double pmax2, const LinkBudget& budget);

// Numerical verifier: golden-section over p11 with p12 from the data
// constraint held at equality. Independent of the closed forms.
PowerSolution power_oracle(const ChannelPairState& pair, const DeviceProfile& first,
                           const DeviceProfile& second, double model_bits, double t_max,
                           const LinkBudget& budget);
PowerSolution solve_pair_power_oracle(double gain1, double gain2, double bits_first,
                                      double bits_second, const TimeBudget& times, double pmax1,
                                      double pmax2, const LinkBudget& budget);

// Max residual over the stationarity-system constraints that the returned
// case claims active; used by the acceptance audit.
double kkt_condition_residual(const PowerSolution& sol, double gain1, double gain2,
                              double bits_first, double bits_second, const TimeBudget& times,
                              double pmax1, const LinkBudget& budget);

// ---- matching ------------------------------------------------------------

struct Matching {
    std::vector<std::array<int, 2>> pairs;  // per sub-channel: the two user ids
    std::vector<int> channel_of;            // per user

    static Matching from_pairs(std::vector<std::array<int, 2>> pairs, int num_users);
    int partner_of(int user) const;
    void check_invariants() const;
};

struct PairOutcome {
    bool feasible = false;
    int first_user = -1;  // smaller computation time transmits first
    int second_user = -1;
    double energy_first = 0.0;
    double energy_second = 0.0;
    PowerSolution powers;
    TimeBudget times;
    double total() const { return energy_first + energy_second; }
};

enum class PowerPolicy { kkt, fixed };
enum class AccessMode { noma, oma };

// Immutable per-round state read by candidate-swap evaluations.
struct AllocationContext {
    LinkBudget budget;
    double t_max = 1.0;
    double model_bits = 1.1e6;
    std::vector<DeviceProfile> devices;        // per user
    std::vector<std::vector<double>> gains;    // gains[user][channel]
    std::vector<double> data_bits;             // per user; 0 marks a virtual pad
    PowerPolicy policy = PowerPolicy::kkt;
    AccessMode access = AccessMode::noma;
    double fixed_power_w = 0.5;

    int num_users() const { return (int)devices.size(); }
    int num_channels() const { return (int)(gains.empty() ? 0 : gains[0].size()); }
    PairOutcome evaluate_pair(int u, int v, int channel) const;
    double per_user_energy(const Matching& mu, int user) const;
    double total_energy(const Matching& mu) const;
};

bool swap_blocking_pair(const Matching& mu, int m, int j, const AllocationContext& ctx);

struct MatchResult {
    Matching matching;
    int cycles = 0;       // full scan cycles executed
    int swaps = 0;        // approved swaps
    double energy = 0.0;  // total energy of the final matching
};

// Two-sided-exchange swap matching from a random start; terminates when no
// swap-blocking pair remains.
MatchResult match_subchannels(const AllocationContext& ctx, std::uint64_t rng_seed,
                              int max_cycles = 1000);

// Exhaustive minimum over all pairings x channel assignments. N <= 12.
MatchResult brute_force_matching(const AllocationContext& ctx);

std::string matching_to_csv(const Matching& mu, const AllocationContext& ctx);

}  // namespace cfn
