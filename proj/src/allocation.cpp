#include "cfn/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cfn/rng.hpp"

namespace cfn {

namespace {
constexpr double kInfeasibleEnergy = 1e30;
constexpr double kBoundSlack = 1e-12;
}  // namespace

const char* to_string(KktCase c) {
    switch (c) {
        case KktCase::interior: return "interior";
        case KktCase::p11_zero: return "p11_zero";
        case KktCase::p11_max: return "p11_max";
        case KktCase::infeasible: return "infeasible";
    }
    return "?";
}

TimeBudget TimeBudget::deadline_tight(const DeviceProfile& first, const DeviceProfile& second,
                                      double t_max) {
    TimeBudget t;
    t.t_max = t_max;
    t.t_com_first = computation_time(first);
    t.t_com_second = computation_time(second);
    t.t_off_noma = t_max - t.t_com_second;
    t.t_off_solo = t.t_com_second - t.t_com_first;
    return t;
}

double transmit_energy(const PowerSolution& powers, const TimeBudget& times) {
    if (times.t_off_solo < 0.0 || times.t_off_noma < 0.0)
        throw std::domain_error("transmit_energy: negative time");
    return powers.p11 * times.t_off_solo + (powers.p12 + powers.p2) * times.t_off_noma;
}

double pair_energy(const DeviceProfile& first, const DeviceProfile& second,
                   const PowerSolution& powers, const TimeBudget& times) {
    return computation_energy(first) + computation_energy(second) +
           transmit_energy(powers, times);
}

double min_power_second_user(double model_bits, double t_off, double gain2,
                             const LinkBudget& budget) {
    if (model_bits <= 0.0) return 0.0;
    if (!(t_off > 0.0)) throw std::domain_error("min_power_second_user: t_off <= 0");
    if (!(gain2 > 0.0)) throw std::domain_error("min_power_second_user: gain2 <= 0");
    return (std::exp2(model_bits / (budget.bandwidth_hz * t_off)) - 1.0) / gain2;
}

namespace {

struct Candidate {
    double p11, p12;
    KktCase label;
};

bool within(double x, double lo, double hi) {
    return std::isfinite(x) && x >= lo - kBoundSlack && x <= hi + kBoundSlack;
}

}  // namespace

PowerSolution solve_pair_power(double gain1, double gain2, double bits_first,
                               double bits_second, const TimeBudget& times, double pmax1,
                               double pmax2, const LinkBudget& budget) {
    PowerSolution out;
    out.kkt_case = KktCase::infeasible;
    out.feasible = false;

    if (bits_first <= 0.0 && bits_second <= 0.0) {
        out.kkt_case = KktCase::interior;
        out.feasible = true;
        return out;
    }
    if (!times.time_feasible()) return out;

    const double b = budget.bandwidth_hz;
    const double t1 = times.t_off_solo;
    const double t2 = times.t_off_noma;

    // Second user: data constraint held at equality fixes p2.
    double p2 = 0.0;
    if (bits_second > 0.0) {
        if (!(gain2 > 0.0)) return out;
        p2 = min_power_second_user(bits_second, t2, gain2, budget);
        if (!within(p2, 0.0, pmax2)) return out;
    }
    out.p2 = p2;
    const double interference = p2 * gain2 + 1.0;

    if (bits_first <= 0.0) {
        out.kkt_case = KktCase::interior;
        out.feasible = true;
        return out;
    }
    if (!(gain1 > 0.0)) return out;

    const double target = bits_first / b;  // log2-domain payload
    std::vector<Candidate> candidates;

    // p11 = 0 boundary.
    candidates.push_back(
        {0.0, interference * (std::exp2(target / t2) - 1.0) / gain1, KktCase::p11_zero});

    if (t1 > 0.0) {
        // Interior stationary point: SNR terms of the two phases share the
        // common factor fixed by the multiplier of the data constraint.
        const double a1 =
            std::exp2((target + t2 * std::log2(interference)) / (t1 + t2));
        candidates.push_back({(a1 - 1.0) / gain1, (a1 - interference) / gain1,
                              KktCase::interior});

        // p11 at its cap; remainder via the NOMA phase.
        if (pmax1 > 0.0) {
            const double rem = target - t1 * std::log2(1.0 + pmax1 * gain1);
            const double p12 =
                rem <= 0.0 ? 0.0 : interference * (std::exp2(rem / t2) - 1.0) / gain1;
            candidates.push_back({pmax1, p12, KktCase::p11_max});
        }

        // p12 boundaries with p11 solved from the data constraint. These
        // arise when the interference level makes the NOMA phase a bad deal
        // (p12 = 0) or when p12 alone cannot finish (p12 = pmax1).
        candidates.push_back(
            {(std::exp2(target / t1) - 1.0) / gain1, 0.0, KktCase::interior});
        if (pmax1 > 0.0) {
            const double rem2 =
                target - t2 * std::log2(1.0 + pmax1 * gain1 / interference);
            if (rem2 > 0.0)
                candidates.push_back(
                    {(std::exp2(rem2 / t1) - 1.0) / gain1, pmax1, KktCase::interior});
        }
    }

    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (!within(c.p11, 0.0, pmax1) || !within(c.p12, 0.0, pmax1)) continue;
        const double p11 = std::clamp(c.p11, 0.0, pmax1);
        const double p12 = std::clamp(c.p12, 0.0, pmax1);
        const double e = p11 * t1 + p12 * t2;
        if (e < best) {
            best = e;
            out.p11 = p11;
            out.p12 = p12;
            out.kkt_case = c.label;
            out.feasible = true;
        }
    }
    return out;
}

PowerSolution kkt_power_allocate(const ChannelPairState& pair, const DeviceProfile& first,
                                 const DeviceProfile& second, double model_bits, double t_max,
                                 const LinkBudget& budget) {
    const auto times = TimeBudget::deadline_tight(first, second, t_max);
    return solve_pair_power(pair.gain1, pair.gain2, model_bits, model_bits, times,
                            first.max_power_w, second.max_power_w, budget);
}

PowerSolution solve_pair_power_oracle(double gain1, double gain2, double bits_first,
                                      double bits_second, const TimeBudget& times,
                                      double pmax1, double pmax2, const LinkBudget& budget) {
    PowerSolution out;
    out.kkt_case = KktCase::infeasible;

    if (bits_first <= 0.0 && bits_second <= 0.0) {
        out.feasible = true;
        out.kkt_case = KktCase::interior;
        return out;
    }
    if (!times.time_feasible()) return out;

    const double b = budget.bandwidth_hz;
    const double t1 = times.t_off_solo;
    const double t2 = times.t_off_noma;

    double p2 = 0.0;
    if (bits_second > 0.0) {
        if (!(gain2 > 0.0)) return out;
        p2 = min_power_second_user(bits_second, t2, gain2, budget);
        if (!within(p2, 0.0, pmax2)) return out;
    }
    const double interference = p2 * gain2 + 1.0;

    if (bits_first <= 0.0) {
        out.p2 = p2;
        out.feasible = true;
        out.kkt_case = KktCase::interior;
        return out;
    }
    if (!(gain1 > 0.0)) return out;
    const double target = bits_first / b;

    // p12 needed when the solo phase carries p11 for t1 seconds.
    auto p12_of = [&](double p11) {
        const double rem = target - (t1 > 0.0 ? t1 * std::log2(1.0 + p11 * gain1) : 0.0);
        if (rem <= 0.0) return 0.0;
        return interference * (std::exp2(rem / t2) - 1.0) / gain1;
    };
    auto objective = [&](double p11) {
        const double p12 = p12_of(p11);
        if (p12 > pmax1 + kBoundSlack) return std::numeric_limits<double>::infinity();
        return p11 * t1 + p12 * t2;
    };

    double lo = 0.0, hi = pmax1;
    if (t1 <= 0.0) hi = 0.0;
    if (!std::isfinite(objective(lo)) ) {
        // Shrink the left edge to where p12 first fits under its cap.
        double a = lo, c = hi;
        if (!std::isfinite(objective(c))) return out;  // even full p11 cannot fit
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + c);
            if (std::isfinite(objective(mid))) c = mid; else a = mid;
        }
        lo = c;
    }

    // Golden-section on the (convex) transmit-energy profile.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, c = hi;
    double x1 = c - phi * (c - a), x2 = a + phi * (c - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 300 && c - a > 1e-15 * std::max(1.0, hi); ++it) {
        if (f1 <= f2) {
            c = x2; x2 = x1; f2 = f1;
            x1 = c - phi * (c - a);
            f1 = objective(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + phi * (c - a);
            f2 = objective(x2);
        }
    }
    double p11 = 0.5 * (a + c);
    for (double edge : {lo, hi})  // boundary optima
        if (objective(edge) < objective(p11)) p11 = edge;
    const double p12 = p12_of(p11);
    if (!within(p11, 0.0, pmax1) || !within(p12, 0.0, pmax1) ||
        !std::isfinite(objective(p11)))
        return out;

    out.p11 = p11;
    out.p12 = std::clamp(p12, 0.0, pmax1);
    out.p2 = p2;
    out.feasible = true;
    out.kkt_case = KktCase::interior;
    return out;
}

PowerSolution power_oracle(const ChannelPairState& pair, const DeviceProfile& first,
                           const DeviceProfile& second, double model_bits, double t_max,
                           const LinkBudget& budget) {
    const auto times = TimeBudget::deadline_tight(first, second, t_max);
    return solve_pair_power_oracle(pair.gain1, pair.gain2, model_bits, model_bits, times,
                                   first.max_power_w, second.max_power_w, budget);
}

double kkt_condition_residual(const PowerSolution& sol, double gain1, double gain2,
                              double bits_first, double bits_second, const TimeBudget& times,
                              double pmax1, const LinkBudget& budget) {
    if (!sol.feasible) return std::numeric_limits<double>::infinity();
    const double b = budget.bandwidth_hz;
    const double t1 = times.t_off_solo;
    const double t2 = times.t_off_noma;
    double residual = 0.0;

    // Primal bounds.
    residual = std::max(residual, std::max(0.0, -sol.p11));
    residual = std::max(residual, std::max(0.0, sol.p11 - pmax1));
    residual = std::max(residual, std::max(0.0, -sol.p12));
    residual = std::max(residual, std::max(0.0, sol.p12 - pmax1));
    residual = std::max(residual, std::max(0.0, -sol.p2));

    // Equality on the second user's data constraint.
    if (bits_second > 0.0) {
        const double r2 = b * std::log2(1.0 + sol.p2 * gain2);
        residual = std::max(residual, std::abs(r2 * t2 - bits_second) / bits_second);
    }
    // Equality on the first user's data constraint (mu2 > 0 in every case).
    if (bits_first > 0.0) {
        const double interference = sol.p2 * gain2 + 1.0;
        const double r11 = b * std::log2(1.0 + sol.p11 * gain1);
        const double r12 = b * std::log2(1.0 + sol.p12 * gain1 / interference);
        const double delivered = r11 * t1 + r12 * t2;
        // A boundary solution may over-deliver via the solo phase; the
        // constraint is an inequality there with zero multiplier.
        const double gap = bits_first - delivered;
        residual = std::max(residual, std::max(0.0, gap) / bits_first);
        if (sol.p12 > kBoundSlack && sol.p11 + kBoundSlack < pmax1)
            residual = std::max(residual, std::abs(gap) / bits_first);
    }

    // Complementary slackness for the cases that claim an active bound.
    if (sol.kkt_case == KktCase::p11_zero) residual = std::max(residual, std::abs(sol.p11));
    if (sol.kkt_case == KktCase::p11_max)
        residual = std::max(residual, std::abs(sol.p11 - pmax1) / std::max(pmax1, 1e-30));
    return residual;
}

// ---- matching ------------------------------------------------------------

Matching Matching::from_pairs(std::vector<std::array<int, 2>> pairs, int num_users) {
    Matching m;
    m.pairs = std::move(pairs);
    m.channel_of.assign(num_users, -1);
    for (int k = 0; k < (int)m.pairs.size(); ++k)
        for (int u : m.pairs[k]) {
            if (u < 0 || u >= num_users || m.channel_of[u] != -1)
                throw std::invalid_argument("Matching: invalid pair list");
            m.channel_of[u] = k;
        }
    m.check_invariants();
    return m;
}

int Matching::partner_of(int user) const {
    const auto& p = pairs[channel_of[user]];
    return p[0] == user ? p[1] : p[0];
}

void Matching::check_invariants() const {
    for (int ch : channel_of)
        if (ch < 0) throw std::logic_error("Matching: unmatched user");
    for (int k = 0; k < (int)pairs.size(); ++k)
        for (int u : pairs[k])
            if (channel_of[u] != k) throw std::logic_error("Matching: inverse inconsistent");
}

PairOutcome AllocationContext::evaluate_pair(int u, int v, int channel) const {
    const double tu = computation_time(devices[u]);
    const double tv = computation_time(devices[v]);
    const bool u_first = tu < tv || (tu == tv && u < v);
    const int first = u_first ? u : v;
    const int second = u_first ? v : u;

    PairOutcome out;
    out.first_user = first;
    out.second_user = second;
    out.times = TimeBudget::deadline_tight(devices[first], devices[second], t_max);

    const double g1 = gains[first][channel];
    const double g2 = gains[second][channel];
    const double d1 = data_bits[first];
    const double d2 = data_bits[second];
    const double comp1 = computation_energy(devices[first]);
    const double comp2 = computation_energy(devices[second]);

    if (access == AccessMode::oma) {
        // Orthogonal baseline: the two users split the channel, each
        // transmitting alone in half of its own post-computation window.
        const double b = budget.bandwidth_hz;
        auto solo = [&](int who, double comp) {
            const double d = data_bits[who];
            if (d <= 0.0) return std::make_pair(true, comp);
            const double window = 0.5 * (t_max - computation_time(devices[who]));
            const double g = gains[who][channel];
            if (!(window > 0.0) || !(g > 0.0)) return std::make_pair(false, 0.0);
            if (policy == PowerPolicy::kkt) {
                const double p = (std::exp2(d / (b * window)) - 1.0) / g;
                if (p > devices[who].max_power_w + kBoundSlack)
                    return std::make_pair(false, 0.0);
                return std::make_pair(true, comp + p * window);
            }
            const double r = b * std::log2(1.0 + fixed_power_w * g);
            const double used = r > 0.0 ? d / r : std::numeric_limits<double>::infinity();
            if (used > window) return std::make_pair(false, 0.0);
            return std::make_pair(true, comp + fixed_power_w * used);
        };
        const auto [ok1, e1] = solo(first, comp1);
        const auto [ok2, e2] = solo(second, comp2);
        out.feasible = ok1 && ok2;
        out.powers.feasible = out.feasible;
        out.energy_first = out.feasible ? e1 : kInfeasibleEnergy;
        out.energy_second = out.feasible ? e2 : kInfeasibleEnergy;
        return out;
    }

    if (policy == PowerPolicy::kkt) {
        out.powers = solve_pair_power(g1, g2, d1, d2, out.times, devices[first].max_power_w,
                                      devices[second].max_power_w, budget);
        if (!out.powers.feasible) {
            out.feasible = false;
            out.energy_first = out.energy_second = kInfeasibleEnergy;
            return out;
        }
        out.feasible = true;
        out.energy_first = comp1 + out.powers.p11 * out.times.t_off_solo +
                           out.powers.p12 * out.times.t_off_noma;
        out.energy_second = comp2 + out.powers.p2 * out.times.t_off_noma;
        return out;
    }

    // Fixed-power policy: everyone transmits at the configured power and
    // stops once its payload is delivered.
    out.powers.p11 = out.powers.p12 = out.powers.p2 = fixed_power_w;
    out.powers.kkt_case = KktCase::interior;
    const double t1 = out.times.t_off_solo;
    const double t2 = out.times.t_off_noma;
    if (!out.times.time_feasible() && (d1 > 0.0 || d2 > 0.0)) {
        out.feasible = false;
        out.energy_first = out.energy_second = kInfeasibleEnergy;
        return out;
    }
    const double b = budget.bandwidth_hz;
    double e1 = comp1, e2 = comp2;
    bool ok = true;
    double used2 = 0.0;
    if (d2 > 0.0) {
        const double r2 = b * std::log2(1.0 + fixed_power_w * g2);
        used2 = r2 > 0.0 ? d2 / r2 : std::numeric_limits<double>::infinity();
        if (used2 > t2) ok = false;
        e2 += fixed_power_w * used2;
    }
    if (ok && d1 > 0.0) {
        const double r11 = b * std::log2(1.0 + fixed_power_w * g1);
        if (r11 * t1 >= d1) {
            e1 += fixed_power_w * (d1 / r11);
        } else {
            // Interfered only while the second user is still transmitting;
            // the channel is clean for the rest of the shared window.
            const double interference = (d2 > 0.0 ? fixed_power_w * g2 : 0.0) + 1.0;
            const double r12 = b * std::log2(1.0 + fixed_power_w * g1 / interference);
            double rem = d1 - r11 * t1;
            double elapsed = 0.0;
            if (rem <= r12 * used2) {
                elapsed = r12 > 0.0 ? rem / r12 : std::numeric_limits<double>::infinity();
            } else {
                rem -= r12 * used2;
                elapsed = used2 + (r11 > 0.0 ? rem / r11
                                             : std::numeric_limits<double>::infinity());
            }
            if (elapsed > t2) ok = false;
            e1 += fixed_power_w * (t1 + elapsed);
        }
    }
    out.feasible = ok;
    out.powers.feasible = ok;
    if (!ok) {
        out.energy_first = out.energy_second = kInfeasibleEnergy;
    } else {
        out.energy_first = e1;
        out.energy_second = e2;
    }
    return out;
}

double AllocationContext::per_user_energy(const Matching& mu, int user) const {
    const int ch = mu.channel_of[user];
    const auto out = evaluate_pair(mu.pairs[ch][0], mu.pairs[ch][1], ch);
    return out.first_user == user ? out.energy_first : out.energy_second;
}

double AllocationContext::total_energy(const Matching& mu) const {
    double total = 0.0;
    for (int k = 0; k < (int)mu.pairs.size(); ++k)
        total += evaluate_pair(mu.pairs[k][0], mu.pairs[k][1], k).total();
    return total;
}

namespace {

// Energies of the four affected players before/after swapping m and j.
struct SwapDelta {
    std::array<double, 4> before{}, after{};
    int players[4];
};

SwapDelta swap_delta(const Matching& mu, int m, int j, const AllocationContext& ctx) {
    const int km = mu.channel_of[m];
    const int kj = mu.channel_of[j];
    const int pm = mu.partner_of(m);
    const int pj = mu.partner_of(j);

    SwapDelta d;
    d.players[0] = m; d.players[1] = pm; d.players[2] = j; d.players[3] = pj;

    const auto old_m = ctx.evaluate_pair(m, pm, km);
    const auto old_j = ctx.evaluate_pair(j, pj, kj);
    auto energy_of = [](const PairOutcome& o, int who) {
        return o.first_user == who ? o.energy_first : o.energy_second;
    };
    d.before = {energy_of(old_m, m), energy_of(old_m, pm), energy_of(old_j, j),
                energy_of(old_j, pj)};

    const auto new_m = ctx.evaluate_pair(j, pm, km);  // j moves to m's channel
    const auto new_j = ctx.evaluate_pair(m, pj, kj);  // m moves to j's channel
    d.after = {energy_of(new_j, m), energy_of(new_m, pm), energy_of(new_m, j),
               energy_of(new_j, pj)};
    return d;
}

}  // namespace

bool swap_blocking_pair(const Matching& mu, int m, int j, const AllocationContext& ctx) {
    if (mu.channel_of[m] == mu.channel_of[j])
        throw std::domain_error("swap_blocking_pair: users share a sub-channel");
    const auto d = swap_delta(mu, m, j, ctx);
    bool strict = false;
    for (int i = 0; i < 4; ++i) {
        if (d.after[i] > d.before[i]) return false;
        if (d.after[i] < d.before[i] - 1e-12 * std::max(1.0, std::abs(d.before[i])))
            strict = true;
    }
    return strict;
}

MatchResult match_subchannels(const AllocationContext& ctx, std::uint64_t rng_seed,
                              int max_cycles) {
    const int n = ctx.num_users();
    const int k = ctx.num_channels();
    if (n != 2 * k) throw std::invalid_argument("match_subchannels: need |users| == 2K");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(derive_seed(rng_seed, 23));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::array<int, 2>> pairs(k);
    for (int c = 0; c < k; ++c) pairs[c] = {order[2 * c], order[2 * c + 1]};
    Matching mu = Matching::from_pairs(std::move(pairs), n);

    MatchResult result;
    int cycles = 0, swaps = 0;
    for (; cycles < max_cycles; ++cycles) {
        bool improved = false;
        for (int m = 0; m < n; ++m) {
            for (int j = m + 1; j < n; ++j) {
                if (mu.channel_of[m] == mu.channel_of[j]) continue;
                // Approve on a strict drop in the combined energy of the two
                // affected pairs (the system objective). Every swap-blocking
                // pair qualifies, so the final matching is still two-sided
                // exchange stable, but Pareto-blocked swaps that lower total
                // energy are taken too instead of stranding the search.
                {
                    const int km0 = mu.channel_of[m];
                    const int kj0 = mu.channel_of[j];
                    const int pm = mu.partner_of(m);
                    const int pj = mu.partner_of(j);
                    const double before = ctx.evaluate_pair(m, pm, km0).total() +
                                          ctx.evaluate_pair(j, pj, kj0).total();
                    const double after = ctx.evaluate_pair(j, pm, km0).total() +
                                         ctx.evaluate_pair(m, pj, kj0).total();
                    if (!(after < before * (1.0 - 1e-12) - 1e-12)) continue;
                }
                const int km = mu.channel_of[m];
                const int kj = mu.channel_of[j];
                for (int& u : mu.pairs[km])
                    if (u == m) u = j;
                for (int& u : mu.pairs[kj])
                    if (u == j) u = m;
                std::swap(mu.channel_of[m], mu.channel_of[j]);
                ++swaps;
                improved = true;
            }
        }
        // Channel exchange between whole pairs, approved under the same
        // rule. A user-swap search alone can park one tiny step from the
        // optimum when only the pair-to-channel assignment is off, because
        // the two user swaps realizing the exchange pass through an uphill
        // intermediate state.
        for (int ka = 0; ka < k && !improved; ++ka) {
            for (int kb = ka + 1; kb < k && !improved; ++kb) {
                const auto a_old = ctx.evaluate_pair(mu.pairs[ka][0], mu.pairs[ka][1], ka);
                const auto b_old = ctx.evaluate_pair(mu.pairs[kb][0], mu.pairs[kb][1], kb);
                const auto a_new = ctx.evaluate_pair(mu.pairs[ka][0], mu.pairs[ka][1], kb);
                const auto b_new = ctx.evaluate_pair(mu.pairs[kb][0], mu.pairs[kb][1], ka);
                const double before = a_old.total() + b_old.total();
                const double after = a_new.total() + b_new.total();
                if (after < before * (1.0 - 1e-12) - 1e-12) {
                    std::swap(mu.pairs[ka], mu.pairs[kb]);
                    for (int u : mu.pairs[ka]) mu.channel_of[u] = ka;
                    for (int u : mu.pairs[kb]) mu.channel_of[u] = kb;
                    ++swaps;
                    improved = true;
                }
            }
        }
        if (!improved) {
            ++cycles;
            break;
        }
    }
    mu.check_invariants();
    result.energy = ctx.total_energy(mu);
    result.matching = std::move(mu);
    result.cycles = cycles;
    result.swaps = swaps;
    return result;
}

namespace {

void enumerate_pairings(std::vector<int>& pool, std::vector<std::array<int, 2>>& current,
                        const AllocationContext& ctx, MatchResult& best,
                        std::vector<int>& channel_perm) {
    if (pool.empty()) {
        // Assign the fixed pairing to every permutation of channels.
        const int k = (int)current.size();
        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::vector<std::array<int, 2>> assigned(k);
            for (int i = 0; i < k; ++i) assigned[perm[i]] = current[i];
            Matching mu = Matching::from_pairs(assigned, ctx.num_users());
            const double e = ctx.total_energy(mu);
            if (e < best.energy) {
                best.energy = e;
                best.matching = std::move(mu);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        (void)channel_perm;
        return;
    }
    const int head = pool.front();
    for (std::size_t i = 1; i < pool.size(); ++i) {
        std::vector<int> rest;
        for (std::size_t t = 1; t < pool.size(); ++t)
            if (t != i) rest.push_back(pool[t]);
        current.push_back({head, pool[i]});
        enumerate_pairings(rest, current, ctx, best, channel_perm);
        current.pop_back();
    }
}

}  // namespace

MatchResult brute_force_matching(const AllocationContext& ctx) {
    const int n = ctx.num_users();
    if (n > 12) throw std::invalid_argument("brute_force_matching: N > 12 refused");
    if (n != 2 * ctx.num_channels())
        throw std::invalid_argument("brute_force_matching: need |users| == 2K");
    MatchResult best;
    best.energy = std::numeric_limits<double>::infinity();
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::array<int, 2>> current;
    std::vector<int> perm;
    enumerate_pairings(pool, current, ctx, best, perm);
    return best;
}

std::string matching_to_csv(const Matching& mu, const AllocationContext& ctx) {
    std::ostringstream os;
    os.precision(17);
    os << "subchannel,user_first,user_second,p11,p12,p2,pair_energy,kkt_case\n";
    for (int k = 0; k < (int)mu.pairs.size(); ++k) {
        const auto out = ctx.evaluate_pair(mu.pairs[k][0], mu.pairs[k][1], k);
        os << k << ',' << out.first_user << ',' << out.second_user << ',' << out.powers.p11
           << ',' << out.powers.p12 << ',' << out.powers.p2 << ',' << out.total() << ','
           << to_string(out.powers.kkt_case) << '\n';
    }
    return os.str();
}

}  // namespace cfn
