#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cfn/allocation.hpp"
#include "cfn/channel.hpp"
#include "cfn/rng.hpp"

using namespace cfn;

namespace {
LinkBudget link_mhz() {
    LinkBudget b;
    b.bandwidth_hz = 1e6;
    return b;
}
}  // namespace

TEST_CASE("channel gain: noise scaling, determinism, domain") {
    DeviceProfile dev;
    dev.distance_m = 250.0;
    LinkBudget a = link_mhz();
    LinkBudget b = a;
    b.noise_variance = 2.0 * a.noise_variance;
    const double ga = sample_channel_gain(dev, a, 7);
    const double gb = sample_channel_gain(dev, b, 7);
    CHECK(gb == doctest::Approx(0.5 * ga).epsilon(1e-12));
    CHECK(sample_channel_gain(dev, a, 7) == ga);

    DeviceProfile zero = dev;
    zero.distance_m = 0.0;
    CHECK_THROWS(sample_channel_gain(zero, a, 7));
}

TEST_CASE("channel gain equals |L1 h0|^2/sigma^2 for logged draws") {
    DeviceProfile dev;
    dev.distance_m = 100.0;
    const auto budget = link_mhz();
    const double l1 = large_scale_fading(dev, budget);
    // Replay the complex normal draw the sampler makes.
    auto rng = make_rng(31);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(rng), im = normal(rng);
    const double expected = l1 * l1 * (re * re + im * im) / budget.noise_variance;
    CHECK(sample_channel_gain(dev, budget, 31) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("channel gain mean scales with distance^-pathloss") {
    DeviceProfile near_dev, far_dev;
    near_dev.distance_m = 100.0;
    far_dev.distance_m = 400.0;
    const auto budget = link_mhz();
    double mean_near = 0.0, mean_far = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        mean_near += sample_channel_gain(near_dev, budget, derive_seed(1, 0, i)) / draws;
        mean_far += sample_channel_gain(far_dev, budget, derive_seed(1, 0, i)) / draws;
    }
    CHECK(mean_far / mean_near == doctest::Approx(1.0 / 16.0).epsilon(0.05));
}

TEST_CASE("rate_oma closed forms") {
    const auto b = link_mhz();
    CHECK(rate_oma(0.0, 5.0, b) == doctest::Approx(0.0));
    CHECK(rate_oma(1.0, 1.0, b) == doctest::Approx(1e6).epsilon(1e-12));
    CHECK(rate_oma(3.0, 1.0, b) == doctest::Approx(2e6).epsilon(1e-12));
    CHECK_THROWS(rate_oma(-1.0, 1.0, b));
    CHECK_THROWS(rate_oma(1.0, -1.0, b));
}

TEST_CASE("rate_noma_interfered closed forms and ordering guard") {
    const auto b = link_mhz();
    CHECK(rate_noma_interfered(2.0, 0.0, 3.0, 1.0, b) ==
          doctest::Approx(rate_oma(2.0, 3.0, b)).epsilon(1e-12));
    CHECK(rate_noma_interfered(0.0, 1.0, 3.0, 1.0, b) == doctest::Approx(0.0));
    // SINR exactly 1: p1 g1 = p2 g2 + 1.
    CHECK(rate_noma_interfered(1.5, 2.0, 2.0, 1.0, b) == doctest::Approx(1e6).epsilon(1e-12));
    CHECK_THROWS(rate_noma_interfered(1.0, 1.0, 0.5, 1.0, b));  // gain1 < gain2
}

TEST_CASE("rate monotonicity properties") {
    const auto b = link_mhz();
    auto rng = make_rng(77);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    for (int t = 0; t < 200; ++t) {
        const double g2 = u(rng);
        const double g1 = g2 + u(rng);
        const double p1 = u(rng), p2 = u(rng), dp = u(rng);
        CHECK(rate_noma_interfered(p1 + dp, p2, g1, g2, b) >
              rate_noma_interfered(p1, p2, g1, g2, b));
        CHECK(rate_noma_interfered(p1, p2 + dp, g1, g2, b) <=
              rate_noma_interfered(p1, p2, g1, g2, b));
        CHECK(rate_noma_interfered(p1, p2, g1, g2, b) <= rate_oma(p1, g1, b));
        CHECK(rate_oma(p1 + dp, g1, b) > rate_oma(p1, g1, b));
    }
}

TEST_CASE("computation time and the two energy forms") {
    DeviceProfile dev;
    dev.cycles_per_bit = 1e7;
    dev.samples = 100.0;
    dev.cpu_hz = 2e9;
    CHECK(computation_time(dev) == doctest::Approx(0.5).epsilon(1e-12));
    DeviceProfile fast = dev;
    fast.cpu_hz = 4e9;
    CHECK(computation_time(fast) == doctest::Approx(0.25).epsilon(1e-12));

    auto rng = make_rng(3);
    std::uniform_real_distribution<double> u(0.5, 4.0);
    for (int t = 0; t < 50; ++t) {
        DeviceProfile d;
        d.cycles_per_bit = 1e7 * u(rng);
        d.samples = 100.0 * u(rng);
        d.cpu_hz = 1e9 * u(rng);
        d.energy_coeff = 1e-28;
        // kappa*T_COM*cpu^3 == kappa*varsigma*cpu^2*beta
        const double lhs = d.energy_coeff * computation_time(d) * std::pow(d.cpu_hz, 3);
        const double rhs = d.energy_coeff * d.cycles_per_bit * d.cpu_hz * d.cpu_hz * d.samples;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(computation_energy(d) == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("ordered pair state enforces the gain assumption") {
    CHECK_NOTHROW(ChannelPairState::ordered(2.0, 1.0, 0));
    CHECK_THROWS(ChannelPairState::ordered(1.0, 2.0, 0));
    CHECK_THROWS(ChannelPairState::ordered(1.0, -0.5, 0));
    const auto relaxed = ChannelPairState::role_ordered(1.0, 2.0, 0);
    CHECK(relaxed.gain1 == 1.0);
    CHECK(relaxed.gain2 == 2.0);
}

TEST_CASE("pair_energy closed forms and linearity") {
    DeviceProfile d1, d2;
    d1.samples = 80;
    d2.samples = 120;
    d2.cpu_hz = 1.8e9;
    TimeBudget times;
    times.t_off_solo = 0.4;
    times.t_off_noma = 1.6;
    times.t_com_first = 0.3;
    times.t_com_second = 0.7;
    times.t_max = 2.3;

    PowerSolution zero;
    zero.feasible = true;
    const double comp_only = pair_energy(d1, d2, zero, times);
    CHECK(comp_only == doctest::Approx(computation_energy(d1) + computation_energy(d2))
                           .epsilon(1e-12));

    PowerSolution p;
    p.p11 = 0.2;
    p.p12 = 0.1;
    p.p2 = 0.05;
    p.feasible = true;
    const double base = pair_energy(d1, d2, p, times);
    // Independent term-by-term evaluation.
    const double oracle = computation_energy(d1) + computation_energy(d2) +
                          0.2 * 0.4 + 0.1 * 1.6 + 0.05 * 1.6;
    CHECK(base == doctest::Approx(oracle).epsilon(1e-12));

    TimeBudget doubled = times;
    doubled.t_off_solo *= 2.0;
    doubled.t_off_noma *= 2.0;
    const double tx_base = base - comp_only;
    const double tx_doubled = pair_energy(d1, d2, p, doubled) - comp_only;
    CHECK(tx_doubled == doctest::Approx(2.0 * tx_base).epsilon(1e-12));

    TimeBudget negative = times;
    negative.t_off_solo = -0.1;
    CHECK_THROWS(pair_energy(d1, d2, p, negative));
}
