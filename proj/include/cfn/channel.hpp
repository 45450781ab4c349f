#pragma once

#include <cstdint>
#include <stdexcept>

namespace cfn {

struct LinkBudget {
    double bandwidth_hz = 1e6;
    double noise_variance = 1e-13;
    double wavelength_m = 0.1;
    double antenna_gain = 1.0;
    double pathloss_exp = 2.0;
    double cell_radius_m = 600.0;

    void validate() const;
};

struct DeviceProfile {
    double cpu_hz = 2e9;          // CPU clock
    double samples = 0.0;         // local sample count beta_i
    double cycles_per_bit = 1e7;  // cycles per bit of data
    double energy_coeff = 1e-28;  // CPU energy coefficient kappa
    double distance_m = 300.0;
    double max_power_w = 1.0;

    void validate() const;
};

// Normalized gains of the two users sharing a sub-channel. gain1 belongs to
// the user decoded first (assumed stronger).
struct ChannelPairState {
    double gain1 = 0.0;
    double gain2 = 0.0;
    int subchannel_id = 0;

    static ChannelPairState ordered(double gain1, double gain2, int subchannel_id);
    // Role-ordered construction: gains follow the transmit roles, which may
    // invert the strength assumption when the faster user has the weaker link.
    static ChannelPairState role_ordered(double gain1, double gain2, int subchannel_id);
};

// |L1 h0|^2 / sigma^2 with h0 ~ CN(0,1), deterministic per seed.
double sample_channel_gain(const DeviceProfile& device, const LinkBudget& budget,
                           std::uint64_t rng_seed);

// Large-scale fading amplitude sqrt(delta1) lambda / (4 pi d^(aPL/2)).
double large_scale_fading(const DeviceProfile& device, const LinkBudget& budget);

double rate_oma(double power_w, double gain, const LinkBudget& budget);
double rate_noma_interfered(double p1, double p2, double gain1, double gain2,
                            const LinkBudget& budget);

// T_COM = cycles_per_bit * samples / cpu_hz, the definition under which the
// two CPU-energy forms kappa*varsigma*cpu^2*beta and kappa*T_COM*cpu^3 agree.
double computation_time(const DeviceProfile& device);
double computation_energy(const DeviceProfile& device);

}  // namespace cfn
