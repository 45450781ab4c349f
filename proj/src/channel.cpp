#include "cfn/channel.hpp"

#include <cmath>
#include <numbers>

#include "cfn/rng.hpp"

namespace cfn {

void LinkBudget::validate() const {
    if (!(bandwidth_hz > 0.0) || !(noise_variance > 0.0) || !(wavelength_m > 0.0) ||
        !(antenna_gain > 0.0) || !(pathloss_exp > 0.0) || !(cell_radius_m > 0.0))
        throw std::domain_error("LinkBudget: all fields must be positive");
}

void DeviceProfile::validate() const {
    if (!(cpu_hz > 0.0) || !(cycles_per_bit > 0.0) || !(energy_coeff > 0.0) ||
        !(distance_m > 0.0) || !(max_power_w >= 0.0) || samples < 0.0)
        throw std::domain_error("DeviceProfile: invalid field");
}

ChannelPairState ChannelPairState::ordered(double gain1, double gain2, int subchannel_id) {
    if (gain2 < 0.0 || gain1 < gain2)
        throw std::invalid_argument("ChannelPairState: requires gain1 >= gain2 >= 0");
    return ChannelPairState{gain1, gain2, subchannel_id};
}

ChannelPairState ChannelPairState::role_ordered(double gain1, double gain2, int subchannel_id) {
    if (gain1 < 0.0 || gain2 < 0.0)
        throw std::invalid_argument("ChannelPairState: negative gain");
    return ChannelPairState{gain1, gain2, subchannel_id};
}

double large_scale_fading(const DeviceProfile& device, const LinkBudget& budget) {
    if (!(device.distance_m > 0.0)) throw std::domain_error("large_scale_fading: d <= 0");
    return std::sqrt(budget.antenna_gain) * budget.wavelength_m /
           (4.0 * std::numbers::pi * std::pow(device.distance_m, budget.pathloss_exp / 2.0));
}

double sample_channel_gain(const DeviceProfile& device, const LinkBudget& budget,
                           std::uint64_t rng_seed) {
    const double l1 = large_scale_fading(device, budget);
    auto rng = make_rng(rng_seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(rng), im = normal(rng);  // h0 ~ CN(0,1)
    return l1 * l1 * (re * re + im * im) / budget.noise_variance;
}

double rate_oma(double power_w, double gain, const LinkBudget& budget) {
    if (power_w < 0.0 || gain < 0.0) throw std::domain_error("rate_oma: negative input");
    return budget.bandwidth_hz * std::log2(1.0 + power_w * gain);
}

double rate_noma_interfered(double p1, double p2, double gain1, double gain2,
                            const LinkBudget& budget) {
    if (p1 < 0.0 || p2 < 0.0 || gain1 < 0.0 || gain2 < 0.0)
        throw std::domain_error("rate_noma_interfered: negative input");
    if (gain1 < gain2) throw std::invalid_argument("rate_noma_interfered: gain1 < gain2");
    return budget.bandwidth_hz * std::log2(1.0 + p1 * gain1 / (p2 * gain2 + 1.0));
}

double computation_time(const DeviceProfile& device) {
    device.validate();
    return device.cycles_per_bit * device.samples / device.cpu_hz;
}

double computation_energy(const DeviceProfile& device) {
    device.validate();
    return device.energy_coeff * device.cycles_per_bit * device.cpu_hz * device.cpu_hz *
           device.samples;
}

}  // namespace cfn
