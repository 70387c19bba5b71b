#include "cosod/noise.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cosod/error.hpp"

namespace cosod {

NoiseSchedule NoiseSchedule::stable_diffusion_v1() {
    constexpr int kSteps = 1000;
    const double lo = std::sqrt(0.00085);
    const double hi = std::sqrt(0.012);
    std::vector<double> abar(kSteps);
    abar[0] = 1.0;
    double prod = 1.0;
    for (int i = 0; i < kSteps; ++i) {
        const double s = lo + (hi - lo) * i / (kSteps - 1);
        prod *= 1.0 - s * s;
        if (i > 0) {
            abar[i] = prod;
        }
    }
    return NoiseSchedule(std::move(abar));
}

NoiseSchedule NoiseSchedule::from_values(std::vector<double> abar, bool allow_zero) {
    if (abar.empty() || abar[0] != 1.0) {
        throw ConfigError("noise schedule must start with abar_0 = 1");
    }
    for (std::size_t t = 1; t < abar.size(); ++t) {
        const bool last = t + 1 == abar.size();
        const bool in_range = abar[t] > 0.0 || (allow_zero && last && abar[t] == 0.0);
        if (!in_range || abar[t] > 1.0) {
            throw ConfigError("noise schedule value out of range at t=" + std::to_string(t));
        }
        if (!(abar[t] < abar[t - 1])) {
            throw ConfigError("noise schedule must be strictly decreasing (t=" + std::to_string(t) + ")");
        }
    }
    return NoiseSchedule(std::move(abar));
}

double NoiseSchedule::abar(int t) const {
    if (!contains(t)) {
        throw ConfigError("timestep " + std::to_string(t) + " outside schedule [0, " + std::to_string(max_t()) +
                          "]");
    }
    return abar_[static_cast<std::size_t>(t)];
}

std::vector<float> add_noise(std::span<const float> z0, int t, std::span<const float> eps,
                             const NoiseSchedule& schedule) {
    if (z0.size() != eps.size()) {
        throw ShapeError("add_noise: latent has " + std::to_string(z0.size()) + " elements, noise has " +
                         std::to_string(eps.size()));
    }
    const double a = schedule.abar(t);
    if (a == 1.0) {
        return {z0.begin(), z0.end()};
    }
    if (a == 0.0) {
        return {eps.begin(), eps.end()};
    }
    const double signal = std::sqrt(a);
    const double noise = std::sqrt(1.0 - a);
    std::vector<float> out(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) {
        out[i] = static_cast<float>(signal * z0[i] + noise * eps[i]);
    }
    return out;
}

std::vector<float> gaussian_noise(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> out(count);
    for (auto& v : out) {
        v = dist(rng);
    }
    return out;
}

} // namespace cosod
