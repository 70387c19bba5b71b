#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cosod {

/// Cumulative signal retention ā_t of a forward diffusion process, indexed by
/// integer timestep. ā_0 = 1 (clean latent) and ā_t strictly decreases.
class NoiseSchedule {
  public:
    /// Scaled-linear beta schedule used by Stable Diffusion v1.x
    /// (β from 0.00085 to 0.012 over 1000 steps). For t ≥ 1, ā_t equals the
    /// cumulative product through step t; ā_0 is the clean latent.
    static NoiseSchedule stable_diffusion_v1();

    /// Explicit table. Requires values[0] == 1 and strictly decreasing values
    /// in (0,1]; `allow_zero` also admits 0 as the final entry.
    static NoiseSchedule from_values(std::vector<double> abar, bool allow_zero = false);

    int max_t() const { return static_cast<int>(abar_.size()) - 1; }
    bool contains(int t) const { return t >= 0 && t <= max_t(); }
    double abar(int t) const;

  private:
    explicit NoiseSchedule(std::vector<double> abar) : abar_(std::move(abar)) {}
    std::vector<double> abar_;
};

/// z_t = sqrt(ā_t) z0 + sqrt(1 - ā_t) eps, element-wise.
std::vector<float> add_noise(std::span<const float> z0, int t, std::span<const float> eps,
                             const NoiseSchedule& schedule);

/// Standard-normal samples from a seeded mt19937_64.
std::vector<float> gaussian_noise(std::size_t count, std::uint64_t seed);

} // namespace cosod
