#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "uavirs/rng.hpp"
#include "uavirs/scenario.hpp"
#include "uavirs/types.hpp"

namespace uavirs::channel {

struct LinkGeometry {
    double distance_m = 0.0;
    double elevation_deg = 0.0;
};

/// Per-draw blockage states for the links that involve the moving platform:
/// the direct link to the user and one state per surface.
struct LosState {
    int s_ue = 0;
    std::vector<int> s_irs;
};

/// One joint draw of the small-scale coefficients, unit second moment per
/// entry; pathloss and blockage are applied by the consumer.
struct ChannelDraw {
    std::complex<double> h_ua_ue;
    std::vector<std::vector<std::complex<double>>> h_ua_irs;  // per surface, per element
    std::vector<std::vector<std::complex<double>>> h_irs_ue;
    LosState los;
};

/// 3-D distance and elevation angle between a ground node and the platform.
LinkGeometry link_geometry(Vec2 node_xy, double node_h, Vec2 uav_xy,
                           double uav_h);

/// Sigmoid-in-elevation LoS probability, monotone nondecreasing in theta.
double los_probability(double theta_deg, double a, double b);

/// Rician small-scale coefficients with K-factor kappa and unit second
/// moment; the deterministic component carries a phase uniform in [0, 2pi).
std::vector<std::complex<double>> sample_small_scale(double kappa,
                                                     std::size_t length,
                                                     rng::Substream& stream);

/// Element phases that align every cascaded term of one surface with the
/// direct link, making the combined channel a sum of magnitudes.
std::vector<double> optimal_phase_shifts(const ChannelDraw& draw,
                                         std::size_t irs_index);

/// |combined channel| under phase alignment: the direct magnitude plus each
/// surface's cascade sum, gated by the blockage states.
double combined_magnitude(const LosState& los, double mag_ue,
                          const std::vector<double>& cascade_sums);

struct McRate {
    double rate_bps = 0.0;
    double stderr_bps = 0.0;
};

/// Monte Carlo estimate of the expected achievable rate toward one user at a
/// fixed platform position, with the listed surfaces assisting. Blockage
/// states are Bernoulli at the frozen elevation probabilities and fades are
/// redrawn per sample with optimal phase alignment. Bit-reproducible for a
/// fixed seed regardless of thread count.
McRate monte_carlo_rate(const ScenarioConfig& cfg, Vec2 uav_xy,
                        std::size_t ue_index,
                        const std::vector<std::size_t>& active_irs,
                        std::size_t n_samples, std::uint64_t seed,
                        int n_threads = 0);

}  // namespace uavirs::channel
