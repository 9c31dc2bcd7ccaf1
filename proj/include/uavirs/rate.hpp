#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uavirs/scenario.hpp"

namespace uavirs::rate {

/// Mean magnitude of a unit-second-moment Rician envelope with K-factor
/// kappa. Closed form in modified Bessel functions; switches to Gauss-Hermite
/// quadrature for very large kappa where the Bessel terms overflow.
double rician_magnitude_mean(double kappa);

/// Link-budget constants for one user. gamma_u carries the direct link,
/// gamma_i[w] the cascade through surface w; primed values weight the
/// cross terms, mu_i[w] is the expected cascade magnitude sum.
struct GammaSet {
    double gamma_u = 0.0;
    double gamma_u_prime = 0.0;
    std::vector<double> gamma_i;
    std::vector<double> gamma_i_prime;
    std::vector<double> mu_i;
};

/// Everything needed to evaluate expected rates: per-user link constants,
/// frozen LoS probabilities, pathloss exponents toward the platform, and
/// bandwidth.
struct RateModel {
    std::vector<GammaSet> gammas;    // per user
    std::vector<double> los_p_ue;    // per user
    std::vector<double> los_p_irs;   // per surface
    double alpha_ue = 2.5;           // platform-to-user exponent
    double alpha_irs = 2.2;          // platform-to-surface exponent
    double bandwidth_hz = 1e6;
    double nlos_attenuation = 0.0;   // blocked-link amplitude factor
};

/// exact_second_moment replaces the default cascade power approximation
/// (mu^2 + 1 per unit pathloss) with the exact per-element moment
/// M(1 - mu_e^2) + mu^2 where mu_e is the expected per-element cascade
/// magnitude. Used to quantify the approximation, not by default.
RateModel make_rate_model(const ScenarioConfig& cfg,
                          bool exact_second_moment = false);

/// Expected achievable rate in bit/s toward user ue with the listed surfaces
/// assisting, as a function of the platform-node distances. Averages the
/// log-SNR over all blockage combinations of the probabilistic links;
/// blocked links keep an nlos_attenuation amplitude fraction.
double expected_rate(const RateModel& model, std::size_t ue, double dist_ue,
                     std::span<const double> dists_irs,
                     std::span<const std::size_t> active_irs);

/// Derivative of expected_rate with respect to [dist_ue, dists_irs...].
std::vector<double> rate_gradient(const RateModel& model, std::size_t ue,
                                  double dist_ue,
                                  std::span<const double> dists_irs,
                                  std::span<const std::size_t> active_irs);

/// First-order expansion of expected_rate around an anchor distance vector.
/// The rate is jointly convex in the distances, so the expansion is a global
/// under-estimator and exact at the anchor.
struct AffineRateBound {
    double value_at_anchor = 0.0;
    std::vector<double> gradient;  // same layout as the anchor
    std::vector<double> anchor;    // [dist_ue, dists_irs...]

    double eval(std::span<const double> dists) const;
};

AffineRateBound taylor_lower_bound(const RateModel& model, std::size_t ue,
                                   double anchor_dist_ue,
                                   std::span<const double> anchor_dists_irs,
                                   std::span<const std::size_t> active_irs);

/// The log-SNR core shared by every rate evaluation:
///   f(u) = log2(1 + sum_z eps_z u_z^-alpha_z
///               + sum_z sum_{i != z} zeta_z zeta_i u_z^{-alpha_z/2} u_i^{-alpha_i/2}).
double composite_snr_log2(std::span<const double> eps,
                          std::span<const double> zeta,
                          std::span<const double> alpha,
                          std::span<const double> u);

std::vector<double> composite_snr_log2_gradient(std::span<const double> eps,
                                                std::span<const double> zeta,
                                                std::span<const double> alpha,
                                                std::span<const double> u);

/// Row-major Z x Z Hessian of composite_snr_log2.
std::vector<double> composite_snr_log2_hessian(std::span<const double> eps,
                                               std::span<const double> zeta,
                                               std::span<const double> alpha,
                                               std::span<const double> u);

/// Minimum eigenvalue of the Hessian at a point; nonnegative up to rounding
/// for any nonnegative constants, certifying convexity.
double hessian_min_eigenvalue(std::span<const double> eps,
                              std::span<const double> zeta,
                              std::span<const double> alpha,
                              std::span<const double> u);

}  // namespace uavirs::rate
