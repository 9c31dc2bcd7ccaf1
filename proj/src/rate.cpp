#include "uavirs/rate.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "uavirs/channel.hpp"

namespace uavirs::rate {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLn2 = 0.69314718055994530942;

/// Physicists' Gauss-Hermite rule via the symmetric tridiagonal Jacobi
/// matrix; weights sum to sqrt(pi).
void gauss_hermite(int n, std::vector<double>& nodes,
                   std::vector<double>& weights) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double off = std::sqrt(k / 2.0);
        j(k, k - 1) = off;
        j(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes.resize(n);
    weights.resize(n);
    for (int k = 0; k < n; ++k) {
        nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        weights[k] = std::sqrt(kPi) * v0 * v0;
    }
}

/// E|g| by 2-D quadrature over the scattered component. Stable for any
/// kappa, used where the Bessel closed form would overflow.
double magnitude_mean_quadrature(double kappa) {
    static thread_local std::vector<double> nodes, weights;
    if (nodes.empty()) gauss_hermite(80, nodes, weights);
    const double det = std::sqrt(kappa / (kappa + 1.0));
    const double sig = std::sqrt(0.5 / (kappa + 1.0));
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double re = det + sig * std::sqrt(2.0) * nodes[i];
        double inner = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double im = sig * std::sqrt(2.0) * nodes[j];
            inner += weights[j] * std::sqrt(re * re + im * im);
        }
        acc += weights[i] * inner;
    }
    return acc / kPi;
}

}  // namespace

double rician_magnitude_mean(double kappa) {
    if (kappa < 0) throw std::invalid_argument("kappa must be >= 0");
    if (kappa > 500.0) return magnitude_mean_quadrature(kappa);
    const double half = 0.5 * kappa;
    const double i0 = std::cyl_bessel_i(0.0, half);
    const double i1 = std::cyl_bessel_i(1.0, half);
    return std::sqrt(kPi / (4.0 * (kappa + 1.0))) * std::exp(-half) *
           ((1.0 + kappa) * i0 + kappa * i1);
}

RateModel make_rate_model(const ScenarioConfig& cfg, bool exact_second_moment) {
    const ChannelParams& ch = cfg.channel;
    RateModel model;
    model.alpha_ue = ch.alpha_ua_ue;
    model.alpha_irs = ch.alpha_ua_irs;
    model.bandwidth_hz = ch.bandwidth_hz;
    model.nlos_attenuation = ch.nlos_attenuation;

    const double mu_u = rician_magnitude_mean(ch.kappa_ua_ue);
    const double mu_elem_i = rician_magnitude_mean(ch.kappa_ua_irs);
    const double mu_elem_g = rician_magnitude_mean(ch.kappa_irs_ue);
    const double noise = ch.bandwidth_hz * ch.noise_psd_w_per_hz;
    const double gamma_u = std::sqrt(ch.beta0 * cfg.uav.tx_power_w / noise);

    for (const IrsSpec& irs : cfg.irss)
        model.los_p_irs.push_back(channel::los_probability(
            effective_irs_elevation_deg(irs), irs.los_a, irs.los_b));

    for (const UeSpec& ue : cfg.ues) {
        model.los_p_ue.push_back(
            channel::los_probability(effective_ue_elevation_deg(ue), ue.los_a,
                                     ue.los_b));
        GammaSet g;
        g.gamma_u = gamma_u;
        g.gamma_u_prime = gamma_u * mu_u;
        for (const IrsSpec& irs : cfg.irss) {
            const double dx = norm(irs.xy_m - ue.xy_m);
            const double dz = irs.height_m - ue.height_m;
            const double d_wk = std::sqrt(dx * dx + dz * dz);
            const double m = static_cast<double>(irs.n_elements);
            const double mu_i = m * mu_elem_i * mu_elem_g;
            // Second moment of the cascade magnitude sum. The default keeps
            // the unit-variance approximation; the exact form carries the
            // per-element variance M(1 - (mu_i mu_g)^2).
            const double second_moment =
                exact_second_moment
                    ? m * (1.0 - mu_elem_i * mu_elem_i * mu_elem_g * mu_elem_g) +
                          mu_i * mu_i
                    : mu_i * mu_i + 1.0;
            const double base =
                std::sqrt(ch.beta0 * ch.beta0 * cfg.uav.tx_power_w /
                          (std::pow(d_wk, ch.alpha_irs_ue) * noise));
            g.gamma_i.push_back(base * std::sqrt(second_moment));
            g.gamma_i_prime.push_back(base * mu_i);
            g.mu_i.push_back(mu_i);
        }
        model.gammas.push_back(std::move(g));
    }
    return model;
}

double composite_snr_log2(std::span<const double> eps,
                          std::span<const double> zeta,
                          std::span<const double> alpha,
                          std::span<const double> u) {
    const std::size_t z = u.size();
    double direct = 0.0, t_sum = 0.0, t_sq = 0.0;
    for (std::size_t i = 0; i < z; ++i) {
        direct += eps[i] * std::pow(u[i], -alpha[i]);
        const double t = zeta[i] * std::pow(u[i], -0.5 * alpha[i]);
        t_sum += t;
        t_sq += t * t;
    }
    // Ordered cross-pair sum equals (sum t)^2 - sum t^2.
    return std::log1p(direct + t_sum * t_sum - t_sq) / kLn2;
}

namespace {

struct SnrParts {
    double g = 0.0;              // 1 + composite SNR
    std::vector<double> dg;      // dg/du_z
    std::vector<double> t;       // zeta_z u_z^{-alpha_z/2}
    std::vector<double> dt;      // t_z'
    double t_sum = 0.0;
};

SnrParts snr_parts(std::span<const double> eps, std::span<const double> zeta,
                   std::span<const double> alpha, std::span<const double> u) {
    const std::size_t z = u.size();
    SnrParts p;
    p.t.resize(z);
    p.dt.resize(z);
    p.dg.resize(z);
    double direct = 0.0, t_sq = 0.0;
    for (std::size_t i = 0; i < z; ++i) {
        direct += eps[i] * std::pow(u[i], -alpha[i]);
        p.t[i] = zeta[i] * std::pow(u[i], -0.5 * alpha[i]);
        p.dt[i] = -0.5 * alpha[i] * zeta[i] * std::pow(u[i], -0.5 * alpha[i] - 1.0);
        p.t_sum += p.t[i];
        t_sq += p.t[i] * p.t[i];
    }
    p.g = 1.0 + direct + p.t_sum * p.t_sum - t_sq;
    for (std::size_t i = 0; i < z; ++i)
        p.dg[i] = -alpha[i] * eps[i] * std::pow(u[i], -alpha[i] - 1.0) +
                  2.0 * p.dt[i] * (p.t_sum - p.t[i]);
    return p;
}

}  // namespace

std::vector<double> composite_snr_log2_gradient(std::span<const double> eps,
                                                std::span<const double> zeta,
                                                std::span<const double> alpha,
                                                std::span<const double> u) {
    const SnrParts p = snr_parts(eps, zeta, alpha, u);
    std::vector<double> grad(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        grad[i] = p.dg[i] / (p.g * kLn2);
    return grad;
}

std::vector<double> composite_snr_log2_hessian(std::span<const double> eps,
                                               std::span<const double> zeta,
                                               std::span<const double> alpha,
                                               std::span<const double> u) {
    const std::size_t z = u.size();
    const SnrParts p = snr_parts(eps, zeta, alpha, u);
    std::vector<double> h(z * z, 0.0);
    for (std::size_t i = 0; i < z; ++i) {
        const double ddt = 0.5 * alpha[i] * (0.5 * alpha[i] + 1.0) * zeta[i] *
                           std::pow(u[i], -0.5 * alpha[i] - 2.0);
        const double ddg_ii =
            alpha[i] * (alpha[i] + 1.0) * eps[i] * std::pow(u[i], -alpha[i] - 2.0) +
            2.0 * ddt * (p.t_sum - p.t[i]);
        h[i * z + i] =
            (ddg_ii / p.g - p.dg[i] * p.dg[i] / (p.g * p.g)) / kLn2;
        for (std::size_t j = i + 1; j < z; ++j) {
            const double ddg_ij = 2.0 * p.dt[i] * p.dt[j];
            const double v =
                (ddg_ij / p.g - p.dg[i] * p.dg[j] / (p.g * p.g)) / kLn2;
            h[i * z + j] = v;
            h[j * z + i] = v;
        }
    }
    return h;
}

double hessian_min_eigenvalue(std::span<const double> eps,
                              std::span<const double> zeta,
                              std::span<const double> alpha,
                              std::span<const double> u) {
    const std::size_t z = u.size();
    const std::vector<double> h = composite_snr_log2_hessian(eps, zeta, alpha, u);
    Eigen::MatrixXd m(z, z);
    for (std::size_t i = 0; i < z; ++i)
        for (std::size_t j = 0; j < z; ++j) m(i, j) = h[i * z + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

namespace {

/// Enumerates link blockage combinations and applies fn(weight, present,
/// gates) to each. present lists node indices into the layout
/// [user, surfaces...] that contribute in this state; gates carries their
/// amplitude factors, 1 when in sight and nlos_attenuation when blocked.
/// Fully blocked nodes vanish when the attenuation is zero.
template <typename Fn>
void for_each_state(const RateModel& model, std::size_t ue,
                    std::span<const std::size_t> active_irs, Fn&& fn) {
    const std::size_t z = 1 + active_irs.size();
    std::vector<double> p(z);
    p[0] = model.los_p_ue.at(ue);
    for (std::size_t j = 0; j < active_irs.size(); ++j)
        p[1 + j] = model.los_p_irs.at(active_irs[j]);
    const double nu = model.nlos_attenuation;
    std::vector<std::size_t> present;
    std::vector<double> gates;
    present.reserve(z);
    gates.reserve(z);
    for (std::size_t mask = 0; mask < (std::size_t{1} << z); ++mask) {
        double weight = 1.0;
        present.clear();
        gates.clear();
        for (std::size_t i = 0; i < z; ++i) {
            if (mask & (std::size_t{1} << i)) {
                weight *= p[i];
                present.push_back(i);
                gates.push_back(1.0);
            } else {
                weight *= 1.0 - p[i];
                if (nu > 0.0) {
                    present.push_back(i);
                    gates.push_back(nu);
                }
            }
        }
        if (weight > 0.0) fn(weight, present, gates);
    }
}

}  // namespace

double expected_rate(const RateModel& model, std::size_t ue, double dist_ue,
                     std::span<const double> dists_irs,
                     std::span<const std::size_t> active_irs) {
    if (dist_ue <= 0.0) throw std::invalid_argument("dist_ue must be > 0");
    for (double d : dists_irs)
        if (d <= 0.0) throw std::invalid_argument("surface distance must be > 0");
    const GammaSet& gam = model.gammas.at(ue);

    double total = 0.0;
    std::vector<double> eps, zeta, alpha, u;
    for_each_state(
        model, ue, active_irs,
        [&](double weight, const std::vector<std::size_t>& present,
            const std::vector<double>& gates) {
            eps.clear();
            zeta.clear();
            alpha.clear();
            u.clear();
            for (std::size_t i = 0; i < present.size(); ++i) {
                const std::size_t node = present[i];
                const double gate = gates[i];
                if (node == 0) {
                    eps.push_back(gate * gate * gam.gamma_u * gam.gamma_u);
                    zeta.push_back(gate * gam.gamma_u_prime);
                    alpha.push_back(model.alpha_ue);
                    u.push_back(dist_ue);
                } else {
                    const std::size_t w = active_irs[node - 1];
                    eps.push_back(gate * gate * gam.gamma_i.at(w) *
                                  gam.gamma_i.at(w));
                    zeta.push_back(gate * gam.gamma_i_prime.at(w));
                    alpha.push_back(model.alpha_irs);
                    u.push_back(dists_irs[node - 1]);
                }
            }
            total += weight * composite_snr_log2(eps, zeta, alpha, u);
        });
    return model.bandwidth_hz * total;
}

std::vector<double> rate_gradient(const RateModel& model, std::size_t ue,
                                  double dist_ue,
                                  std::span<const double> dists_irs,
                                  std::span<const std::size_t> active_irs) {
    const GammaSet& gam = model.gammas.at(ue);
    std::vector<double> grad(1 + dists_irs.size(), 0.0);
    std::vector<double> eps, zeta, alpha, u;
    for_each_state(
        model, ue, active_irs,
        [&](double weight, const std::vector<std::size_t>& present,
            const std::vector<double>& gates) {
            eps.clear();
            zeta.clear();
            alpha.clear();
            u.clear();
            for (std::size_t i = 0; i < present.size(); ++i) {
                const std::size_t node = present[i];
                const double gate = gates[i];
                if (node == 0) {
                    eps.push_back(gate * gate * gam.gamma_u * gam.gamma_u);
                    zeta.push_back(gate * gam.gamma_u_prime);
                    alpha.push_back(model.alpha_ue);
                    u.push_back(dist_ue);
                } else {
                    const std::size_t w = active_irs[node - 1];
                    eps.push_back(gate * gate * gam.gamma_i.at(w) *
                                  gam.gamma_i.at(w));
                    zeta.push_back(gate * gam.gamma_i_prime.at(w));
                    alpha.push_back(model.alpha_irs);
                    u.push_back(dists_irs[node - 1]);
                }
            }
            const std::vector<double> g =
                composite_snr_log2_gradient(eps, zeta, alpha, u);
            for (std::size_t i = 0; i < present.size(); ++i)
                grad[present[i]] += weight * g[i];
        });
    for (double& g : grad) g *= model.bandwidth_hz;
    return grad;
}

double AffineRateBound::eval(std::span<const double> dists) const {
    double v = value_at_anchor;
    for (std::size_t i = 0; i < gradient.size(); ++i)
        v += gradient[i] * (dists[i] - anchor[i]);
    return v;
}

AffineRateBound taylor_lower_bound(const RateModel& model, std::size_t ue,
                                   double anchor_dist_ue,
                                   std::span<const double> anchor_dists_irs,
                                   std::span<const std::size_t> active_irs) {
    AffineRateBound b;
    b.value_at_anchor =
        expected_rate(model, ue, anchor_dist_ue, anchor_dists_irs, active_irs);
    b.gradient = rate_gradient(model, ue, anchor_dist_ue, anchor_dists_irs,
                               active_irs);
    b.anchor.assign(1, anchor_dist_ue);
    b.anchor.insert(b.anchor.end(), anchor_dists_irs.begin(),
                    anchor_dists_irs.end());
    return b;
}

}  // namespace uavirs::rate
