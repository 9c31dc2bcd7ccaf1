#include "uavirs/channel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "uavirs/rate.hpp"

namespace uavirs::channel {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLn2 = 0.69314718055994530942;
}  // namespace

LinkGeometry link_geometry(Vec2 node_xy, double node_h, Vec2 uav_xy,
                           double uav_h) {
    if (uav_h <= node_h)
        throw std::invalid_argument("platform must be above the node");
    const double dh = uav_h - node_h;
    const double horiz = norm(uav_xy - node_xy);
    const double d = std::sqrt(horiz * horiz + dh * dh);
    if (d == 0.0) throw std::invalid_argument("coincident endpoints");
    LinkGeometry g;
    g.distance_m = d;
    g.elevation_deg = (180.0 / kPi) * std::asin(dh / d);
    return g;
}

double los_probability(double theta_deg, double a, double b) {
    return 1.0 / (1.0 + a * std::exp(-b * (theta_deg - a)));
}

std::vector<std::complex<double>> sample_small_scale(double kappa,
                                                     std::size_t length,
                                                     rng::Substream& stream) {
    const double det = std::sqrt(kappa / (kappa + 1.0));
    const double dif = std::sqrt(1.0 / (kappa + 1.0));
    std::vector<std::complex<double>> out(length);
    for (auto& g : out) {
        const double psi = 2.0 * kPi * stream.uniform01();
        g = det * std::complex<double>(std::cos(psi), std::sin(psi)) +
            dif * stream.complex_normal();
    }
    return out;
}

std::vector<double> optimal_phase_shifts(const ChannelDraw& draw,
                                         std::size_t irs_index) {
    const auto& to_irs = draw.h_ua_irs.at(irs_index);
    const auto& to_ue = draw.h_irs_ue.at(irs_index);
    if (std::abs(draw.h_ua_ue) == 0.0)
        throw std::invalid_argument("direct link has zero magnitude");
    std::vector<double> phi(to_irs.size());
    for (std::size_t m = 0; m < phi.size(); ++m) {
        if (std::abs(to_irs[m]) == 0.0 || std::abs(to_ue[m]) == 0.0)
            throw std::invalid_argument("cascade entry has zero magnitude");
        // The cascaded term is conj(to_ue) * e^{j phi} * to_irs; this phase
        // rotates it onto the direct link's phase.
        phi[m] = std::arg(draw.h_ua_ue) - std::arg(to_irs[m]) + std::arg(to_ue[m]);
    }
    return phi;
}

double combined_magnitude(const LosState& los, double mag_ue,
                          const std::vector<double>& cascade_sums) {
    double total = los.s_ue ? mag_ue : 0.0;
    for (std::size_t w = 0; w < cascade_sums.size(); ++w)
        if (los.s_irs[w]) total += cascade_sums[w];
    return total;
}

namespace {

/// Magnitude of one Rician coefficient with unit second moment. The
/// deterministic part's phase drops out of the magnitude, so only the two
/// scattered-component normals are consumed.
inline double rician_magnitude(double det, double sigma_c,
                               rng::Substream& s) {
    const std::complex<double> z = s.complex_normal();
    const double re = det + sigma_c * z.real();
    const double im = sigma_c * z.imag();
    return std::sqrt(re * re + im * im);
}

struct BlockSums {
    double sum = 0.0;
    double sumsq = 0.0;
};

}  // namespace

McRate monte_carlo_rate(const ScenarioConfig& cfg, Vec2 uav_xy,
                        std::size_t ue_index,
                        const std::vector<std::size_t>& active_irs,
                        std::size_t n_samples, std::uint64_t seed,
                        int n_threads) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    const UeSpec& ue = cfg.ues.at(ue_index);
    const ChannelParams& ch = cfg.channel;

    const double p_ue = los_probability(effective_ue_elevation_deg(ue),
                                        ue.los_a, ue.los_b);
    const LinkGeometry geo_ue =
        link_geometry(ue.xy_m, ue.height_m, uav_xy, cfg.uav.altitude_m);
    const double loss_ue =
        std::sqrt(ch.beta0 * std::pow(geo_ue.distance_m, -ch.alpha_ua_ue));

    struct IrsDraw {
        double p_los;
        double loss;   // sqrt of the cascade pathloss product
        int elements;
    };
    std::vector<IrsDraw> surfaces;
    surfaces.reserve(active_irs.size());
    for (std::size_t w : active_irs) {
        const IrsSpec& irs = cfg.irss.at(w);
        const LinkGeometry geo_irs =
            link_geometry(irs.xy_m, irs.height_m, uav_xy, cfg.uav.altitude_m);
        const double d_irs_ue = std::sqrt(
            norm(irs.xy_m - ue.xy_m) * norm(irs.xy_m - ue.xy_m) +
            (irs.height_m - ue.height_m) * (irs.height_m - ue.height_m));
        IrsDraw d;
        d.p_los = los_probability(effective_irs_elevation_deg(irs), irs.los_a,
                                  irs.los_b);
        d.loss = std::sqrt(ch.beta0 * std::pow(geo_irs.distance_m, -ch.alpha_ua_irs)) *
                 std::sqrt(ch.beta0 * std::pow(d_irs_ue, -ch.alpha_irs_ue));
        d.elements = irs.n_elements;
        surfaces.push_back(d);
    }

    const double det_ue = std::sqrt(ch.kappa_ua_ue / (ch.kappa_ua_ue + 1.0));
    const double sig_ue = std::sqrt(0.5 / (ch.kappa_ua_ue + 1.0));
    const double det_i = std::sqrt(ch.kappa_ua_irs / (ch.kappa_ua_irs + 1.0));
    const double sig_i = std::sqrt(0.5 / (ch.kappa_ua_irs + 1.0));
    const double det_g = std::sqrt(ch.kappa_irs_ue / (ch.kappa_irs_ue + 1.0));
    const double sig_g = std::sqrt(0.5 / (ch.kappa_irs_ue + 1.0));

    const double snr_scale =
        cfg.uav.tx_power_w / (ch.bandwidth_hz * ch.noise_psd_w_per_hz);
    const double nu = ch.nlos_attenuation;

    // Fixed-size blocks with per-sample substreams; partial sums are merged
    // in block order so the result is independent of the thread schedule.
    constexpr std::size_t kBlock = 4096;
    const std::size_t n_blocks = (n_samples + kBlock - 1) / kBlock;
    std::vector<BlockSums> blocks(n_blocks);

    auto run_block = [&](std::size_t bi) {
        const std::size_t begin = bi * kBlock;
        const std::size_t end = std::min(begin + kBlock, n_samples);
        BlockSums acc;
        for (std::size_t i = begin; i < end; ++i) {
            rng::Substream s(seed, i);
            const bool los_ue = s.uniform01() < p_ue;
            double mag = 0.0;
            const double gate_ue = los_ue ? 1.0 : nu;
            if (gate_ue > 0.0)
                mag += gate_ue * loss_ue * rician_magnitude(det_ue, sig_ue, s);
            for (const IrsDraw& irs : surfaces) {
                const bool los_irs = s.uniform01() < irs.p_los;
                const double gate = los_irs ? 1.0 : nu;
                if (gate == 0.0) continue;
                double cascade = 0.0;
                for (int m = 0; m < irs.elements; ++m)
                    cascade += rician_magnitude(det_i, sig_i, s) *
                               rician_magnitude(det_g, sig_g, s);
                mag += gate * irs.loss * cascade;
            }
            const double rate =
                ch.bandwidth_hz * std::log1p(snr_scale * mag * mag) / kLn2;
            acc.sum += rate;
            acc.sumsq += rate * rate;
        }
        blocks[bi] = acc;
    };

    int threads = n_threads > 0
                      ? n_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n_blocks)));
    if (threads == 1) {
        for (std::size_t bi = 0; bi < n_blocks; ++bi) run_block(bi);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t bi = next.fetch_add(1); bi < n_blocks;
                     bi = next.fetch_add(1))
                    run_block(bi);
            });
        for (auto& th : pool) th.join();
    }

    double sum = 0.0, sumsq = 0.0;
    for (const BlockSums& b : blocks) {
        sum += b.sum;
        sumsq += b.sumsq;
    }
    McRate out;
    const double n = static_cast<double>(n_samples);
    out.rate_bps = sum / n;
    if (n_samples > 1) {
        const double var =
            std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
        out.stderr_bps = std::sqrt(var / n);
    }
    return out;
}

}  // namespace uavirs::channel
