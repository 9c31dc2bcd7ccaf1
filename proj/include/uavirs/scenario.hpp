#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uavirs/types.hpp"

namespace uavirs {

struct UavSpec {
    double altitude_m = 100.0;
    Vec2 start_xy_m{0.0, 0.0};
    Vec2 finish_xy_m{100.0, 100.0};
    double v_max_mps = 30.0;
    double seg_max_m = 1.0;
    double tx_power_w = 0.1;
};

struct IrsSpec {
    Vec2 xy_m{0.0, 0.0};
    double height_m = 20.0;
    int n_elements = 500;
    double los_a = 15.0;
    double los_b = 0.18;
    /// Elevation angle at which the air-to-surface LoS probability is frozen.
    std::optional<double> fixed_elevation_deg;
};

struct UeSpec {
    Vec2 xy_m{0.0, 0.0};
    double height_m = 0.0;
    double data_bits = 0.0;
    double los_a = 30.0;
    double los_b = 0.15;
    std::optional<double> fixed_elevation_deg;
};

struct ChannelParams {
    double beta0 = 0.01;               // reference pathloss at 1 m, linear
    double alpha_ua_ue = 2.5;          // UAV-to-UE pathloss exponent
    double alpha_ua_irs = 2.2;         // UAV-to-surface pathloss exponent
    double alpha_irs_ue = 3.0;         // surface-to-UE pathloss exponent
    double kappa_ua_ue = 10.0;         // Rician K-factors per link class
    double kappa_ua_irs = 30.0;
    double kappa_irs_ue = 5.0;
    double noise_dbm_per_hz = -174.0;  // as authored; kept for round-trips
    double noise_psd_w_per_hz = 0.0;   // linear form used everywhere
    double bandwidth_hz = 1e6;
    double nlos_attenuation = 0.0;     // blocked-link amplitude factor, in [0,1)
    double data_margin_bits = 0.0;     // extra bits demanded beyond each quota
};

struct PowerParams {
    double p0_w = 79.86;          // blade profile power in hover
    double pi_w = 88.63;          // induced power in hover
    double u_tip_mps = 120.0;     // rotor tip speed
    double v0_mps = 4.03;         // mean rotor induced velocity in hover
    double d0 = 0.6;              // fuselage drag ratio
    double rho = 1.225;           // air density
    double solidity = 0.05;       // rotor solidity
    double rotor_area_m2 = 0.503; // rotor disc area
};

struct ScenarioConfig {
    UavSpec uav;
    std::vector<IrsSpec> irss;
    std::vector<UeSpec> ues;
    ChannelParams channel;
    PowerParams power;
    std::uint64_t seed = 1;
};

/// Default elevation angles at which LoS probabilities are frozen when a node
/// carries no per-node override.
inline constexpr double kDefaultUeElevationDeg = 60.0;
inline constexpr double kDefaultIrsElevationDeg = 54.2;

double dbm_per_hz_to_w_per_hz(double dbm);
double w_per_hz_to_dbm_per_hz(double w);

/// Reference mission: 100 m altitude, 20 m surfaces with 500 elements,
/// one ground user halfway along the 0,0 -> 100,100 track.
ScenarioConfig default_scenario();

/// Parse and validate a scenario file. Unknown keys are rejected, missing
/// blocks fall back to defaults, every invariant is checked.
ScenarioConfig load_scenario(const std::string& path);

ScenarioConfig parse_scenario(const std::string& json_text);

std::string serialize_scenario(const ScenarioConfig& cfg);

/// Throws ScenarioError naming the offending field if any invariant fails.
void validate_scenario(const ScenarioConfig& cfg);

/// Effective frozen elevation for a node, falling back to the class default.
double effective_ue_elevation_deg(const UeSpec& ue);
double effective_irs_elevation_deg(const IrsSpec& irs);

}  // namespace uavirs
