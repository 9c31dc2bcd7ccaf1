#include "uavirs/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace uavirs {

using nlohmann::json;

double dbm_per_hz_to_w_per_hz(double dbm) {
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double w_per_hz_to_dbm_per_hz(double w) { return 10.0 * std::log10(w) + 30.0; }

double effective_ue_elevation_deg(const UeSpec& ue) {
    return ue.fixed_elevation_deg.value_or(kDefaultUeElevationDeg);
}

double effective_irs_elevation_deg(const IrsSpec& irs) {
    return irs.fixed_elevation_deg.value_or(kDefaultIrsElevationDeg);
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.channel.noise_psd_w_per_hz =
        dbm_per_hz_to_w_per_hz(cfg.channel.noise_dbm_per_hz);
    UeSpec ue;
    ue.xy_m = {50.0, 50.0};
    cfg.ues.push_back(ue);
    IrsSpec irs;
    irs.xy_m = {45.0, 55.0};
    cfg.irss.push_back(irs);
    validate_scenario(cfg);
    return cfg;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ScenarioError("scenario field '" + field + "': " + why);
}

void require(bool ok, const std::string& field, const std::string& why) {
    if (!ok) fail(field, why);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key))
            fail(where.empty() ? key : where + "." + key, "unknown key");
    }
}

double get_number(const json& obj, const char* key, double fallback,
                  const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(where + "." + key, "expected a number");
    return obj[key].get<double>();
}

Vec2 get_vec2(const json& obj, const char* key, Vec2 fallback,
              const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(where + "." + key, "expected [x, y] in meters");
    return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("scenario parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ScenarioError("scenario root must be an object");
    reject_unknown_keys(doc, {"uav", "irss", "ues", "channel", "power", "seed"},
                        "");

    ScenarioConfig cfg;
    cfg.ues.clear();
    cfg.irss.clear();

    if (doc.contains("uav")) {
        const json& u = doc["uav"];
        reject_unknown_keys(u,
                            {"altitude_m", "start_xy_m", "finish_xy_m",
                             "v_max_mps", "seg_max_m", "tx_power_w"},
                            "uav");
        cfg.uav.altitude_m = get_number(u, "altitude_m", cfg.uav.altitude_m, "uav");
        cfg.uav.start_xy_m = get_vec2(u, "start_xy_m", cfg.uav.start_xy_m, "uav");
        cfg.uav.finish_xy_m = get_vec2(u, "finish_xy_m", cfg.uav.finish_xy_m, "uav");
        cfg.uav.v_max_mps = get_number(u, "v_max_mps", cfg.uav.v_max_mps, "uav");
        cfg.uav.seg_max_m = get_number(u, "seg_max_m", cfg.uav.seg_max_m, "uav");
        cfg.uav.tx_power_w = get_number(u, "tx_power_w", cfg.uav.tx_power_w, "uav");
    }

    if (doc.contains("irss")) {
        if (!doc["irss"].is_array()) fail("irss", "expected an array");
        std::size_t i = 0;
        for (const json& node : doc["irss"]) {
            const std::string where = "irss[" + std::to_string(i) + "]";
            reject_unknown_keys(node,
                                {"xy_m", "height_m", "n_elements", "los_a",
                                 "los_b", "fixed_elevation_deg"},
                                where);
            IrsSpec irs;
            irs.xy_m = get_vec2(node, "xy_m", irs.xy_m, where);
            irs.height_m = get_number(node, "height_m", irs.height_m, where);
            irs.n_elements = static_cast<int>(
                get_number(node, "n_elements", irs.n_elements, where));
            irs.los_a = get_number(node, "los_a", irs.los_a, where);
            irs.los_b = get_number(node, "los_b", irs.los_b, where);
            if (node.contains("fixed_elevation_deg"))
                irs.fixed_elevation_deg =
                    get_number(node, "fixed_elevation_deg", 0.0, where);
            cfg.irss.push_back(irs);
            ++i;
        }
    }

    if (doc.contains("ues")) {
        if (!doc["ues"].is_array()) fail("ues", "expected an array");
        std::size_t i = 0;
        for (const json& node : doc["ues"]) {
            const std::string where = "ues[" + std::to_string(i) + "]";
            reject_unknown_keys(node,
                                {"xy_m", "height_m", "data_bits", "los_a",
                                 "los_b", "fixed_elevation_deg"},
                                where);
            UeSpec ue;
            ue.xy_m = get_vec2(node, "xy_m", ue.xy_m, where);
            ue.height_m = get_number(node, "height_m", ue.height_m, where);
            ue.data_bits = get_number(node, "data_bits", ue.data_bits, where);
            ue.los_a = get_number(node, "los_a", ue.los_a, where);
            ue.los_b = get_number(node, "los_b", ue.los_b, where);
            if (node.contains("fixed_elevation_deg"))
                ue.fixed_elevation_deg =
                    get_number(node, "fixed_elevation_deg", 0.0, where);
            cfg.ues.push_back(ue);
            ++i;
        }
    }
    if (cfg.ues.empty()) fail("ues", "at least one user is required");

    if (doc.contains("channel")) {
        const json& c = doc["channel"];
        reject_unknown_keys(c,
                            {"beta0", "alpha_ua_ue", "alpha_ua_irs",
                             "alpha_irs_ue", "kappa_ua_ue", "kappa_ua_irs",
                             "kappa_irs_ue", "noise_dbm_per_hz", "bandwidth_hz",
                             "nlos_attenuation", "data_margin_bits"},
                            "channel");
        ChannelParams& ch = cfg.channel;
        ch.beta0 = get_number(c, "beta0", ch.beta0, "channel");
        ch.alpha_ua_ue = get_number(c, "alpha_ua_ue", ch.alpha_ua_ue, "channel");
        ch.alpha_ua_irs = get_number(c, "alpha_ua_irs", ch.alpha_ua_irs, "channel");
        ch.alpha_irs_ue = get_number(c, "alpha_irs_ue", ch.alpha_irs_ue, "channel");
        ch.kappa_ua_ue = get_number(c, "kappa_ua_ue", ch.kappa_ua_ue, "channel");
        ch.kappa_ua_irs = get_number(c, "kappa_ua_irs", ch.kappa_ua_irs, "channel");
        ch.kappa_irs_ue = get_number(c, "kappa_irs_ue", ch.kappa_irs_ue, "channel");
        ch.noise_dbm_per_hz =
            get_number(c, "noise_dbm_per_hz", ch.noise_dbm_per_hz, "channel");
        ch.bandwidth_hz = get_number(c, "bandwidth_hz", ch.bandwidth_hz, "channel");
        ch.nlos_attenuation =
            get_number(c, "nlos_attenuation", ch.nlos_attenuation, "channel");
        ch.data_margin_bits =
            get_number(c, "data_margin_bits", ch.data_margin_bits, "channel");
    }
    cfg.channel.noise_psd_w_per_hz =
        dbm_per_hz_to_w_per_hz(cfg.channel.noise_dbm_per_hz);

    if (doc.contains("power")) {
        const json& p = doc["power"];
        reject_unknown_keys(p,
                            {"p0_w", "pi_w", "u_tip_mps", "v0_mps", "d0", "rho",
                             "solidity", "rotor_area_m2"},
                            "power");
        PowerParams& pw = cfg.power;
        pw.p0_w = get_number(p, "p0_w", pw.p0_w, "power");
        pw.pi_w = get_number(p, "pi_w", pw.pi_w, "power");
        pw.u_tip_mps = get_number(p, "u_tip_mps", pw.u_tip_mps, "power");
        pw.v0_mps = get_number(p, "v0_mps", pw.v0_mps, "power");
        pw.d0 = get_number(p, "d0", pw.d0, "power");
        pw.rho = get_number(p, "rho", pw.rho, "power");
        pw.solidity = get_number(p, "solidity", pw.solidity, "power");
        pw.rotor_area_m2 = get_number(p, "rotor_area_m2", pw.rotor_area_m2, "power");
    }

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) fail("seed", "expected an unsigned integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }

    validate_scenario(cfg);
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

void validate_scenario(const ScenarioConfig& cfg) {
    require(cfg.uav.altitude_m > 0, "uav.altitude_m", "must be > 0");
    require(cfg.uav.v_max_mps > 0, "uav.v_max_mps", "must be > 0");
    require(cfg.uav.seg_max_m > 0, "uav.seg_max_m", "must be > 0");
    require(cfg.uav.tx_power_w > 0, "uav.tx_power_w", "must be > 0");

    for (std::size_t w = 0; w < cfg.irss.size(); ++w) {
        const std::string where = "irss[" + std::to_string(w) + "]";
        const IrsSpec& irs = cfg.irss[w];
        require(irs.n_elements >= 1, where + ".n_elements", "must be >= 1");
        require(irs.height_m >= 0, where + ".height_m", "must be >= 0");
        require(irs.height_m < cfg.uav.altitude_m, where + ".height_m",
                "must be below the platform altitude");
        require(irs.los_a > 0, where + ".los_a", "must be > 0");
        require(irs.los_b > 0, where + ".los_b", "must be > 0");
        const double theta = effective_irs_elevation_deg(irs);
        require(theta >= 0 && theta <= 90, where + ".fixed_elevation_deg",
                "must lie in [0, 90]");
    }

    require(!cfg.ues.empty(), "ues", "at least one user is required");
    for (std::size_t k = 0; k < cfg.ues.size(); ++k) {
        const std::string where = "ues[" + std::to_string(k) + "]";
        const UeSpec& ue = cfg.ues[k];
        require(ue.data_bits >= 0, where + ".data_bits", "must be >= 0");
        require(ue.height_m >= 0, where + ".height_m", "must be >= 0");
        require(ue.height_m < cfg.uav.altitude_m, where + ".height_m",
                "must be below the platform altitude");
        require(ue.los_a > 0, where + ".los_a", "must be > 0");
        require(ue.los_b > 0, where + ".los_b", "must be > 0");
        const double theta = effective_ue_elevation_deg(ue);
        require(theta >= 0 && theta <= 90, where + ".fixed_elevation_deg",
                "must lie in [0, 90]");
    }

    const ChannelParams& ch = cfg.channel;
    require(ch.beta0 > 0, "channel.beta0", "must be > 0");
    require(ch.alpha_ua_ue > 0, "channel.alpha_ua_ue", "must be > 0");
    require(ch.alpha_ua_irs > 0, "channel.alpha_ua_irs", "must be > 0");
    require(ch.alpha_irs_ue > 0, "channel.alpha_irs_ue", "must be > 0");
    require(ch.kappa_ua_ue >= 0, "channel.kappa_ua_ue", "must be >= 0");
    require(ch.kappa_ua_irs >= 0, "channel.kappa_ua_irs", "must be >= 0");
    require(ch.kappa_irs_ue >= 0, "channel.kappa_irs_ue", "must be >= 0");
    require(ch.noise_psd_w_per_hz > 0, "channel.noise_dbm_per_hz",
            "must convert to a positive spectral density");
    require(ch.bandwidth_hz > 0, "channel.bandwidth_hz", "must be > 0");
    require(ch.nlos_attenuation >= 0 && ch.nlos_attenuation < 1,
            "channel.nlos_attenuation", "must lie in [0, 1)");
    require(ch.data_margin_bits >= 0, "channel.data_margin_bits", "must be >= 0");

    const PowerParams& pw = cfg.power;
    require(pw.p0_w > 0, "power.p0_w", "must be > 0");
    require(pw.pi_w > 0, "power.pi_w", "must be > 0");
    require(pw.u_tip_mps > 0, "power.u_tip_mps", "must be > 0");
    require(pw.v0_mps > 0, "power.v0_mps", "must be > 0");
    require(pw.d0 > 0, "power.d0", "must be > 0");
    require(pw.rho > 0, "power.rho", "must be > 0");
    require(pw.solidity > 0, "power.solidity", "must be > 0");
    require(pw.rotor_area_m2 > 0, "power.rotor_area_m2", "must be > 0");
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
    json doc;
    doc["uav"] = {{"altitude_m", cfg.uav.altitude_m},
                  {"start_xy_m", {cfg.uav.start_xy_m.x, cfg.uav.start_xy_m.y}},
                  {"finish_xy_m", {cfg.uav.finish_xy_m.x, cfg.uav.finish_xy_m.y}},
                  {"v_max_mps", cfg.uav.v_max_mps},
                  {"seg_max_m", cfg.uav.seg_max_m},
                  {"tx_power_w", cfg.uav.tx_power_w}};
    doc["irss"] = json::array();
    for (const IrsSpec& irs : cfg.irss) {
        json node = {{"xy_m", {irs.xy_m.x, irs.xy_m.y}},
                     {"height_m", irs.height_m},
                     {"n_elements", irs.n_elements},
                     {"los_a", irs.los_a},
                     {"los_b", irs.los_b}};
        if (irs.fixed_elevation_deg)
            node["fixed_elevation_deg"] = *irs.fixed_elevation_deg;
        doc["irss"].push_back(node);
    }
    doc["ues"] = json::array();
    for (const UeSpec& ue : cfg.ues) {
        json node = {{"xy_m", {ue.xy_m.x, ue.xy_m.y}},
                     {"height_m", ue.height_m},
                     {"data_bits", ue.data_bits},
                     {"los_a", ue.los_a},
                     {"los_b", ue.los_b}};
        if (ue.fixed_elevation_deg)
            node["fixed_elevation_deg"] = *ue.fixed_elevation_deg;
        doc["ues"].push_back(node);
    }
    doc["channel"] = {{"beta0", cfg.channel.beta0},
                      {"alpha_ua_ue", cfg.channel.alpha_ua_ue},
                      {"alpha_ua_irs", cfg.channel.alpha_ua_irs},
                      {"alpha_irs_ue", cfg.channel.alpha_irs_ue},
                      {"kappa_ua_ue", cfg.channel.kappa_ua_ue},
                      {"kappa_ua_irs", cfg.channel.kappa_ua_irs},
                      {"kappa_irs_ue", cfg.channel.kappa_irs_ue},
                      {"noise_dbm_per_hz", cfg.channel.noise_dbm_per_hz},
                      {"bandwidth_hz", cfg.channel.bandwidth_hz},
                      {"nlos_attenuation", cfg.channel.nlos_attenuation},
                      {"data_margin_bits", cfg.channel.data_margin_bits}};
    doc["power"] = {{"p0_w", cfg.power.p0_w},
                    {"pi_w", cfg.power.pi_w},
                    {"u_tip_mps", cfg.power.u_tip_mps},
                    {"v0_mps", cfg.power.v0_mps},
                    {"d0", cfg.power.d0},
                    {"rho", cfg.power.rho},
                    {"solidity", cfg.power.solidity},
                    {"rotor_area_m2", cfg.power.rotor_area_m2}};
    doc["seed"] = cfg.seed;
    return doc.dump(2) + "\n";
}

}  // namespace uavirs
