#include "wsnagg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace wsnagg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct BadValue {};

double to_double(const std::string& v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw BadValue{};
    return out;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw BadValue{};
    return out;
}

std::uint32_t to_u32(const std::string& v) {
    const auto x = to_u64(v);
    if (x > 0xffffffffULL) throw BadValue{};
    return static_cast<std::uint32_t>(x);
}

bool to_bool(const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw BadValue{};
}

std::string exact(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"n_nodes", [](auto& c, auto& v) { c.n_nodes = to_u32(v); }},
        {"sim_time_s", [](auto& c, auto& v) { c.sim_time_s = to_double(v); }},
        {"area_m", [](auto& c, auto& v) { c.area_width_m = c.area_height_m = to_double(v); }},
        {"area_width_m", [](auto& c, auto& v) { c.area_width_m = to_double(v); }},
        {"area_height_m", [](auto& c, auto& v) { c.area_height_m = to_double(v); }},
        {"tx_range_m", [](auto& c, auto& v) { c.tx_range_m = to_double(v); }},
        {"initial_energy_j", [](auto& c, auto& v) { c.initial_energy_j = to_double(v); }},
        {"tx_power_w", [](auto& c, auto& v) { c.tx_power_w = to_double(v); }},
        {"rx_power_w", [](auto& c, auto& v) { c.rx_power_w = to_double(v); }},
        {"sense_power_w", [](auto& c, auto& v) { c.sense_power_w = to_double(v); }},
        {"sampling_period_s", [](auto& c, auto& v) { c.sampling_period_s = to_double(v); }},
        {"buffer_capacity", [](auto& c, auto& v) { c.buffer_capacity = to_u32(v); }},
        {"field_mean", [](auto& c, auto& v) { c.field_mean = to_double(v); }},
        {"field_std", [](auto& c, auto& v) { c.field_std = to_double(v); }},
        {"send_change_fraction",
         [](auto& c, auto& v) {
             c.protocol.broadcast_mode = BroadcastMode::relative;
             c.protocol.broadcast_threshold = to_double(v);
         }},
        {"broadcast_threshold_abs",
         [](auto& c, auto& v) {
             c.protocol.broadcast_mode = BroadcastMode::absolute;
             c.protocol.broadcast_threshold = to_double(v);
         }},
        {"radio_loss_prob", [](auto& c, auto& v) { c.radio_loss_prob = to_double(v); }},
        {"msg_airtime_s", [](auto& c, auto& v) { c.msg_airtime_s = to_double(v); }},
        {"tx_jitter_s", [](auto& c, auto& v) { c.tx_jitter_s = to_double(v); }},
        {"probe_interval_s", [](auto& c, auto& v) { c.probe_interval_s = to_double(v); }},
        {"accuracy_tolerance", [](auto& c, auto& v) { c.accuracy_tolerance = to_double(v); }},
        {"rng_seed", [](auto& c, auto& v) { c.rng_seed = to_u64(v); }},
        {"security", [](auto& c, auto& v) { c.protocol.security_enabled = to_bool(v); }},
        {"two_hop_suppression", [](auto& c, auto& v) { c.protocol.two_hop_suppression = to_bool(v); }},
        {"hard_truncate", [](auto& c, auto& v) { c.protocol.hard_truncate = to_bool(v); }},
        {"local_fusion",
         [](auto& c, auto& v) {
             if (v == "mixture") {
                 c.protocol.local_fusion = LocalFusionRule::mixture;
             } else if (v == "replace") {
                 c.protocol.local_fusion = LocalFusionRule::replace;
             } else {
                 throw BadValue{};
             }
         }},
        {"omega_criterion",
         [](auto& c, auto& v) {
             if (v == "trace") {
                 c.protocol.omega_criterion = OmegaCriterion::trace;
             } else if (v == "determinant") {
                 c.protocol.omega_criterion = OmegaCriterion::determinant;
             } else {
                 throw BadValue{};
             }
         }},
        {"deviation_sigma", [](auto& c, auto& v) { c.protocol.deviation_sigma = to_double(v); }},
        {"sharp_fall", [](auto& c, auto& v) { c.protocol.sharp_fall = to_bool(v); }},
        {"sharp_fall_sigmas", [](auto& c, auto& v) { c.protocol.sharp_fall_sigmas = to_double(v); }},
        {"challenge_window_s", [](auto& c, auto& v) { c.protocol.challenge_window_s = to_double(v); }},
        {"min_responders",
         [](auto& c, auto& v) { c.protocol.min_responders = static_cast<int>(to_u32(v)); }},
        {"compromised_fraction", [](auto& c, auto& v) { c.attack.compromised_fraction = to_double(v); }},
        {"attack_mode",
         [](auto& c, auto& v) {
             auto m = parse_attack_mode(v);
             if (!m) throw BadValue{};
             c.attack.mode = *m;
         }},
        {"offset_sigmas", [](auto& c, auto& v) { c.attack.offset_sigmas = to_double(v); }},
        {"attack_start_s", [](auto& c, auto& v) { c.attack.start_time_s = to_double(v); }},
    };
    return table;
}

}  // namespace

bool apply_config_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) return false;
    try {
        it->second(cfg, value);
    } catch (const BadValue&) {
        throw ConfigError(key, "invalid value '" + value + "'");
    }
    return true;
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
    ScenarioConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty()) continue;
        const auto where = origin + ":" + std::to_string(lineno);
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            if (!apply_config_key(cfg, key, value)) throw ConfigError(where, "unknown key '" + key + "'");
        } catch (const ConfigError& e) {
            if (e.key() == key) throw ConfigError(key, where + ": invalid value '" + value + "'");
            throw;
        }
    }
    validate(cfg);
    return cfg;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

std::string format_config(const ScenarioConfig& c) {
    std::ostringstream os;
    const ProtocolConfig& p = c.protocol;
    os << "n_nodes = " << c.n_nodes << '\n'
       << "sim_time_s = " << exact(c.sim_time_s) << '\n'
       << "area_width_m = " << exact(c.area_width_m) << '\n'
       << "area_height_m = " << exact(c.area_height_m) << '\n'
       << "tx_range_m = " << exact(c.tx_range_m) << '\n'
       << "initial_energy_j = " << exact(c.initial_energy_j) << '\n'
       << "tx_power_w = " << exact(c.tx_power_w) << '\n'
       << "rx_power_w = " << exact(c.rx_power_w) << '\n'
       << "sense_power_w = " << exact(c.sense_power_w) << '\n'
       << "sampling_period_s = " << exact(c.sampling_period_s) << '\n'
       << "buffer_capacity = " << c.buffer_capacity << '\n'
       << "field_mean = " << exact(c.field_mean) << '\n'
       << "field_std = " << exact(c.field_std) << '\n'
       << (p.broadcast_mode == BroadcastMode::relative ? "send_change_fraction = "
                                                       : "broadcast_threshold_abs = ")
       << exact(p.broadcast_threshold) << '\n'
       << "radio_loss_prob = " << exact(c.radio_loss_prob) << '\n'
       << "msg_airtime_s = " << exact(c.msg_airtime_s) << '\n'
       << "tx_jitter_s = " << exact(c.tx_jitter_s) << '\n'
       << "probe_interval_s = " << exact(c.probe_interval_s) << '\n'
       << "accuracy_tolerance = " << exact(c.accuracy_tolerance) << '\n'
       << "rng_seed = " << c.rng_seed << '\n'
       << "security = " << (p.security_enabled ? "on" : "off") << '\n'
       << "two_hop_suppression = " << (p.two_hop_suppression ? "on" : "off") << '\n'
       << "hard_truncate = " << (p.hard_truncate ? "on" : "off") << '\n'
       << "local_fusion = " << to_string(p.local_fusion) << '\n'
       << "omega_criterion = " << to_string(p.omega_criterion) << '\n'
       << "deviation_sigma = " << exact(p.deviation_sigma) << '\n'
       << "sharp_fall = " << (p.sharp_fall ? "on" : "off") << '\n'
       << "sharp_fall_sigmas = " << exact(p.sharp_fall_sigmas) << '\n'
       << "challenge_window_s = " << exact(p.challenge_window_s) << '\n'
       << "min_responders = " << p.min_responders << '\n'
       << "compromised_fraction = " << exact(c.attack.compromised_fraction) << '\n'
       << "attack_mode = " << to_string(c.attack.mode) << '\n'
       << "offset_sigmas = " << exact(c.attack.offset_sigmas) << '\n'
       << "attack_start_s = " << exact(c.attack.start_time_s) << '\n';
    return os.str();
}

}  // namespace wsnagg
