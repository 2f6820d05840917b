#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsnagg/metrics.hpp"
#include "wsnagg/protocol.hpp"

namespace wsnagg {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class AttackMode { constant_offset, random_liar, stuck_value, framer };

std::string to_string(AttackMode m);
std::optional<AttackMode> parse_attack_mode(const std::string& s);

struct AttackConfig {
    double compromised_fraction = 0.0;
    AttackMode mode = AttackMode::constant_offset;
    double offset_sigmas = 10.0;
    double start_time_s = 0.0;
};

struct Position {
    double x = 0.0;
    double y = 0.0;
};

struct ScenarioConfig {
    std::uint32_t n_nodes = 160;
    double sim_time_s = 200.0;
    double area_width_m = 120.0;
    double area_height_m = 120.0;
    double tx_range_m = 15.0;
    double initial_energy_j = 5.0;
    double tx_power_w = 0.75;
    double rx_power_w = 0.25;
    double sense_power_w = 0.010;
    double sampling_period_s = 0.5;
    std::uint32_t buffer_capacity = 5;
    double field_mean = 25.0;
    double field_std = 1.0;
    double radio_loss_prob = 0.0;
    double msg_airtime_s = 0.002;
    // Random backoff before each transmission, uniform in [0, tx_jitter_s];
    // stands in for MAC contention, which otherwise is not modeled.
    double tx_jitter_s = 0.05;
    double probe_interval_s = 1.0;
    double accuracy_tolerance = 1.0;
    std::uint64_t rng_seed = 1;
    ProtocolConfig protocol;
    AttackConfig attack;
    // Test hook: fixed positions instead of uniform placement.
    std::vector<Position> pinned_positions;

    // Relative broadcast threshold, kept in the protocol config.
    double send_change_fraction() const { return protocol.broadcast_threshold; }
};

// Throws ConfigError naming the offending key.
void validate(const ScenarioConfig& cfg);

struct Topology {
    std::vector<Position> positions;
    std::vector<std::vector<NodeId>> adjacency;  // sorted, symmetric, irreflexive
    std::size_t components = 0;

    std::size_t size() const { return positions.size(); }
    double mean_degree() const;
    bool connected() const { return components <= 1; }
    // neighbor -> that neighbor's one-hop set, for every neighbor of n.
    std::map<NodeId, std::vector<NodeId>> two_hop(NodeId n) const;
};

Topology generate_topology(const ScenarioConfig& cfg, std::mt19937_64& rng);
Topology topology_from_positions(std::vector<Position> positions, double range_m);

struct CompromisedSet {
    std::set<NodeId> nodes;
    AttackMode mode = AttackMode::constant_offset;

    bool contains(NodeId n) const { return nodes.contains(n); }
};

CompromisedSet inject_compromise(const AttackConfig& cfg, std::uint32_t n_nodes,
                                 std::mt19937_64& rng);

// Counter-based draw: the same (seed, node, index) always gives the same reading.
Gaussian1D field_sample(std::uint64_t seed, NodeId node, std::uint64_t sample_index,
                        double field_mean, double field_std);

// Deterministic per-purpose generator seeded from (seed, stream, node).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t node = 0);

enum class EventKind : std::uint8_t {
    sense,
    transmit,
    deliver,
    challenge_deadline,
    attack_start,
    probe,
};

const char* to_string(EventKind k);

struct TraceRecord {
    SimTime time;
    std::uint64_t sequence;
    EventKind kind;
    NodeId node;
    NodeId peer;  // sender for deliveries, suspect for deadlines
    std::string detail;
};

struct EventTrace {
    std::vector<TraceRecord> records;

    void write(std::ostream& os) const;
};

struct RunOptions {
    bool record_trace = false;
};

struct RunResult {
    Metrics metrics;
    EventTrace trace;
    Topology topology;
    CompromisedSet compromised;
    std::vector<NodeState> nodes;
    // Energy debits per node, summed independently of the battery counter.
    std::vector<std::int64_t> debited_nj;
    std::uint64_t max_inbox_occupancy = 0;
};

RunResult run(const ScenarioConfig& cfg, const RunOptions& opts = {});

// Energy of one action in integer nanojoules.
std::int64_t energy_nj(double power_w, double seconds);

}  // namespace wsnagg
