#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "wsnagg/estimate.hpp"
#include "wsnagg/local_fusion.hpp"

namespace wsnagg {

using NodeId = std::uint32_t;
using SimTime = double;

enum class BroadcastMode { absolute, relative };

struct ProtocolConfig {
    BroadcastMode broadcast_mode = BroadcastMode::relative;
    // Absolute mean difference, or a fraction of the neighbor's mean in
    // relative mode.
    double broadcast_threshold = 0.02;
    double deviation_sigma = 3.0;
    // Off by default: in an i.i.d. field it makes every max holder drop back
    // to its own reading, which neighbors then challenge.
    bool sharp_fall = false;
    double sharp_fall_sigmas = 3.0;
    double challenge_window_s = 0.5;
    int min_responders = 2;
    bool security_enabled = true;
    // Off for compromised nodes: they still vote, but never raise challenges.
    bool challenge_deviants = true;
    bool two_hop_suppression = true;
    bool hard_truncate = false;
    // The mixture decays a held maximum toward the field mean at every sense.
    LocalFusionRule local_fusion = LocalFusionRule::replace;
    OmegaCriterion omega_criterion = OmegaCriterion::trace;

    FusionConfig fusion() const { return FusionConfig{sharp_fall, sharp_fall_sigmas, hard_truncate, local_fusion}; }
};

struct EstimateBroadcast {
    NodeId origin;
    Estimate est;
};

struct ChallengeRequest {
    NodeId challenger;
    NodeId suspect;
};

struct ChallengeResponse {
    NodeId responder;
    NodeId suspect;
    Estimate est;
};

struct IsolationAnnouncement {
    NodeId announcer;
    NodeId suspect;
};

using Payload =
    std::variant<EstimateBroadcast, ChallengeRequest, ChallengeResponse, IsolationAnnouncement>;

enum class MessageType : std::uint8_t { estimate = 0, challenge_request, challenge_response, isolation };
inline constexpr std::size_t kMessageTypeCount = 4;

struct Message {
    NodeId sender;
    SimTime timestamp;
    Payload body;

    MessageType type() const { return static_cast<MessageType>(body.index()); }
};

const char* to_string(MessageType t);

struct Challenge {
    NodeId suspect;
    Gaussian1D quarantined;
    std::map<NodeId, Gaussian1D> responses;
    SimTime deadline;
};

enum class Verdict { malicious, innocent, inconclusive };

const char* to_string(Verdict v);

struct NodeCounters {
    std::uint64_t estimates_received = 0;
    std::uint64_t unknown_sender_drops = 0;
    std::uint64_t blacklisted_drops = 0;
    std::uint64_t challenges_issued = 0;
    std::uint64_t challenges_withdrawn = 0;
    std::uint64_t verdict_malicious = 0;
    std::uint64_t verdict_innocent = 0;
    std::uint64_t verdict_inconclusive = 0;
};

struct NodeState {
    NodeId id = 0;
    std::optional<Gaussian1D> global_est;
    std::optional<Gaussian1D> prev_local;
    std::map<NodeId, Gaussian1D> neighbor_table;
    std::vector<NodeId> one_hop;  // sorted
    std::map<NodeId, std::vector<NodeId>> two_hop;  // neighbor -> its sorted neighbors
    std::set<NodeId> blacklist;
    std::map<NodeId, Challenge> pending;
    std::int64_t energy_nj = 0;
    bool alive = true;
    NodeCounters counters;

    double energy_j() const { return static_cast<double>(energy_nj) * 1e-9; }
    bool is_neighbor(NodeId n) const;
    bool is_blacklisted(NodeId n) const { return blacklist.contains(n); }
};

// A challenge that must be resolved at `deadline`.
struct ChallengeTimer {
    NodeId suspect;
    SimTime deadline;
};

struct Effects {
    std::vector<Message> messages;
    std::vector<ChallengeTimer> timers;
    std::optional<Verdict> verdict;
};

// Sets up one-hop and two-hop knowledge for a node.
NodeState make_node_state(NodeId id, std::vector<NodeId> one_hop,
                          std::map<NodeId, std::vector<NodeId>> two_hop, std::int64_t energy_nj);

bool decide_broadcast(const NodeState& state, const Gaussian1D& new_est, const ProtocolConfig& cfg);

Effects on_sense(NodeState& state, const Gaussian1D& reading, const ProtocolConfig& cfg,
                 SimTime now);

Effects on_receive_estimate(NodeState& state, NodeId from, const Estimate& est,
                            const ProtocolConfig& cfg, SimTime now);

Effects on_challenge_request(NodeState& state, NodeId challenger, NodeId suspect,
                             const ProtocolConfig& cfg, SimTime now);

// Records a response when this node has a pending challenge for `suspect`.
void on_challenge_response(NodeState& state, NodeId responder, NodeId suspect, const Estimate& est,
                           const ProtocolConfig& cfg);

Effects resolve_challenge(NodeState& state, NodeId suspect, const ProtocolConfig& cfg,
                          SimTime now);

void on_isolation(NodeState& state, NodeId announcer, NodeId suspect, const ProtocolConfig& cfg);

// Dispatches any message to the handler above.
Effects handle_message(NodeState& state, const Message& msg, const ProtocolConfig& cfg,
                       SimTime now);

}  // namespace wsnagg
