#include "wsnagg/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace wsnagg {

namespace {

bool contains_sorted(const std::vector<NodeId>& v, NodeId x) {
    return std::binary_search(v.begin(), v.end(), x);
}

Message make_message(const NodeState& state, SimTime now, Payload body) {
    return Message{state.id, now, std::move(body)};
}

// Emits the estimate and records that every live neighbor now holds it.
void broadcast_estimate(NodeState& state, const Gaussian1D& est, SimTime now, Effects& fx) {
    fx.messages.push_back(make_message(state, now, EstimateBroadcast{state.id, est.to_estimate()}));
    for (NodeId n : state.one_hop) {
        if (state.is_blacklisted(n)) continue;
        state.neighbor_table.insert_or_assign(n, est);
    }
}

void maybe_broadcast(NodeState& state, const ProtocolConfig& cfg, SimTime now, Effects& fx) {
    if (state.global_est && decide_broadcast(state, *state.global_est, cfg)) {
        broadcast_estimate(state, *state.global_est, now, fx);
    }
}

bool deviates(double mean, const Gaussian1D& reference, double sigmas) {
    return std::abs(mean - reference.mean()) > sigmas * reference.std();
}

}  // namespace

const char* to_string(MessageType t) {
    switch (t) {
        case MessageType::estimate: return "estimate";
        case MessageType::challenge_request: return "challenge_request";
        case MessageType::challenge_response: return "challenge_response";
        case MessageType::isolation: return "isolation";
    }
    return "unknown";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::malicious: return "malicious";
        case Verdict::innocent: return "innocent";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

bool NodeState::is_neighbor(NodeId n) const { return contains_sorted(one_hop, n); }

NodeState make_node_state(NodeId id, std::vector<NodeId> one_hop,
                          std::map<NodeId, std::vector<NodeId>> two_hop, std::int64_t energy_nj) {
    NodeState s;
    s.id = id;
    std::sort(one_hop.begin(), one_hop.end());
    s.one_hop = std::move(one_hop);
    for (auto& [n, nbrs] : two_hop) std::sort(nbrs.begin(), nbrs.end());
    s.two_hop = std::move(two_hop);
    s.energy_nj = energy_nj;
    s.alive = energy_nj > 0;
    return s;
}

bool decide_broadcast(const NodeState& state, const Gaussian1D& new_est, const ProtocolConfig& cfg) {
    for (NodeId n : state.one_hop) {
        if (state.is_blacklisted(n)) continue;
        auto it = state.neighbor_table.find(n);
        if (it == state.neighbor_table.end()) return true;
        const double known = it->second.mean();
        const double diff = std::abs(new_est.mean() - known);
        const double limit = cfg.broadcast_mode == BroadcastMode::relative
                                 ? cfg.broadcast_threshold * std::abs(known)
                                 : cfg.broadcast_threshold;
        if (diff > limit) return true;
    }
    return false;
}

namespace {

// Deviation screening and fusion for an estimate from a live neighbor.
// Returns false when the estimate was quarantined instead of fused.
bool absorb_estimate(NodeState& state, NodeId from, const Gaussian1D& received,
                     const ProtocolConfig& cfg, SimTime now, Effects& fx) {
    if (cfg.security_enabled && cfg.challenge_deviants &&
        deviates(received.mean(), *state.global_est, cfg.deviation_sigma)) {
        if (auto it = state.pending.find(from); it != state.pending.end()) {
            it->second.quarantined = received;
            return false;
        }
        const SimTime deadline = now + cfg.challenge_window_s;
        state.pending.emplace(from, Challenge{from, received, {}, deadline});
        ++state.counters.challenges_issued;
        fx.messages.push_back(make_message(state, now, ChallengeRequest{state.id, from}));
        fx.timers.push_back(ChallengeTimer{from, deadline});
        return false;
    }

    // A consistent estimate supersedes a quarantined one from the same sender.
    if (state.pending.erase(from) > 0) ++state.counters.challenges_withdrawn;

    state.global_est = Gaussian1D::from_estimate(ci_fuse_optimal(
        state.global_est->to_estimate(), received.to_estimate(), cfg.omega_criterion));
    state.neighbor_table.insert_or_assign(from, received);
    if (cfg.two_hop_suppression) {
        // Neighbors that are also neighbors of the sender heard the same broadcast.
        for (NodeId n : state.one_hop) {
            if (n == from || state.is_blacklisted(n)) continue;
            auto it = state.two_hop.find(n);
            if (it != state.two_hop.end() && contains_sorted(it->second, from)) {
                state.neighbor_table.insert_or_assign(n, received);
            }
        }
    }
    return true;
}

}  // namespace

Effects on_sense(NodeState& state, const Gaussian1D& reading, const ProtocolConfig& cfg,
                 SimTime now) {
    Effects fx;
    if (!state.alive) return fx;
    if (!state.global_est) {
        state.global_est = reading;
        state.prev_local = reading;
        // Everything heard so far is still unscreened.
        const auto early = state.neighbor_table;
        state.neighbor_table.clear();
        for (const auto& [from, est] : early) absorb_estimate(state, from, est, cfg, now, fx);
        broadcast_estimate(state, *state.global_est, now, fx);
        return fx;
    }
    state.global_est = fuse_local(reading, *state.global_est, state.prev_local, cfg.fusion());
    state.prev_local = reading;
    maybe_broadcast(state, cfg, now, fx);
    return fx;
}

Effects on_receive_estimate(NodeState& state, NodeId from, const Estimate& est,
                            const ProtocolConfig& cfg, SimTime now) {
    Effects fx;
    if (!state.alive) return fx;
    if (state.is_blacklisted(from)) {
        ++state.counters.blacklisted_drops;
        return fx;
    }
    if (!state.is_neighbor(from)) {
        ++state.counters.unknown_sender_drops;
        return fx;
    }
    ++state.counters.estimates_received;
    const Gaussian1D received = Gaussian1D::from_estimate(est);

    // Kept until the first reading gives something to compare against.
    if (!state.global_est) {
        state.neighbor_table.insert_or_assign(from, received);
        return fx;
    }
    if (absorb_estimate(state, from, received, cfg, now, fx)) maybe_broadcast(state, cfg, now, fx);
    return fx;
}

Effects on_challenge_request(NodeState& state, NodeId challenger, NodeId suspect,
                             const ProtocolConfig& cfg, SimTime now) {
    Effects fx;
    if (!cfg.security_enabled || !state.alive || !state.global_est) return fx;
    if (state.is_blacklisted(challenger) || suspect == state.id || challenger == state.id) return fx;
    fx.messages.push_back(make_message(
        state, now, ChallengeResponse{state.id, suspect, state.global_est->to_estimate()}));
    return fx;
}

void on_challenge_response(NodeState& state, NodeId responder, NodeId suspect, const Estimate& est,
                           const ProtocolConfig& cfg) {
    if (!cfg.security_enabled || !state.alive) return;
    auto it = state.pending.find(suspect);
    if (it == state.pending.end()) return;
    if (responder == suspect || responder == state.id) return;
    if (!state.is_neighbor(responder) || state.is_blacklisted(responder)) return;
    it->second.responses.insert_or_assign(responder, Gaussian1D::from_estimate(est));
}

Effects resolve_challenge(NodeState& state, NodeId suspect, const ProtocolConfig& cfg,
                          SimTime now) {
    Effects fx;
    auto it = state.pending.find(suspect);
    if (it == state.pending.end()) return fx;
    Challenge challenge = std::move(it->second);
    state.pending.erase(it);
    if (!state.alive) return fx;

    const int responders = static_cast<int>(challenge.responses.size());
    if (responders < cfg.min_responders) {
        ++state.counters.verdict_inconclusive;
        fx.verdict = Verdict::inconclusive;
        return fx;
    }

    int deviating = 0;
    for (const auto& [responder, resp] : challenge.responses) {
        if (deviates(challenge.quarantined.mean(), resp, cfg.deviation_sigma)) ++deviating;
    }

    if (2 * deviating > responders) {
        ++state.counters.verdict_malicious;
        fx.verdict = Verdict::malicious;
        state.blacklist.insert(suspect);
        state.neighbor_table.erase(suspect);
        fx.messages.push_back(make_message(state, now, IsolationAnnouncement{state.id, suspect}));
        return fx;
    }

    ++state.counters.verdict_innocent;
    fx.verdict = Verdict::innocent;
    if (state.global_est) {
        state.global_est = Gaussian1D::from_estimate(
            ci_fuse_optimal(state.global_est->to_estimate(), challenge.quarantined.to_estimate(),
                            cfg.omega_criterion));
    } else {
        state.global_est = challenge.quarantined;
    }
    state.neighbor_table.insert_or_assign(suspect, challenge.quarantined);
    maybe_broadcast(state, cfg, now, fx);
    return fx;
}

void on_isolation(NodeState& state, NodeId announcer, NodeId suspect, const ProtocolConfig& cfg) {
    if (!cfg.security_enabled || !state.alive) return;
    if (state.is_blacklisted(announcer) || suspect == state.id) return;
    state.blacklist.insert(suspect);
    state.neighbor_table.erase(suspect);
    state.pending.erase(suspect);
}

Effects handle_message(NodeState& state, const Message& msg, const ProtocolConfig& cfg,
                       SimTime now) {
    return std::visit(
        [&](const auto& body) -> Effects {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, EstimateBroadcast>) {
                return on_receive_estimate(state, msg.sender, body.est, cfg, now);
            } else if constexpr (std::is_same_v<T, ChallengeRequest>) {
                return on_challenge_request(state, body.challenger, body.suspect, cfg, now);
            } else if constexpr (std::is_same_v<T, ChallengeResponse>) {
                on_challenge_response(state, body.responder, body.suspect, body.est, cfg);
                return {};
            } else {
                on_isolation(state, body.announcer, body.suspect, cfg);
                return {};
            }
        },
        msg.body);
}

}  // namespace wsnagg
