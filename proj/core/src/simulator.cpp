#include "wsnagg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <queue>

namespace wsnagg {

namespace {

enum Stream : std::uint64_t {
    kTopologyStream = 1,
    kAttackStream = 2,
    kPhaseStream = 3,
    kRadioStream = 4,
    kBehaviorStream = 5,
};

// SplitMix64 finalizer; used to derive counter-based sample streams.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t state) : state_(state) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_ - 0x9e3779b97f4a7c15ULL);
    }

private:
    std::uint64_t state_;
};

struct Event {
    SimTime time;
    std::uint64_t sequence;
    EventKind kind;
    NodeId node;
    NodeId peer;
    std::shared_ptr<const Message> msg;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.sequence > b.sequence;
    }
};

std::string describe(const Message& m) {
    std::string s = to_string(m.type());
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, EstimateBroadcast>) {
                s += " mean=" + format_number(body.est.scalar_mean()) +
                     " var=" + format_number(body.est.scalar_variance());
            } else if constexpr (std::is_same_v<T, ChallengeResponse>) {
                s += " suspect=" + std::to_string(body.suspect) +
                     " mean=" + format_number(body.est.scalar_mean());
            } else {
                s += " suspect=" + std::to_string(body.suspect);
            }
        },
        m.body);
    return s;
}

class Simulation {
public:
    Simulation(const ScenarioConfig& cfg, const RunOptions& opts) : cfg_(cfg), opts_(opts) {
        auto topo_rng = make_stream(cfg.rng_seed, kTopologyStream);
        topology_ = generate_topology(cfg, topo_rng);
        auto attack_rng = make_stream(cfg.rng_seed, kAttackStream);
        compromised_ = inject_compromise(cfg.attack, cfg.n_nodes, attack_rng);

        tx_cost_ = energy_nj(cfg.tx_power_w, cfg.msg_airtime_s);
        rx_cost_ = energy_nj(cfg.rx_power_w, cfg.msg_airtime_s);
        sense_cost_ = energy_nj(cfg.sense_power_w, cfg.sampling_period_s);
        const std::int64_t initial = energy_nj(cfg.initial_energy_j, 1.0);

        const std::size_t n = cfg.n_nodes;
        nodes_.reserve(n);
        for (NodeId i = 0; i < n; ++i) {
            nodes_.push_back(make_node_state(i, topology_.adjacency[i], topology_.two_hop(i), initial));
            radio_.push_back(make_stream(cfg.rng_seed, kRadioStream, i));
            behavior_.push_back(make_stream(cfg.rng_seed, kBehaviorStream, i));
        }
        debited_.assign(n, 0);
        inbox_.assign(n, 0);
        tx_busy_until_.assign(n, 0.0);
        sense_count_.assign(n, 0);
        first_reading_.assign(n, std::nullopt);
        sense_phase_.resize(n);
        for (NodeId i = 0; i < n; ++i) {
            auto phase_rng = make_stream(cfg.rng_seed, kPhaseStream, i);
            sense_phase_[i] =
                std::uniform_real_distribution<double>(0.0, cfg.sampling_period_s)(phase_rng);
        }
        attacker_protocol_ = cfg.protocol;
        attacker_protocol_.challenge_deviants = false;
        metrics_.seed = cfg.rng_seed;
        metrics_.security_enabled = cfg.protocol.security_enabled;
        metrics_.accuracy_tolerance = cfg.accuracy_tolerance;
    }

    RunResult execute() {
        for (NodeId i = 0; i < cfg_.n_nodes; ++i) push(sense_phase_[i], EventKind::sense, i);
        if (!compromised_.nodes.empty()) push(cfg_.attack.start_time_s, EventKind::attack_start, 0);
        for (int k = 1;; ++k) {
            const double t = k * cfg_.probe_interval_s;
            if (t > cfg_.sim_time_s + 1e-9) break;
            push(t, EventKind::probe, 0);
        }

        while (!queue_.empty()) {
            Event ev = queue_.top();
            if (ev.time > cfg_.sim_time_s) break;
            queue_.pop();
            dispatch(ev);
        }
        return finish();
    }

private:
    void push(SimTime t, EventKind kind, NodeId node, NodeId peer = 0,
              std::shared_ptr<const Message> msg = nullptr) {
        queue_.push(Event{t, next_seq_++, kind, node, peer, std::move(msg)});
    }

    void trace(const Event& ev, std::string detail) {
        if (!opts_.record_trace) return;
        result_trace_.records.push_back(
            TraceRecord{ev.time, ev.sequence, ev.kind, ev.node, ev.peer, std::move(detail)});
    }

    // Debits `cost`; a node that cannot pay in full is drained and dies.
    bool pay(NodeId id, std::int64_t cost) {
        NodeState& s = nodes_[id];
        if (!s.alive) return false;
        if (s.energy_nj < cost) {
            debited_[id] += s.energy_nj;
            s.energy_nj = 0;
            s.alive = false;
            return false;
        }
        s.energy_nj -= cost;
        debited_[id] += cost;
        if (s.energy_nj == 0) s.alive = false;
        return true;
    }

    void apply(NodeId id, Effects&& fx, SimTime now) {
        for (auto& m : fx.messages) {
            // Responses are broadcast and every challenger of the suspect
            // accepts them, so a queued one just takes the fresher estimate.
            std::pair<NodeId, NodeId> key{};
            if (const auto* resp = std::get_if<ChallengeResponse>(&m.body)) {
                key = {id, resp->suspect};
                if (auto it = queued_responses_.find(key); it != queued_responses_.end()) {
                    *it->second = std::move(m);
                    ++metrics_.responses_coalesced;
                    continue;
                }
            }
            std::uniform_real_distribution<double> jitter(0.0, cfg_.tx_jitter_s);
            const double start = std::max(now + jitter(radio_[id]), tx_busy_until_[id]);
            tx_busy_until_[id] = start + cfg_.msg_airtime_s;
            auto msg = std::make_shared<Message>(std::move(m));
            if (msg->type() == MessageType::challenge_response) queued_responses_.emplace(key, msg);
            push(start, EventKind::transmit, id, 0, std::move(msg));
        }
        for (const auto& timer : fx.timers) {
            push(timer.deadline, EventKind::challenge_deadline, id, timer.suspect);
        }
    }

    // Compromised nodes lie about data; only framers abuse the challenge path.
    const ProtocolConfig& protocol_for(NodeId id, SimTime now) const {
        if (compromised_.contains(id) && now >= cfg_.attack.start_time_s &&
            compromised_.mode != AttackMode::framer) {
            return attacker_protocol_;
        }
        return cfg_.protocol;
    }

    Gaussian1D reading_for(NodeId id, SimTime now) {
        const std::uint64_t k = sense_count_[id]++;
        const Gaussian1D honest =
            field_sample(cfg_.rng_seed, id, k, cfg_.field_mean, cfg_.field_std);
        if (!first_reading_[id]) first_reading_[id] = honest;
        if (!compromised_.contains(id) || now < cfg_.attack.start_time_s) return honest;
        switch (compromised_.mode) {
            case AttackMode::constant_offset:
                return Gaussian1D(cfg_.field_mean + cfg_.attack.offset_sigmas * cfg_.field_std,
                                  cfg_.field_std);
            case AttackMode::random_liar: {
                std::uniform_real_distribution<double> lie(cfg_.field_mean - 20.0 * cfg_.field_std,
                                                           cfg_.field_mean + 20.0 * cfg_.field_std);
                return Gaussian1D(lie(behavior_[id]), cfg_.field_std);
            }
            case AttackMode::stuck_value:
                return *first_reading_[id];
            case AttackMode::framer:
                return honest;
        }
        return honest;
    }

    void on_sense_event(const Event& ev) {
        const NodeId id = ev.node;
        if (!pay(id, sense_cost_)) return;
        const Gaussian1D reading = reading_for(id, ev.time);
        const bool honest = !compromised_.contains(id);
        if (honest) true_max_ = std::max(true_max_, reading.mean());
        trace(ev, "reading=" + format_number(reading.mean()));

        Effects fx = on_sense(nodes_[id], reading, protocol_for(id, ev.time), ev.time);
        if (!honest && compromised_.mode == AttackMode::framer && ev.time >= cfg_.attack.start_time_s) {
            frame_someone(id, ev.time, fx);
        }
        apply(id, std::move(fx), ev.time);

        const SimTime next = sense_phase_[id] + static_cast<double>(sense_count_[id]) * cfg_.sampling_period_s;
        if (nodes_[id].alive) push(next, EventKind::sense, id);
    }

    void frame_someone(NodeId id, SimTime now, Effects& fx) {
        std::vector<NodeId> targets;
        for (NodeId n : nodes_[id].one_hop) {
            if (!compromised_.contains(n)) targets.push_back(n);
        }
        if (targets.empty()) return;
        std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
        const NodeId victim = targets[pick(behavior_[id])];
        fx.messages.push_back(Message{id, now, IsolationAnnouncement{id, victim}});
    }

    void on_transmit_event(const Event& ev) {
        const NodeId id = ev.node;
        if (const auto* resp = std::get_if<ChallengeResponse>(&ev.msg->body)) {
            queued_responses_.erase({id, resp->suspect});
        }
        if (!pay(id, tx_cost_)) return;
        ++metrics_.packets_sent;
        ++metrics_.messages_by_type[static_cast<std::size_t>(ev.msg->type())];
        if (opts_.record_trace) trace(ev, describe(*ev.msg));

        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (NodeId r : topology_.adjacency[id]) {
            if (!nodes_[r].alive) continue;
            ++metrics_.intended_receptions;
            if (unit(radio_[id]) < cfg_.radio_loss_prob) {
                ++metrics_.dropped_loss;
                continue;
            }
            if (inbox_[r] >= cfg_.buffer_capacity) {
                ++metrics_.dropped_overflow;
                continue;
            }
            ++inbox_[r];
            max_inbox_ = std::max<std::uint64_t>(max_inbox_, inbox_[r]);
            push(ev.time + cfg_.msg_airtime_s, EventKind::deliver, r, id, ev.msg);
        }
    }

    void on_deliver_event(const Event& ev) {
        const NodeId r = ev.node;
        --inbox_[r];
        if (!pay(r, rx_cost_)) {
            ++metrics_.dropped_dead;
            return;
        }
        ++metrics_.packets_received;
        if (opts_.record_trace) trace(ev, describe(*ev.msg));
        apply(r, handle_message(nodes_[r], *ev.msg, protocol_for(r, ev.time), ev.time), ev.time);
    }

    void on_deadline_event(const Event& ev) {
        NodeState& s = nodes_[ev.node];
        auto it = s.pending.find(ev.peer);
        // A challenge reopened after this timer was set carries its own deadline.
        if (it == s.pending.end() || it->second.deadline != ev.time) return;
        Effects fx = resolve_challenge(s, ev.peer, cfg_.protocol, ev.time);
        trace(ev, fx.verdict ? to_string(*fx.verdict) : "none");
        apply(ev.node, std::move(fx), ev.time);
    }

    void on_probe_event(const Event& ev) {
        AccuracySample sample;
        sample.time_s = ev.time;
        sample.true_max = true_max_;
        std::size_t counted = 0;
        std::size_t within = 0;
        double sum = 0.0;
        for (const NodeState& s : nodes_) {
            if (!s.alive || compromised_.contains(s.id)) continue;
            ++counted;
            if (!s.global_est) continue;
            const double err = std::abs(s.global_est->mean() - true_max_);
            sum += err;
            sample.max_abs_error = std::max(sample.max_abs_error, err);
            if (err <= cfg_.accuracy_tolerance) ++within;
        }
        if (counted > 0) {
            sample.mean_abs_error = sum / static_cast<double>(counted);
            sample.fraction_within_tolerance = static_cast<double>(within) / static_cast<double>(counted);
        }
        if (metrics_.convergence_time_s < 0.0 && sample.fraction_within_tolerance >= 0.95) {
            metrics_.convergence_time_s = ev.time;
        }
        metrics_.accuracy_trace.push_back(sample);
        trace(ev, "within=" + format_number(sample.fraction_within_tolerance));
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case EventKind::sense: on_sense_event(ev); break;
            case EventKind::transmit: on_transmit_event(ev); break;
            case EventKind::deliver: on_deliver_event(ev); break;
            case EventKind::challenge_deadline: on_deadline_event(ev); break;
            case EventKind::attack_start: trace(ev, to_string(compromised_.mode)); break;
            case EventKind::probe: on_probe_event(ev); break;
        }
    }

    RunResult finish() {
        const std::int64_t initial = energy_nj(cfg_.initial_energy_j, 1.0);
        std::map<NodeId, std::set<NodeId>> blacklists;
        for (const NodeState& s : nodes_) blacklists.emplace(s.id, s.blacklist);

        metrics_.nodes.reserve(nodes_.size());
        for (const NodeState& s : nodes_) {
            NodeMetrics nm;
            nm.id = s.id;
            nm.x = topology_.positions[s.id].x;
            nm.y = topology_.positions[s.id].y;
            nm.energy_consumed_j = static_cast<double>(initial - s.energy_nj) * 1e-9;
            nm.energy_remaining_j = s.energy_j();
            nm.compromised = compromised_.contains(s.id);
            nm.alive = s.alive;
            for (const NodeState& other : nodes_) {
                if (!compromised_.contains(other.id) && other.blacklist.contains(s.id)) ++nm.flagged_by;
            }
            metrics_.nodes.push_back(nm);
            if (!s.alive) ++metrics_.dead_nodes;
            metrics_.estimate_receive_events += s.counters.estimates_received;
            metrics_.unknown_sender_drops += s.counters.unknown_sender_drops;
            metrics_.challenges_issued += s.counters.challenges_issued;
            metrics_.challenges_withdrawn += s.counters.challenges_withdrawn;
            metrics_.verdict_malicious += s.counters.verdict_malicious;
            metrics_.verdict_innocent += s.counters.verdict_innocent;
            metrics_.verdict_inconclusive += s.counters.verdict_inconclusive;
        }
        metrics_.delivery_ratio =
            metrics_.intended_receptions == 0
                ? 1.0
                : static_cast<double>(metrics_.packets_received) /
                      static_cast<double>(metrics_.intended_receptions);
        metrics_.components = topology_.components;
        metrics_.detection = detection_stats(blacklists, compromised_.nodes, cfg_.n_nodes);

        RunResult out;
        out.metrics = std::move(metrics_);
        out.trace = std::move(result_trace_);
        out.topology = std::move(topology_);
        out.compromised = std::move(compromised_);
        out.nodes = std::move(nodes_);
        out.debited_nj = std::move(debited_);
        out.max_inbox_occupancy = max_inbox_;
        return out;
    }

    const ScenarioConfig& cfg_;
    ProtocolConfig attacker_protocol_;
    const RunOptions& opts_;
    Topology topology_;
    CompromisedSet compromised_;
    std::vector<NodeState> nodes_;
    std::vector<std::mt19937_64> radio_;
    std::vector<std::mt19937_64> behavior_;
    std::vector<std::int64_t> debited_;
    std::vector<std::uint32_t> inbox_;
    std::vector<double> tx_busy_until_;
    std::vector<std::uint64_t> sense_count_;
    std::vector<std::optional<Gaussian1D>> first_reading_;
    std::map<std::pair<NodeId, NodeId>, std::shared_ptr<Message>> queued_responses_;
    std::vector<double> sense_phase_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::uint64_t next_seq_ = 0;
    std::int64_t tx_cost_ = 0;
    std::int64_t rx_cost_ = 0;
    std::int64_t sense_cost_ = 0;
    double true_max_ = -std::numeric_limits<double>::infinity();
    std::uint64_t max_inbox_ = 0;
    Metrics metrics_;
    EventTrace result_trace_;
};

}  // namespace

std::string to_string(AttackMode m) {
    switch (m) {
        case AttackMode::constant_offset: return "constant-offset";
        case AttackMode::random_liar: return "random-liar";
        case AttackMode::stuck_value: return "stuck-value";
        case AttackMode::framer: return "framer";
    }
    return "unknown";
}

std::optional<AttackMode> parse_attack_mode(const std::string& s) {
    for (auto m : {AttackMode::constant_offset, AttackMode::random_liar, AttackMode::stuck_value,
                   AttackMode::framer}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::sense: return "sense";
        case EventKind::transmit: return "transmit";
        case EventKind::deliver: return "deliver";
        case EventKind::challenge_deadline: return "challenge_deadline";
        case EventKind::attack_start: return "attack_start";
        case EventKind::probe: return "probe";
    }
    return "unknown";
}

void validate(const ScenarioConfig& c) {
    auto positive = [](const char* key, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be positive");
    };
    auto probability = [](const char* key, double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
    };
    if (c.n_nodes == 0) throw ConfigError("n_nodes", "must be positive");
    positive("sim_time_s", c.sim_time_s);
    positive("area_width_m", c.area_width_m);
    positive("area_height_m", c.area_height_m);
    positive("tx_range_m", c.tx_range_m);
    positive("initial_energy_j", c.initial_energy_j);
    positive("tx_power_w", c.tx_power_w);
    positive("rx_power_w", c.rx_power_w);
    positive("sense_power_w", c.sense_power_w);
    positive("sampling_period_s", c.sampling_period_s);
    if (c.buffer_capacity == 0) throw ConfigError("buffer_capacity", "must be positive");
    if (!std::isfinite(c.field_mean)) throw ConfigError("field_mean", "must be finite");
    positive("field_std", c.field_std);
    probability("radio_loss_prob", c.radio_loss_prob);
    positive("msg_airtime_s", c.msg_airtime_s);
    if (!(c.tx_jitter_s >= 0.0)) throw ConfigError("tx_jitter_s", "must be non-negative");
    positive("probe_interval_s", c.probe_interval_s);
    positive("accuracy_tolerance", c.accuracy_tolerance);

    const ProtocolConfig& p = c.protocol;
    positive(p.broadcast_mode == BroadcastMode::relative ? "send_change_fraction"
                                                         : "broadcast_threshold_abs",
             p.broadcast_threshold);
    positive("deviation_sigma", p.deviation_sigma);
    positive("sharp_fall_sigmas", p.sharp_fall_sigmas);
    positive("challenge_window_s", p.challenge_window_s);
    if (p.min_responders < 1) throw ConfigError("min_responders", "must be at least 1");

    probability("compromised_fraction", c.attack.compromised_fraction);
    positive("offset_sigmas", c.attack.offset_sigmas);
    if (!(c.attack.start_time_s >= 0.0)) throw ConfigError("attack_start_s", "must be non-negative");

    if (!c.pinned_positions.empty() && c.pinned_positions.size() != c.n_nodes) {
        throw ConfigError("n_nodes", "does not match the number of pinned positions");
    }
}

double Topology::mean_degree() const {
    if (adjacency.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& a : adjacency) total += a.size();
    return static_cast<double>(total) / static_cast<double>(adjacency.size());
}

std::map<NodeId, std::vector<NodeId>> Topology::two_hop(NodeId n) const {
    std::map<NodeId, std::vector<NodeId>> out;
    for (NodeId m : adjacency[n]) out.emplace(m, adjacency[m]);
    return out;
}

Topology topology_from_positions(std::vector<Position> positions, double range_m) {
    Topology t;
    t.positions = std::move(positions);
    const std::size_t n = t.positions.size();
    t.adjacency.assign(n, {});
    const double r2 = range_m * range_m;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            const double dx = t.positions[i].x - t.positions[j].x;
            const double dy = t.positions[i].y - t.positions[j].y;
            if (dx * dx + dy * dy <= r2) {
                t.adjacency[i].push_back(j);
                t.adjacency[j].push_back(i);
            }
        }
    }
    for (auto& a : t.adjacency) std::sort(a.begin(), a.end());

    std::vector<bool> seen(n, false);
    for (NodeId s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++t.components;
        std::vector<NodeId> stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v : t.adjacency[u]) {
                if (!seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
            }
        }
    }
    return t;
}

Topology generate_topology(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    if (!cfg.pinned_positions.empty()) {
        return topology_from_positions(cfg.pinned_positions, cfg.tx_range_m);
    }
    std::uniform_real_distribution<double> ux(0.0, cfg.area_width_m);
    std::uniform_real_distribution<double> uy(0.0, cfg.area_height_m);
    std::vector<Position> pos(cfg.n_nodes);
    for (auto& p : pos) {
        p.x = ux(rng);
        p.y = uy(rng);
    }
    return topology_from_positions(std::move(pos), cfg.tx_range_m);
}

CompromisedSet inject_compromise(const AttackConfig& cfg, std::uint32_t n_nodes,
                                 std::mt19937_64& rng) {
    CompromisedSet out;
    out.mode = cfg.mode;
    const auto count = static_cast<std::size_t>(
        std::floor(cfg.compromised_fraction * static_cast<double>(n_nodes) + 1e-9));
    std::vector<NodeId> all(n_nodes);
    std::iota(all.begin(), all.end(), NodeId{0});
    std::vector<NodeId> chosen;
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), count, rng);
    out.nodes.insert(chosen.begin(), chosen.end());
    return out;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t node) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(node),
                      static_cast<std::uint32_t>(node >> 32)};
    return std::mt19937_64(seq);
}

Gaussian1D field_sample(std::uint64_t seed, NodeId node, std::uint64_t sample_index,
                        double field_mean, double field_std) {
    const std::uint64_t key = mix64(mix64(mix64(seed) ^ node) ^ sample_index);
    SplitMix64 gen(key);
    std::normal_distribution<double> dist(field_mean, field_std);
    return Gaussian1D(dist(gen), field_std);
}

std::int64_t energy_nj(double power_w, double seconds) {
    return std::llround(power_w * seconds * 1e9);
}

void EventTrace::write(std::ostream& os) const {
    os << "# time_s\tseq\tkind\tnode\tpeer\tdetail\n";
    for (const auto& r : records) {
        os << format_number(r.time) << '\t' << r.sequence << '\t' << to_string(r.kind) << '\t'
           << r.node << '\t' << r.peer << '\t' << r.detail << '\n';
    }
}

RunResult run(const ScenarioConfig& cfg, const RunOptions& opts) {
    validate(cfg);
    Simulation sim(cfg, opts);
    return sim.execute();
}

}  // namespace wsnagg
