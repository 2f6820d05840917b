#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "wsnagg/simulator.hpp"

using namespace wsnagg;

namespace {

ScenarioConfig small(std::uint64_t seed = 1) {
    ScenarioConfig c;
    c.n_nodes = 40;
    c.area_width_m = c.area_height_m = 60.0;
    c.sim_time_s = 20.0;
    c.rng_seed = seed;
    return c;
}

std::string trace_text(const RunResult& r) {
    std::ostringstream os;
    r.trace.write(os);
    return os.str();
}

}  // namespace

TEST(Topology, PinnedSquareIsComplete) {
    const auto t = topology_from_positions({{0, 0}, {10, 0}, {0, 10}, {10, 10}}, 15.0);
    for (NodeId i = 0; i < 4; ++i) EXPECT_EQ(t.adjacency[i].size(), 3u);
    EXPECT_TRUE(t.connected());
}

TEST(Topology, TooFarApart) {
    const auto t = topology_from_positions({{0, 0}, {20, 0}}, 15.0);
    EXPECT_TRUE(t.adjacency[0].empty());
    EXPECT_TRUE(t.adjacency[1].empty());
    EXPECT_EQ(t.components, 2u);
}

TEST(Topology, SymmetricIrreflexiveTwoHop) {
    ScenarioConfig c;
    auto rng = make_stream(5, 1);
    const auto t = generate_topology(c, rng);
    ASSERT_EQ(t.size(), 160u);
    for (NodeId i = 0; i < t.size(); ++i) {
        for (NodeId j : t.adjacency[i]) {
            EXPECT_NE(i, j);
            EXPECT_TRUE(std::binary_search(t.adjacency[j].begin(), t.adjacency[j].end(), i));
        }
        const auto two = t.two_hop(i);
        for (NodeId m : t.adjacency[i]) EXPECT_EQ(two.at(m), t.adjacency[m]);
    }
}

TEST(Topology, MeanDegreeNearPoissonDisc) {
    const ScenarioConfig c;
    const double expected = 160 * M_PI * 225 / 14400.0;  // ~7.85, ignores the border
    double sum = 0;
    for (std::uint64_t s = 1; s <= 30; ++s) {
        auto rng = make_stream(s, 1);
        const auto t = generate_topology(c, rng);
        for (const auto& p : t.positions) {
            EXPECT_GE(p.x, 0.0);
            EXPECT_LE(p.x, 120.0);
            EXPECT_GE(p.y, 0.0);
            EXPECT_LE(p.y, 120.0);
        }
        sum += t.mean_degree();
    }
    EXPECT_NEAR(sum / 30, expected, 2.0);
}

TEST(Energy, OneTransmission) {
    EXPECT_EQ(energy_nj(0.75, 0.002), 1'500'000);
    EXPECT_EQ(energy_nj(0.25, 0.002), 500'000);
    EXPECT_EQ(energy_nj(0.010, 0.5), 5'000'000);

    // Two isolated nodes: each one's first reading is a broadcast nobody hears.
    ScenarioConfig c;
    c.n_nodes = 2;
    c.pinned_positions = {{0, 0}, {100, 100}};
    c.sim_time_s = 0.6;
    c.sampling_period_s = 0.5;
    c.protocol.security_enabled = false;
    const auto r = run(c);
    EXPECT_EQ(r.metrics.packets_sent, 2u);
    EXPECT_EQ(r.metrics.intended_receptions, 0u);
    for (NodeId i = 0; i < 2; ++i) {
        const std::int64_t senses = r.debited_nj[i] >= 10'000'000 + 1'500'000 ? 2 : 1;
        EXPECT_EQ(r.debited_nj[i], senses * 5'000'000 + 1'500'000);
    }
}

TEST(Run, TotalLossDeliversNothing) {
    auto c = small();
    c.radio_loss_prob = 1.0;
    const auto r = run(c);
    EXPECT_GT(r.metrics.packets_sent, 0u);
    EXPECT_EQ(r.metrics.packets_received, 0u);
    EXPECT_EQ(r.metrics.challenges_issued, 0u);
    EXPECT_EQ(r.metrics.delivery_ratio, 0.0);
}

TEST(Run, DeterministicTraceAndMetrics) {
    auto c = small(7);
    c.attack.compromised_fraction = 0.2;
    c.radio_loss_prob = 0.1;
    const auto a = run(c, {true});
    const auto b = run(c, {true});
    EXPECT_FALSE(a.trace.records.empty());
    EXPECT_EQ(trace_text(a), trace_text(b));
    EXPECT_EQ(scalar_fields(a.metrics), scalar_fields(b.metrics));

    c.rng_seed = 8;
    EXPECT_NE(trace_text(run(c, {true})), trace_text(a));
}

TEST(Run, EnergyConservation) {
    auto c = small(3);
    c.attack.compromised_fraction = 0.2;
    c.initial_energy_j = 0.12;  // some nodes run dry
    const auto r = run(c);
    const std::int64_t initial = energy_nj(c.initial_energy_j, 1.0);
    bool someone_died = false;
    for (const auto& s : r.nodes) {
        EXPECT_EQ(initial - s.energy_nj, r.debited_nj[s.id]);
        EXPECT_GE(s.energy_nj, 0);
        someone_died |= !s.alive;
    }
    EXPECT_TRUE(someone_died);
    for (const auto& s : r.nodes) {
        if (!s.alive) EXPECT_EQ(s.energy_nj, 0);
    }
}

TEST(Run, EnergyIsSumOfActions) {
    auto c = small(4);
    c.attack.compromised_fraction = 0.1;
    const auto r = run(c, {true});
    std::int64_t senses = 0;
    for (const auto& rec : r.trace.records) senses += rec.kind == EventKind::sense;
    std::int64_t total = 0;
    for (auto d : r.debited_nj) total += d;
    ASSERT_EQ(r.metrics.dead_nodes, 0u);
    EXPECT_EQ(total, static_cast<std::int64_t>(r.metrics.packets_sent) * 1'500'000 +
                         static_cast<std::int64_t>(r.metrics.packets_received) * 500'000 +
                         senses * 5'000'000);
}

TEST(Run, Causality) {
    auto c = small(5);
    c.attack.compromised_fraction = 0.2;
    const auto r = run(c, {true});
    double last = 0.0;
    std::set<std::tuple<NodeId, std::string, double>> sent;
    for (const auto& rec : r.trace.records) {
        EXPECT_GE(rec.time, last);
        last = rec.time;
        EXPECT_LE(rec.time, c.sim_time_s);
        if (rec.kind == EventKind::transmit) sent.insert({rec.node, rec.detail, rec.time});
        if (rec.kind == EventKind::deliver) {
            // The same content may be sent again while this copy is in flight.
            auto it = sent.lower_bound({rec.peer, rec.detail, rec.time - c.msg_airtime_s - 1e-12});
            ASSERT_NE(it, sent.end()) << rec.detail;
            EXPECT_EQ(std::get<0>(*it), rec.peer);
            EXPECT_EQ(std::get<1>(*it), rec.detail);
            EXPECT_NEAR(rec.time - std::get<2>(*it), c.msg_airtime_s, 1e-12);
        }
    }
}

TEST(Run, BufferCapacity) {
    auto c = small(6);
    c.n_nodes = 30;
    c.area_width_m = c.area_height_m = 12.0;  // everyone hears everyone
    c.buffer_capacity = 2;
    c.tx_jitter_s = 0.0;
    c.attack.compromised_fraction = 0.2;
    const auto r = run(c);
    EXPECT_LE(r.max_inbox_occupancy, 2u);
    EXPECT_GT(r.metrics.dropped_overflow, 0u);
    EXPECT_EQ(r.metrics.intended_receptions,
              r.metrics.packets_received + r.metrics.dropped_overflow + r.metrics.dropped_loss +
                  r.metrics.dropped_dead);
}

TEST(Run, PerfectChannelDeliversEverything) {
    auto c = small(9);
    c.buffer_capacity = 1000;
    const auto r = run(c);
    EXPECT_EQ(r.metrics.dropped_overflow, 0u);
    EXPECT_EQ(r.metrics.delivery_ratio, 1.0);
}

TEST(Run, HonestEstimatesStayInRange) {
    // No attack, no loss: nobody ends below mu - 3 sigma or above the largest reading.
    for (std::uint64_t seed : {1, 2, 3}) {
        ScenarioConfig c;
        c.rng_seed = seed;
        c.sim_time_s = 60;
        const auto r = run(c);
        const double max_seen = r.metrics.accuracy_trace.back().true_max;
        for (const auto& s : r.nodes) {
            ASSERT_TRUE(s.global_est.has_value());
            EXPECT_GE(s.global_est->mean(), c.field_mean - 3 * c.field_std);
            EXPECT_LE(s.global_est->mean(), max_seen);
        }
    }
}

TEST(Run, HonestFieldChallengeRate) {
    // Stated bound: with no attackers, challenges stay under 1 % of estimate
    // receptions. Bootstrap meetings between a low first reading and the
    // network maximum break it for most seeds; see the notes in the README.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ScenarioConfig c;
        c.rng_seed = seed;
        const auto r = run(c);
        EXPECT_LE(static_cast<double>(r.metrics.challenges_issued),
                  0.01 * static_cast<double>(r.metrics.estimate_receive_events))
            << "seed " << seed;
    }
}

TEST(Compromise, Counts) {
    auto rng = make_stream(1, 2);
    AttackConfig a;
    EXPECT_TRUE(inject_compromise(a, 160, rng).nodes.empty());
    a.compromised_fraction = 0.10;
    EXPECT_EQ(inject_compromise(a, 160, rng).nodes.size(), 16u);
    a.compromised_fraction = 0.20;
    EXPECT_EQ(inject_compromise(a, 160, rng).nodes.size(), 32u);
    a.compromised_fraction = 1.0;
    EXPECT_EQ(inject_compromise(a, 160, rng).nodes.size(), 160u);
}

TEST(Compromise, ConstantOffsetReports) {
    auto c = small(2);
    c.attack.compromised_fraction = 0.2;
    c.protocol.security_enabled = false;
    const auto r = run(c, {true});
    for (const auto& rec : r.trace.records) {
        if (rec.kind == EventKind::sense && r.compromised.contains(rec.node)) {
            EXPECT_EQ(rec.detail, "reading=35");
        }
    }
}

TEST(Compromise, FramerAnnouncesEveryPeriod) {
    auto c = small(2);
    c.attack.compromised_fraction = 0.1;
    c.attack.mode = AttackMode::framer;
    const auto r = run(c);
    EXPECT_GT(r.metrics.messages_by_type[static_cast<int>(MessageType::isolation)], 0u);
}

TEST(Compromise, OtherModesRun) {
    for (auto m : {AttackMode::random_liar, AttackMode::stuck_value}) {
        auto c = small(3);
        c.attack.compromised_fraction = 0.2;
        c.attack.mode = m;
        const auto r = run(c);
        EXPECT_GT(r.metrics.packets_sent, 0u);
    }
}

TEST(Compromise, HonestReadingsIndependentOfAttackSet) {
    auto base = small(4);
    auto attacked = base;
    attacked.attack.compromised_fraction = 0.2;
    const auto r1 = run(base, {true});
    const auto r2 = run(attacked, {true});
    std::map<std::pair<NodeId, double>, std::string> first;
    for (const auto& rec : r1.trace.records)
        if (rec.kind == EventKind::sense) first[{rec.node, rec.time}] = rec.detail;
    for (const auto& rec : r2.trace.records) {
        if (rec.kind != EventKind::sense || r2.compromised.contains(rec.node)) continue;
        auto it = first.find({rec.node, rec.time});
        if (it != first.end()) EXPECT_EQ(it->second, rec.detail);
    }
}

TEST(Field, Reproducible) {
    EXPECT_EQ(field_sample(3, 7, 11, 25, 1), field_sample(3, 7, 11, 25, 1));
    EXPECT_NE(field_sample(3, 7, 11, 25, 1).mean(), field_sample(3, 7, 12, 25, 1).mean());
    EXPECT_EQ(field_sample(3, 7, 11, 25, 1).std(), 1.0);
}

TEST(Field, LawOfLargeNumbers) {
    double sum = 0, sq = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double x = field_sample(1, static_cast<NodeId>(i % 160), static_cast<std::uint64_t>(i / 160), 25, 1).mean();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    EXPECT_NEAR(mean, 25.0, 0.02);
    EXPECT_NEAR(sd, 1.0, 0.02);
}

TEST(Config, ValidationNamesKey) {
    ScenarioConfig c;
    c.n_nodes = 0;
    try {
        validate(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "n_nodes");
    }
    c = {};
    c.radio_loss_prob = 1.5;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.attack.compromised_fraction = -0.1;
    EXPECT_THROW(run(c), ConfigError);
}

TEST(Trace, HeaderAndColumns) {
    auto c = small();
    c.sim_time_s = 1;
    const auto text = trace_text(run(c, {true}));
    EXPECT_EQ(text.rfind("# time_s\tseq\tkind\tnode\tpeer\tdetail\n", 0), 0u);
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 5);
}
