#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wsnagg/protocol.hpp"

namespace wsnagg {

struct DetectionStats {
    std::uint64_t compromised = 0;
    std::uint64_t honest = 0;
    std::uint64_t true_positives = 0;
    std::uint64_t false_positives = 0;
    std::uint64_t false_negatives = 0;
    double detection_rate = 0.0;
    double fp_rate = 0.0;
    double fn_rate = 0.0;
};

struct AccuracySample {
    double time_s = 0.0;
    double true_max = 0.0;
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;
    double fraction_within_tolerance = 0.0;
};

struct NodeMetrics {
    NodeId id = 0;
    double x = 0.0;
    double y = 0.0;
    double energy_consumed_j = 0.0;
    double energy_remaining_j = 0.0;
    std::uint64_t flagged_by = 0;  // honest nodes blacklisting this one
    bool compromised = false;
    bool alive = true;
};

struct Metrics {
    std::uint64_t seed = 0;
    bool security_enabled = true;
    std::vector<NodeMetrics> nodes;
    std::array<std::uint64_t, kMessageTypeCount> messages_by_type{};
    std::uint64_t packets_sent = 0;
    std::uint64_t intended_receptions = 0;
    std::uint64_t packets_received = 0;
    std::uint64_t dropped_loss = 0;
    std::uint64_t dropped_overflow = 0;
    std::uint64_t dropped_dead = 0;
    double delivery_ratio = 1.0;
    std::uint64_t estimate_receive_events = 0;
    std::uint64_t unknown_sender_drops = 0;
    std::uint64_t challenges_issued = 0;
    std::uint64_t challenges_withdrawn = 0;
    std::uint64_t responses_coalesced = 0;
    std::uint64_t verdict_malicious = 0;
    std::uint64_t verdict_innocent = 0;
    std::uint64_t verdict_inconclusive = 0;
    std::uint64_t dead_nodes = 0;
    std::uint64_t components = 0;
    DetectionStats detection;
    std::vector<AccuracySample> accuracy_trace;
    double accuracy_tolerance = 1.0;
    double convergence_time_s = -1.0;  // -1 when never reached

    double total_energy_j() const;
    double mean_energy_j() const;
};

// A compromised node is detected when at least one honest node blacklisted it.
DetectionStats detection_stats(const std::map<NodeId, std::set<NodeId>>& blacklists,
                               const std::set<NodeId>& compromised, std::uint64_t n_nodes);

struct OverheadReport {
    double energy_overhead_pct = 0.0;
    double delivery_ratio_delta = 0.0;
    double secure_mean_energy_j = 0.0;
    double baseline_mean_energy_j = 0.0;
};

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Refuses runs with different seeds or node counts.
OverheadReport overhead_report(const Metrics& secure, const Metrics& baseline);

// Ordered (name, value) pairs of every scalar metric, in output order.
std::vector<std::pair<std::string, double>> scalar_fields(const Metrics& m);

// Locale-independent, 9 significant digits.
std::string format_number(double v);

void write_nodes_csv(const Metrics& m, const std::filesystem::path& path);
void write_accuracy_csv(const Metrics& m, const std::filesystem::path& path);
void write_csv(const Metrics& m, const std::filesystem::path& dir);
void write_summary(const Metrics& m, const std::filesystem::path& path);

// key = value reader shared by summaries and configs.
std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path);

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace wsnagg
