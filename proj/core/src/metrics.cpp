#include "wsnagg/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace wsnagg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double rate(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double Metrics::total_energy_j() const {
    return std::accumulate(nodes.begin(), nodes.end(), 0.0,
                           [](double acc, const NodeMetrics& n) { return acc + n.energy_consumed_j; });
}

double Metrics::mean_energy_j() const {
    return nodes.empty() ? 0.0 : total_energy_j() / static_cast<double>(nodes.size());
}

DetectionStats detection_stats(const std::map<NodeId, std::set<NodeId>>& blacklists,
                               const std::set<NodeId>& compromised, std::uint64_t n_nodes) {
    std::set<NodeId> flagged;
    for (const auto& [holder, list] : blacklists) {
        if (compromised.contains(holder)) continue;
        flagged.insert(list.begin(), list.end());
    }
    DetectionStats d;
    d.compromised = compromised.size();
    d.honest = n_nodes - d.compromised;
    for (NodeId n : flagged) {
        if (compromised.contains(n)) {
            ++d.true_positives;
        } else if (n < n_nodes) {
            ++d.false_positives;
        }
    }
    d.false_negatives = d.compromised - d.true_positives;
    d.detection_rate = rate(d.true_positives, d.compromised);
    d.fp_rate = rate(d.false_positives, d.honest);
    d.fn_rate = rate(d.false_negatives, d.compromised);
    return d;
}

OverheadReport overhead_report(const Metrics& secure, const Metrics& baseline) {
    if (secure.seed != baseline.seed) throw MetricsError("overhead report needs runs with the same seed");
    if (secure.nodes.size() != baseline.nodes.size()) {
        throw MetricsError("overhead report needs runs over the same nodes");
    }
    OverheadReport r;
    r.secure_mean_energy_j = secure.mean_energy_j();
    r.baseline_mean_energy_j = baseline.mean_energy_j();
    r.energy_overhead_pct = r.baseline_mean_energy_j > 0.0
                                ? 100.0 * (r.secure_mean_energy_j - r.baseline_mean_energy_j) /
                                      r.baseline_mean_energy_j
                                : 0.0;
    r.delivery_ratio_delta = secure.delivery_ratio - baseline.delivery_ratio;
    return r;
}

std::vector<std::pair<std::string, double>> scalar_fields(const Metrics& m) {
    auto u = [](std::uint64_t v) { return static_cast<double>(v); };
    std::vector<std::pair<std::string, double>> f = {
        {"seed", u(m.seed)},
        {"security_enabled", m.security_enabled ? 1.0 : 0.0},
        {"n_nodes", u(m.nodes.size())},
        {"total_energy_j", m.total_energy_j()},
        {"mean_energy_j", m.mean_energy_j()},
    };
    for (std::size_t t = 0; t < kMessageTypeCount; ++t) {
        f.emplace_back(std::string("messages_") + to_string(static_cast<MessageType>(t)),
                       u(m.messages_by_type[t]));
    }
    const std::vector<std::pair<std::string, double>> rest = {
        {"packets_sent", u(m.packets_sent)},
        {"intended_receptions", u(m.intended_receptions)},
        {"packets_received", u(m.packets_received)},
        {"dropped_loss", u(m.dropped_loss)},
        {"dropped_overflow", u(m.dropped_overflow)},
        {"dropped_dead", u(m.dropped_dead)},
        {"delivery_ratio", m.delivery_ratio},
        {"estimate_receive_events", u(m.estimate_receive_events)},
        {"unknown_sender_drops", u(m.unknown_sender_drops)},
        {"challenges_issued", u(m.challenges_issued)},
        {"challenges_withdrawn", u(m.challenges_withdrawn)},
        {"responses_coalesced", u(m.responses_coalesced)},
        {"verdict_malicious", u(m.verdict_malicious)},
        {"verdict_innocent", u(m.verdict_innocent)},
        {"verdict_inconclusive", u(m.verdict_inconclusive)},
        {"dead_nodes", u(m.dead_nodes)},
        {"components", u(m.components)},
        {"compromised", u(m.detection.compromised)},
        {"honest", u(m.detection.honest)},
        {"true_positives", u(m.detection.true_positives)},
        {"false_positives", u(m.detection.false_positives)},
        {"false_negatives", u(m.detection.false_negatives)},
        {"detection_rate", m.detection.detection_rate},
        {"fp_rate", m.detection.fp_rate},
        {"fn_rate", m.detection.fn_rate},
        {"accuracy_tolerance", m.accuracy_tolerance},
        {"final_mean_abs_error", m.accuracy_trace.empty() ? 0.0 : m.accuracy_trace.back().mean_abs_error},
        {"final_max_abs_error", m.accuracy_trace.empty() ? 0.0 : m.accuracy_trace.back().max_abs_error},
        {"convergence_time_s", m.convergence_time_s},
    };
    f.insert(f.end(), rest.begin(), rest.end());
    return f;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    if (ec != std::errc{}) throw MetricsError("number formatting failed");
    return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::filesystem::filesystem_error("cannot open for writing", tmp,
                                                         std::make_error_code(std::errc::io_error));
        os << contents;
        os.flush();
        if (!os) throw std::filesystem::filesystem_error("write failed", tmp,
                                                         std::make_error_code(std::errc::io_error));
    }
    std::filesystem::rename(tmp, path);
}

void write_nodes_csv(const Metrics& m, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "id,x,y,energy_consumed_j,energy_remaining_j,flagged_by,compromised,alive\n";
    for (const auto& n : m.nodes) {
        os << n.id << ',' << format_number(n.x) << ',' << format_number(n.y) << ','
           << format_number(n.energy_consumed_j) << ',' << format_number(n.energy_remaining_j) << ','
           << n.flagged_by << ',' << (n.compromised ? 1 : 0) << ',' << (n.alive ? 1 : 0) << '\n';
    }
    write_file_atomic(path, os.str());
}

void write_accuracy_csv(const Metrics& m, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "time_s,true_max,max_abs_error,mean_abs_error,fraction_within_tolerance\n";
    for (const auto& s : m.accuracy_trace) {
        os << format_number(s.time_s) << ',' << format_number(s.true_max) << ','
           << format_number(s.max_abs_error) << ',' << format_number(s.mean_abs_error) << ','
           << format_number(s.fraction_within_tolerance) << '\n';
    }
    write_file_atomic(path, os.str());
}

void write_csv(const Metrics& m, const std::filesystem::path& dir) {
    write_nodes_csv(m, dir / "nodes.csv");
    write_accuracy_csv(m, dir / "accuracy.csv");
}

void write_summary(const Metrics& m, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "# wsnagg run summary\n";
    for (const auto& [k, v] : scalar_fields(m)) os << k << " = " << format_number(v) << '\n';
    write_file_atomic(path, os.str());
}

std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::filesystem::filesystem_error("cannot open", path,
                                                     std::make_error_code(std::errc::no_such_file_or_directory));
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::filesystem::filesystem_error("cannot open", path,
                                                     std::make_error_code(std::errc::no_such_file_or_directory));
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    char c;
    while (is.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field += '"';
                    is.get(c);
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace wsnagg
