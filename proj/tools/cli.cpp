#include "cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "wsnagg/config.hpp"
#include "wsnagg/metrics.hpp"

namespace wsnagg::cli {

namespace {

namespace fs = std::filesystem;

struct SeedJob {
    ScenarioConfig cfg;
    fs::path dir;
};

struct Summary {
    double mean = 0.0;
    double std = 0.0;
};

Summary summarize(const std::vector<double>& xs) {
    Summary s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

void write_run_outputs(const RunResult& r, const fs::path& dir, bool trace) {
    fs::create_directories(dir);
    write_csv(r.metrics, dir);
    write_summary(r.metrics, dir / "summary.txt");
    if (trace) {
        std::ostringstream os;
        r.trace.write(os);
        write_file_atomic(dir / "trace.tsv", os.str());
    }
}

// Runs every job, writing its outputs as it finishes. Results keep job order.
std::vector<Metrics> run_jobs(const std::vector<SeedJob>& jobs, const CliArgs& args,
                              std::ostream& out) {
    std::vector<Metrics> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex out_mu;

    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                RunOptions opts;
                opts.record_trace = args.trace;
                RunResult r = run(jobs[i].cfg, opts);
                write_run_outputs(r, jobs[i].dir, args.trace);
                if (!args.quiet) {
                    std::lock_guard lock(out_mu);
                    out << jobs[i].dir.string() << ": seed " << r.metrics.seed << " energy "
                        << format_number(r.metrics.mean_energy_j()) << " J/node, delivery "
                        << format_number(r.metrics.delivery_ratio) << ", detection "
                        << format_number(r.metrics.detection.detection_rate) << '\n';
                }
                results[i] = std::move(r.metrics);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(args.jobs, static_cast<unsigned>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

std::string aggregate_text(const std::vector<Metrics>& runs, const std::vector<std::uint64_t>& seeds) {
    std::ostringstream os;
    os << "# wsnagg aggregate over " << runs.size() << " run(s): mean and sample std\n";
    os << "runs = " << runs.size() << '\n';
    os << "seeds =";
    for (auto s : seeds) os << ' ' << s;
    os << '\n';
    if (runs.empty()) return os.str();
    const auto names = scalar_fields(runs.front());
    for (std::size_t k = 0; k < names.size(); ++k) {
        std::vector<double> xs;
        for (const auto& m : runs) xs.push_back(scalar_fields(m)[k].second);
        const Summary s = summarize(xs);
        os << names[k].first << ".mean = " << format_number(s.mean) << '\n';
        os << names[k].first << ".std = " << format_number(s.std) << '\n';
    }
    return os.str();
}

fs::path seed_dir(const fs::path& base, std::uint64_t seed) {
    return base / ("seed_" + std::to_string(seed));
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::ios_base::failure& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    }
}

}  // namespace

ScenarioConfig effective_config(const CliArgs& args) {
    ScenarioConfig cfg = args.config ? parse_config(*args.config) : ScenarioConfig{};
    if (args.seed) cfg.rng_seed = *args.seed;
    if (args.security) cfg.protocol.security_enabled = *args.security;
    if (args.compromised_fraction) cfg.attack.compromised_fraction = *args.compromised_fraction;
    if (args.runs < 1) throw ConfigError("runs", "must be at least 1");
    validate(cfg);
    return cfg;
}

std::vector<std::uint64_t> sweep_seeds(const CliArgs& args, std::uint64_t base_seed) {
    if (!args.seeds.empty()) return args.seeds;
    std::vector<std::uint64_t> seeds;
    for (std::uint32_t i = 0; i < args.runs; ++i) seeds.push_back(base_seed + i);
    return seeds;
}

int cmd_run(const CliArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig base = effective_config(args);
        const auto seeds = sweep_seeds(args, base.rng_seed);
        fs::create_directories(args.out);
        write_file_atomic(args.out / "effective_config.txt", format_config(base));

        std::vector<SeedJob> jobs;
        for (auto s : seeds) {
            ScenarioConfig cfg = base;
            cfg.rng_seed = s;
            jobs.push_back({cfg, seed_dir(args.out, s)});
        }
        const auto results = run_jobs(jobs, args, out);
        write_file_atomic(args.out / "aggregate.txt", aggregate_text(results, seeds));
        return kExitOk;
    });
}

int cmd_compare(const CliArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig base = effective_config(args);
        const auto seeds = sweep_seeds(args, base.rng_seed);
        fs::create_directories(args.out);
        write_file_atomic(args.out / "effective_config.txt", format_config(base));

        // Baseline: aggregation only, nobody compromised. Secure: the
        // security module runs while the configured attack is active.
        std::vector<SeedJob> jobs;
        for (auto s : seeds) {
            ScenarioConfig b = base;
            b.rng_seed = s;
            b.protocol.security_enabled = false;
            b.attack.compromised_fraction = 0.0;
            jobs.push_back({b, seed_dir(args.out / "baseline", s)});
        }
        for (auto s : seeds) {
            ScenarioConfig sec = base;
            sec.rng_seed = s;
            sec.protocol.security_enabled = true;
            jobs.push_back({sec, seed_dir(args.out / "secure", s)});
        }
        const auto results = run_jobs(jobs, args, out);
        const std::size_t n = seeds.size();

        std::ostringstream os;
        os << "# wsnagg paired comparison: security off (no attack) vs security on\n";
        os << "runs = " << n << '\n';
        os << "compromised_fraction = " << format_number(base.attack.compromised_fraction) << '\n';
        os << "reference_energy_overhead_pct = " << format_number(kReferenceOverheadPct) << '\n';
        std::vector<double> overhead, dr_delta;
        for (std::size_t i = 0; i < n; ++i) {
            const OverheadReport r = overhead_report(results[n + i], results[i]);
            overhead.push_back(r.energy_overhead_pct);
            dr_delta.push_back(r.delivery_ratio_delta);
            const std::string key = "seed_" + std::to_string(seeds[i]);
            os << key << ".baseline_mean_energy_j = " << format_number(r.baseline_mean_energy_j) << '\n';
            os << key << ".secure_mean_energy_j = " << format_number(r.secure_mean_energy_j) << '\n';
            os << key << ".energy_overhead_pct = " << format_number(r.energy_overhead_pct) << '\n';
            os << key << ".delivery_ratio_delta = " << format_number(r.delivery_ratio_delta) << '\n';
        }
        const Summary so = summarize(overhead);
        const Summary sd = summarize(dr_delta);
        os << "energy_overhead_pct.mean = " << format_number(so.mean) << '\n';
        os << "energy_overhead_pct.std = " << format_number(so.std) << '\n';
        os << "delivery_ratio_delta.mean = " << format_number(sd.mean) << '\n';
        os << "delivery_ratio_delta.std = " << format_number(sd.std) << '\n';
        write_file_atomic(args.out / "overhead.txt", os.str());

        std::vector<Metrics> baseline(results.begin(), results.begin() + static_cast<long>(n));
        std::vector<Metrics> secure(results.begin() + static_cast<long>(n), results.end());
        write_file_atomic(args.out / "baseline" / "aggregate.txt", aggregate_text(baseline, seeds));
        write_file_atomic(args.out / "secure" / "aggregate.txt", aggregate_text(secure, seeds));
        if (!args.quiet) {
            out << "energy overhead " << format_number(so.mean) << "% (reference "
                << format_number(kReferenceOverheadPct) << "%), delivery ratio delta "
                << format_number(sd.mean) << '\n';
        }
        return kExitOk;
    });
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Secure distributed max-aggregation simulator for sensor networks"};
    app.require_subcommand(1);

    CliArgs args;
    const char* env_out = std::getenv(kOutDirEnv);
    args.out = env_out && *env_out ? fs::path(env_out) : fs::path("wsnagg-out");

    std::string security;
    std::string seed_list;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option_function<std::string>(
            "--config", [&](const std::string& p) { args.config = p; }, "Scenario config file (key = value)");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { args.seed = s; }, "RNG seed (overrides the file)");
        cmd->add_option("--runs", args.runs, "Number of consecutive seeds to sweep")
            ->check(CLI::Range(1u, 1000000u));
        cmd->add_option("--seeds", seed_list, "Explicit comma-separated seed list");
        cmd->add_option("--security", security, "Security module override")
            ->check(CLI::IsMember({"on", "off"}));
        cmd->add_option_function<double>(
               "--compromised-fraction", [&](double f) { args.compromised_fraction = f; },
               "Fraction of nodes compromised")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--out", args.out, "Output directory (default $" + std::string(kOutDirEnv) + ")");
        cmd->add_flag("--trace", args.trace, "Write the event trace of each run");
        cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
        cmd->add_option("--jobs", args.jobs, "Parallel runs")->check(CLI::Range(1u, 256u));
    };
    auto* run_cmd = app.add_subcommand("run", "Run a seed sweep and write metrics");
    auto* cmp_cmd = app.add_subcommand("compare", "Paired security off/on comparison");
    add_common(run_cmd);
    add_common(cmp_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << e.what() << '\n';
        return kExitConfig;
    }

    if (!security.empty()) args.security = security == "on";
    if (!seed_list.empty()) {
        std::stringstream ss(seed_list);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                args.seeds.push_back(std::stoull(item));
            } catch (const std::exception&) {
                err << "invalid seed '" << item << "'\n";
                return kExitConfig;
            }
        }
    }

    if (run_cmd->parsed()) return cmd_run(args, out, err);
    return cmd_compare(args, out, err);
}

}  // namespace wsnagg::cli
