#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wsnagg/simulator.hpp"

namespace wsnagg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

inline constexpr const char* kOutDirEnv = "WSNAGG_OUT_DIR";

// Reported energy overhead of the security module in the original ns-2 study.
inline constexpr double kReferenceOverheadPct = 105.4;

struct CliArgs {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::uint32_t runs = 1;
    std::vector<std::uint64_t> seeds;  // explicit list, overrides seed/runs
    std::optional<bool> security;
    std::optional<double> compromised_fraction;
    std::filesystem::path out;
    bool trace = false;
    bool quiet = false;
    unsigned jobs = 1;
};

// Config file (or defaults) with command-line overrides applied.
ScenarioConfig effective_config(const CliArgs& args);

std::vector<std::uint64_t> sweep_seeds(const CliArgs& args, std::uint64_t base_seed);

int cmd_run(const CliArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CliArgs& args, std::ostream& out, std::ostream& err);

// Full command line entry point: `wsnagg <run|compare> [flags]`.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace wsnagg::cli
