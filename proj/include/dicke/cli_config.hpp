#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dicke/css_decomposition.hpp"
#include "dicke/unraveling.hpp"

namespace dicke {

enum class Subcommand { Exact, CssScan, CssTrace, Qt, QtScaling, Entropy };

std::string_view to_string(Subcommand s);
Subcommand parse_subcommand(std::string_view s);

/// Fully resolved run configuration. JSON keys equal the member names.
struct RunConfig {
    Subcommand subcommand = Subcommand::Exact;
    std::string out_dir = "out";

    // dicke_core
    int n = 30;
    double gamma = 1.0;
    double t_max = 12.0;
    /// 0 selects the subcommand default (1200, or 241 for css-scan).
    int t_points = 0;

    // css_decomposition
    /// Unset selects extended for N > 20 and double otherwise.
    std::optional<Precision> precision;
    double eta_min = 0.005;
    double eta_max = 1.2;
    int eta_points = 240;
    Branch branch = Branch::Lower;
    double tol = 1e-6;
    double window = 0.05;
    int grid_points = 200;
    /// Largest eta a traced branch may reach; 0 selects 1 (lower) or 2 (upper).
    double eta_limit = 0.0;

    // unraveling
    double dt = 1e-3;
    Strategy strategy = Strategy::Naive;
    double theta_f = 0.7853981633974483;
    int ntraj = 100;
    std::uint64_t seed = 42;
    int workers = 1;
    int record_stride = 10;
    int phi_grid = 16;
    std::vector<int> n_list{8, 16, 32};
    std::vector<Strategy> strategies{Strategy::Naive, Strategy::PhiRandom, Strategy::PhiOpt};

    // entanglement; -1 selects N/2
    int m = -1;
    int n_b = -1;

    /// Applies subcommand-dependent defaults; idempotent.
    void resolve();
    /// Throws UsageError naming the first invalid key.
    void validate() const;
    nlohmann::json to_json() const;

    ModelParams model() const { return {n, gamma}; }
    TrajectoryOptions trajectory_options() const;
};

/// Environment variable that may supply out_dir; command-line flags take precedence.
inline constexpr const char* kOutDirEnv = "DICKE_OUT_DIR";

/**
 * Builds a RunConfig from argv.
 *
 * Precedence, lowest first: built-in defaults, the JSON file given by
 * --config, the DICKE_OUT_DIR environment variable (out_dir only), explicit
 * flags. Unknown JSON keys, unknown flags and invalid values raise UsageError.
 * Returns nullopt when help was requested (the text is written to `help`).
 */
std::optional<RunConfig> parse_config(int argc, const char* const* argv, std::string* help = nullptr);

/// Applies the keys of a JSON object onto `cfg`.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

}  // namespace dicke
