#include "dicke/cli_config.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "dicke/errors.hpp"

namespace dicke {

using nlohmann::json;

namespace {

constexpr std::pair<Subcommand, std::string_view> kSubcommands[] = {
    {Subcommand::Exact, "exact"},  {Subcommand::CssScan, "css-scan"},     {Subcommand::CssTrace, "css-trace"},
    {Subcommand::Qt, "qt"},        {Subcommand::QtScaling, "qt-scaling"}, {Subcommand::Entropy, "entropy"},
};

[[noreturn]] void bad_key(std::string_view key, const std::string& why) {
    throw UsageError("invalid value for '" + std::string(key) + "': " + why);
}

template <class F>
auto converted(std::string_view key, F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        bad_key(key, e.what());
    }
}

Precision precision_of(std::string_view key, const std::string& s) {
    return converted(key, [&] { return parse_precision(s); });
}
Branch branch_of(std::string_view key, const std::string& s) {
    return converted(key, [&] { return parse_branch(s); });
}
Strategy strategy_of(std::string_view key, const std::string& s) {
    return converted(key, [&] { return parse_strategy(s); });
}

using JsonSetter = std::function<void(RunConfig&, const json&)>;

template <class T>
JsonSetter plain(T RunConfig::*field) {
    return [field](RunConfig& c, const json& v) { c.*field = v.get<T>(); };
}

const std::map<std::string, JsonSetter, std::less<>>& json_setters() {
    static const std::map<std::string, JsonSetter, std::less<>> table = {
        {"subcommand", [](RunConfig& c, const json& v) { c.subcommand = parse_subcommand(v.get<std::string>()); }},
        {"out_dir", plain(&RunConfig::out_dir)},
        {"n", plain(&RunConfig::n)},
        {"gamma", plain(&RunConfig::gamma)},
        {"t_max", plain(&RunConfig::t_max)},
        {"t_points", plain(&RunConfig::t_points)},
        {"precision",
         [](RunConfig& c, const json& v) {
             if (v.is_null())
                 c.precision.reset();
             else
                 c.precision = precision_of("precision", v.get<std::string>());
         }},
        {"eta_min", plain(&RunConfig::eta_min)},
        {"eta_max", plain(&RunConfig::eta_max)},
        {"eta_points", plain(&RunConfig::eta_points)},
        {"branch", [](RunConfig& c, const json& v) { c.branch = branch_of("branch", v.get<std::string>()); }},
        {"tol", plain(&RunConfig::tol)},
        {"window", plain(&RunConfig::window)},
        {"grid_points", plain(&RunConfig::grid_points)},
        {"eta_limit", plain(&RunConfig::eta_limit)},
        {"dt", plain(&RunConfig::dt)},
        {"strategy", [](RunConfig& c, const json& v) { c.strategy = strategy_of("strategy", v.get<std::string>()); }},
        {"theta_f", plain(&RunConfig::theta_f)},
        {"ntraj", plain(&RunConfig::ntraj)},
        {"seed", plain(&RunConfig::seed)},
        {"workers", plain(&RunConfig::workers)},
        {"record_stride", plain(&RunConfig::record_stride)},
        {"phi_grid", plain(&RunConfig::phi_grid)},
        {"n_list", plain(&RunConfig::n_list)},
        {"strategies",
         [](RunConfig& c, const json& v) {
             c.strategies.clear();
             for (const auto& s : v) c.strategies.push_back(strategy_of("strategies", s.get<std::string>()));
         }},
        {"m", plain(&RunConfig::m)},
        {"n_b", plain(&RunConfig::n_b)},
    };
    return table;
}

}  // namespace

std::string_view to_string(Subcommand s) {
    for (const auto& [k, name] : kSubcommands)
        if (k == s) return name;
    return "exact";
}

Subcommand parse_subcommand(std::string_view s) {
    for (const auto& [k, name] : kSubcommands)
        if (name == s) return k;
    bad_key("subcommand", "unknown subcommand '" + std::string(s) + "'");
}

void apply_json(RunConfig& cfg, const json& j) {
    if (!j.is_object()) throw UsageError("configuration must be a JSON object");
    const auto& setters = json_setters();
    for (const auto& [key, value] : j.items()) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw UsageError("unknown configuration key '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const json::exception& e) {
            bad_key(key, e.what());
        }
    }
}

void RunConfig::resolve() {
    if (t_points == 0) t_points = subcommand == Subcommand::CssScan ? 241 : 1200;
    if (!precision) precision = n > 20 ? Precision::Extended : Precision::Double;
    if (m < 0) m = n / 2;
    if (n_b < 0) n_b = n / 2;
}

void RunConfig::validate() const {
    if (n < 1) bad_key("n", "must be >= 1");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) bad_key("gamma", "must be positive");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) bad_key("t_max", "must be >= 0");
    if (t_points < 1) bad_key("t_points", "must be >= 1");
    if (!(eta_min > 0.0)) bad_key("eta_min", "must be positive");
    if (!(eta_max >= eta_min) || !std::isfinite(eta_max)) bad_key("eta_max", "must be finite and >= eta_min");
    if (eta_points < 1) bad_key("eta_points", "must be >= 1");
    if (!(tol > 0.0)) bad_key("tol", "must be positive");
    if (!(window > 0.0)) bad_key("window", "must be positive");
    if (grid_points < 3) bad_key("grid_points", "must be >= 3");
    if (!(eta_limit >= 0.0)) bad_key("eta_limit", "must be >= 0");
    if (!(dt > 0.0) || !(dt * gamma <= 1e-2)) bad_key("dt", "need 0 < dt * gamma <= 1e-2");
    if (!(theta_f >= 0.0 && theta_f <= 0.5 * std::numbers::pi)) bad_key("theta_f", "must lie in [0, pi/2]");
    if (ntraj < 1) bad_key("ntraj", "must be >= 1");
    if (workers < 1) bad_key("workers", "must be >= 1");
    if (record_stride < 1) bad_key("record_stride", "must be >= 1");
    if (phi_grid < 8) bad_key("phi_grid", "must be >= 8");
    if (n_list.empty()) bad_key("n_list", "must not be empty");
    for (int v : n_list)
        if (v < 1) bad_key("n_list", "entries must be >= 1");
    if (strategies.empty()) bad_key("strategies", "must not be empty");
    if (subcommand == Subcommand::Entropy) {
        if (n < 2) bad_key("n", "entropy needs n >= 2");
        if (m < 0 || m > n) bad_key("m", "must lie in [0, n]");
        if (n_b < 1 || n_b > n - 1) bad_key("n_b", "must lie in [1, n-1]");
    }
}

json RunConfig::to_json() const {
    json j;
    j["subcommand"] = std::string(dicke::to_string(subcommand));
    j["out_dir"] = out_dir;
    j["n"] = n;
    j["gamma"] = gamma;
    j["t_max"] = t_max;
    j["t_points"] = t_points;
    j["precision"] = precision ? json(std::string(dicke::to_string(*precision))) : json(nullptr);
    j["eta_min"] = eta_min;
    j["eta_max"] = eta_max;
    j["eta_points"] = eta_points;
    j["branch"] = std::string(dicke::to_string(branch));
    j["tol"] = tol;
    j["window"] = window;
    j["grid_points"] = grid_points;
    j["eta_limit"] = eta_limit;
    j["dt"] = dt;
    j["strategy"] = std::string(dicke::to_string(strategy));
    j["theta_f"] = theta_f;
    j["ntraj"] = ntraj;
    j["seed"] = seed;
    j["workers"] = workers;
    j["record_stride"] = record_stride;
    j["phi_grid"] = phi_grid;
    j["n_list"] = n_list;
    json names = json::array();
    for (Strategy s : strategies) names.push_back(std::string(dicke::to_string(s)));
    j["strategies"] = names;
    j["m"] = m;
    j["n_b"] = n_b;
    return j;
}

TrajectoryOptions RunConfig::trajectory_options() const {
    TrajectoryOptions o;
    o.dt = dt;
    o.t_max = t_max;
    o.strategy = strategy;
    o.theta_f = theta_f;
    o.record_stride = record_stride;
    o.phi_grid = phi_grid;
    return o;
}

std::optional<RunConfig> parse_config(int argc, const char* const* argv, std::string* help) {
    CLI::App app{"Dicke superradiance: exact populations, CSS decompositions and trajectory unravelings",
                 "dicke_cli"};
    app.require_subcommand(1, 1);
    std::vector<CLI::App*> subs;
    for (const auto& [kind, name] : kSubcommands) {
        CLI::App* sub = app.add_subcommand(std::string(name));
        sub->fallthrough();
        subs.push_back(sub);
    }
    subs[0]->description("populations of the Dicke cascade -> populations.csv");
    subs[1]->description("log10 negativity over (t, eta) -> landscape.csv");
    subs[2]->description("trace a positive passage -> passage.csv, css_weights.csv");
    subs[3]->description("trajectory ensemble -> qt_ensemble.csv");
    subs[4]->description("S_max / xi_min over a list of N -> qt_scaling.csv");
    subs[5]->description("entanglement entropy of a Dicke state, printed as JSON");

    // Flags are parsed into holders and applied after the config file.
    std::vector<std::function<void(RunConfig&)>> appliers;
    auto flag = [&]<class T>(const std::string& name, const std::string& desc, std::function<void(RunConfig&, const T&)> set) {
        auto holder = std::make_shared<T>();
        CLI::Option* opt = app.add_option(name, *holder, desc);
        appliers.push_back([opt, holder, set](RunConfig& c) {
            if (opt->count() > 0) set(c, *holder);
        });
        return opt;
    };
    auto field = [&]<class T>(const std::string& name, T RunConfig::*member, const std::string& desc) {
        return flag.template operator()<T>(name, desc, [member](RunConfig& c, const T& v) { c.*member = v; });
    };

    std::string config_path;
    app.add_option("--config", config_path, "JSON file with configuration keys (flags override it)");
    field("--out-dir", &RunConfig::out_dir, "output directory (env " + std::string(kOutDirEnv) + ")");
    field("--n", &RunConfig::n, "number of emitters N");
    field("--gamma", &RunConfig::gamma, "collective decay rate");
    field("--t-max", &RunConfig::t_max, "final time");
    field("--t-points", &RunConfig::t_points, "time grid points");
    flag.operator()<std::string>("--precision", "double|extended", [](RunConfig& c, const std::string& v) {
        c.precision = precision_of("precision", v);
    });
    field("--eta-min", &RunConfig::eta_min, "smallest eta of the landscape grid");
    field("--eta-max", &RunConfig::eta_max, "largest eta of the landscape grid");
    field("--eta-points", &RunConfig::eta_points, "eta grid points");
    flag.operator()<std::string>("--branch", "lower|upper",
                                 [](RunConfig& c, const std::string& v) { c.branch = branch_of("branch", v); });
    field("--tol", &RunConfig::tol, "negativity tolerance");
    field("--window", &RunConfig::window, "half width of the eta search window");
    field("--grid-points", &RunConfig::grid_points, "coarse eta samples per time");
    field("--eta-limit", &RunConfig::eta_limit, "largest eta of a traced branch (0: branch default)");
    field("--dt", &RunConfig::dt, "trajectory timestep");
    flag.operator()<std::string>("--strategy", "naive|phi-random|phi-opt", [](RunConfig& c, const std::string& v) {
        c.strategy = strategy_of("strategy", v);
    });
    field("--theta-f", &RunConfig::theta_f, "Kraus mixing angle");
    field("--ntraj", &RunConfig::ntraj, "number of trajectories");
    field("--seed", &RunConfig::seed, "root seed");
    field("--workers", &RunConfig::workers, "worker threads");
    field("--record-stride", &RunConfig::record_stride, "steps between recorded samples");
    field("--phi-grid", &RunConfig::phi_grid, "coarse phi samples for phi-opt");
    field("--n-list", &RunConfig::n_list, "emitter counts for qt-scaling")->delimiter(',');
    flag.operator()<std::vector<std::string>>("--strategies", "strategies for qt-scaling",
                                              [](RunConfig& c, const std::vector<std::string>& v) {
                                                  c.strategies.clear();
                                                  for (const auto& s : v)
                                                      c.strategies.push_back(strategy_of("strategies", s));
                                              })
        ->delimiter(',');
    field("--m", &RunConfig::m, "excitation number (entropy)");
    field("--n-b", &RunConfig::n_b, "block size (entropy)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        if (help) *help = app.help();
        return std::nullopt;
    } catch (const CLI::CallForAllHelp&) {
        if (help) *help = app.help("", CLI::AppFormatMode::All);
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    RunConfig cfg;
    Subcommand chosen = Subcommand::Exact;
    for (std::size_t i = 0; i < subs.size(); ++i)
        if (subs[i]->parsed()) chosen = kSubcommands[i].first;

    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw UsageError("cannot read config file '" + config_path + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw UsageError("config file '" + config_path + "' is not valid JSON: " + e.what());
        }
        apply_json(cfg, j);
        if (j.contains("subcommand") && cfg.subcommand != chosen)
            bad_key("subcommand", "config file says '" + std::string(to_string(cfg.subcommand)) +
                                      "' but the command line says '" + std::string(to_string(chosen)) + "'");
    }
    cfg.subcommand = chosen;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) cfg.out_dir = env;
    for (const auto& apply : appliers) apply(cfg);
    cfg.resolve();
    cfg.validate();
    return cfg;
}

}  // namespace dicke
