#include "dicke/pipeline.hpp"

#include <filesystem>
#include <ostream>

#include "dicke/csv_io.hpp"
#include "dicke/entanglement.hpp"
#include "dicke/errors.hpp"

namespace dicke {

namespace {

namespace fs = std::filesystem;

fs::path prepare_dir(const RunConfig& cfg) {
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    write_text(dir / "run_config.json", cfg.to_json().dump(2) + "\n");
    return dir;
}

std::vector<double> eta_grid(const RunConfig& cfg) {
    std::vector<double> g(cfg.eta_points);
    for (int j = 0; j < cfg.eta_points; ++j)
        g[j] = cfg.eta_points == 1 ? cfg.eta_min
                                   : cfg.eta_min + (cfg.eta_max - cfg.eta_min) * j / (cfg.eta_points - 1);
    return g;
}

}  // namespace

int run_pipeline(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const ModelParams params = cfg.model();
    const Precision precision = cfg.precision.value_or(Precision::Double);

    switch (cfg.subcommand) {
        case Subcommand::Entropy: {
            nlohmann::json j;
            j["n"] = cfg.n;
            j["m"] = cfg.m;
            j["n_b"] = cfg.n_b;
            j["entropy_bits"] = entropy_dicke(cfg.n, cfg.m, cfg.n_b);
            out << j.dump() << '\n';
            return kExitSuccess;
        }
        case Subcommand::Exact: {
            const fs::path dir = prepare_dir(cfg);
            const std::vector<double> t = linear_grid(cfg.t_max, cfg.t_points);
            write_populations(dir / "populations.csv", evolve_exact(params, t, cfg.workers));
            return kExitSuccess;
        }
        case Subcommand::CssScan: {
            const fs::path dir = prepare_dir(cfg);
            const std::vector<double> t = linear_grid(cfg.t_max, cfg.t_points);
            const NegativityField field = scan_landscape(params, t, eta_grid(cfg), precision, cfg.workers);
            write_landscape(dir / "landscape.csv", field);
            if (field.warnings > 0) {
                log << "warning: " << field.warnings
                    << " landscape cells were too ill-conditioned and carry the ceiling value\n";
                return kExitPartial;
            }
            return kExitSuccess;
        }
        case Subcommand::CssTrace: {
            const fs::path dir = prepare_dir(cfg);
            const std::vector<double> t = linear_grid(cfg.t_max, cfg.t_points);
            TraceOptions opts;
            opts.window = cfg.window;
            opts.grid_points = cfg.grid_points;
            opts.eta_max = cfg.eta_limit;
            opts.workers = cfg.workers;
            const PassageResult r = trace_passage(params, t, cfg.branch, cfg.tol, precision, opts);
            write_passage(dir / "passage.csv", r.curve);
            write_css_weights(dir / "css_weights.csv", r.decompositions);
            if (!r.jumps.empty()) log << "note: " << r.jumps.size() << " accepted points jumped away from the prediction\n";
            if (!r.gaps.empty()) {
                log << "warning: tolerance not reached at " << r.gaps.size() << " times (first t = " << r.gaps.front()
                    << ")\n";
                return kExitPartial;
            }
            return kExitSuccess;
        }
        case Subcommand::Qt: {
            const fs::path dir = prepare_dir(cfg);
            const EnsembleStats s = ensemble_run(params, cfg.trajectory_options(), cfg.ntraj, cfg.seed, cfg.workers);
            write_qt_ensemble(dir / "qt_ensemble.csv", s);
            return kExitSuccess;
        }
        case Subcommand::QtScaling: {
            const fs::path dir = prepare_dir(cfg);
            std::vector<ScalingRow> rows;
            for (int n : cfg.n_list) {
                for (Strategy strategy : cfg.strategies) {
                    TrajectoryOptions opts = cfg.trajectory_options();
                    opts.strategy = strategy;
                    const EnsembleStats s = ensemble_run({n, cfg.gamma}, opts, cfg.ntraj, cfg.seed, cfg.workers);
                    rows.push_back({n, strategy, s.s_max_mean, s.s_max_stderr, s.xi_min_mean, s.xi_min_stderr});
                    log << "n=" << n << " " << to_string(strategy) << " done\n";
                }
            }
            write_qt_scaling(dir / "qt_scaling.csv", rows);
            return kExitSuccess;
        }
    }
    return kExitError;
}

}  // namespace dicke
