#include "dicke/unraveling.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>

#include "dicke/errors.hpp"
#include "dicke/parallel.hpp"

namespace dicke {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Naive: return "naive";
        case Strategy::PhiRandom: return "phi-random";
        case Strategy::PhiOpt: return "phi-opt";
    }
    return "naive";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "naive") return Strategy::Naive;
    if (s == "phi-random" || s == "phi_random") return Strategy::PhiRandom;
    if (s == "phi-opt" || s == "phi_opt") return Strategy::PhiOpt;
    throw DomainError("strategy must be naive, phi-random or phi-opt, got '" + std::string(s) + "'");
}

Eigen::Matrix2cd MixingUnitary::entries() const {
    const double c = std::cos(theta_f);
    const double s = std::sin(theta_f);
    const std::complex<double> ep = std::polar(1.0, phi_f);
    const std::complex<double> em = std::conj(ep);
    Eigen::Matrix2cd u;
    u << c * ep, s * em, -s * ep, c * em;
    return u;
}

void check_unitary(const Eigen::Matrix2cd& u, double tol) {
    const double dev = (u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
    if (!(dev <= tol)) throw DomainError("mixing matrix is not unitary (deviation " + std::to_string(dev) + ")");
}

Eigen::VectorXcd KrausPair::apply_e(int k, const Eigen::VectorXcd& psi) const {
    if (k == 0) return e0.cast<std::complex<double>>().cwiseProduct(psi);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n + 1);
    for (int m = 1; m <= n; ++m) out[m - 1] = e1[m] * psi[m];
    return out;
}

Eigen::VectorXcd KrausPair::apply(int k, const Eigen::VectorXcd& psi) const {
    const std::complex<double> w0 = mix(k, 0);
    const std::complex<double> w1 = mix(k, 1);
    Eigen::VectorXcd out(n + 1);
    for (int m = 0; m <= n; ++m) {
        out[m] = w0 * (e0[m] * psi[m]);
        if (m < n) out[m] += w1 * (e1[m + 1] * psi[m + 1]);
    }
    return out;
}

Eigen::MatrixXcd KrausPair::e_dense(int k) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    if (k == 0) {
        for (int m = 0; m <= n; ++m) out(m, m) = e0[m];
    } else {
        for (int m = 1; m <= n; ++m) out(m - 1, m) = e1[m];
    }
    return out;
}

Eigen::MatrixXcd KrausPair::f_dense(int k) const { return mix(k, 0) * e_dense(0) + mix(k, 1) * e_dense(1); }

Eigen::MatrixXcd KrausPair::channel(const Eigen::MatrixXcd& rho) const {
    const Eigen::MatrixXcd f0 = f_dense(0);
    const Eigen::MatrixXcd f1 = f_dense(1);
    return f0 * rho * f0.adjoint() + f1 * rho * f1.adjoint();
}

KrausPair kraus_naive(int n, double gamma, double dt) {
    ModelParams{n, gamma}.validate();
    if (!(dt > 0.0) || !(dt * gamma <= 1e-2)) throw DomainError("kraus_naive: need 0 < dt * gamma <= 1e-2");
    KrausPair p;
    p.n = n;
    p.dt = dt;
    p.gamma = gamma;
    p.e0.resize(n + 1);
    p.e1.resize(n + 1);
    for (int m = 0; m <= n; ++m) {
        // L^dagger L |m> = beta_sq(m)/2 |m>.
        const double b2 = beta_sq(m, n);
        p.e0[m] = 1.0 - 0.5 * dt * gamma * b2;
        p.e1[m] = std::sqrt(dt * gamma * b2);
    }
    return p;
}

KrausPair remix(const KrausPair& pair, const Eigen::Matrix2cd& u) {
    check_unitary(u);
    KrausPair out = pair;
    out.mix = u * pair.mix;
    return out;
}

KrausPair remix(const KrausPair& pair, const MixingUnitary& u) {
    if (!(u.theta_f >= 0.0 && u.theta_f <= 0.5 * std::numbers::pi))
        throw DomainError("theta_f must lie in [0, pi/2]");
    KrausPair out = remix(pair, u.entries());
    out.theta_f = u.theta_f;
    out.phi_f = u.phi_f;
    return out;
}

StepResult qt_step(const SymmetricState& state, const KrausPair& pair, double draw) {
    if (state.amps.size() != pair.n + 1) throw DomainError("qt_step: state dimension does not match Kraus pair");
    Eigen::VectorXcd f0 = pair.apply(0, state.amps);
    Eigen::VectorXcd f1 = pair.apply(1, state.amps);
    StepResult r;
    r.p0 = f0.squaredNorm();
    r.p1 = f1.squaredNorm();
    if (r.p0 < 1e-30 && r.p1 < 1e-30) throw NumericalBreakdown("qt_step: both branch probabilities vanished");
    const double total = r.p0 + r.p1;
    r.p0 /= total;
    r.p1 /= total;
    r.index = draw < r.p0 ? 0 : 1;
    Eigen::VectorXcd& chosen = r.index == 0 ? f0 : f1;
    r.state.n = state.n;
    r.state.amps = chosen / chosen.norm();
    return r;
}

double bloch_length(const SymmetricState& state) {
    const int n = state.n;
    double sz = 0.0;
    std::complex<double> sminus = 0.0;
    for (int m = 0; m <= n; ++m) {
        sz += std::norm(state.amps[m]) * (m - 0.5 * n);
        if (m > 0) sminus += std::conj(state.amps[m - 1]) * state.amps[m] * std::sqrt(double(m) * (n - m + 1));
    }
    return 2.0 / n * std::sqrt(sz * sz + std::norm(sminus));
}

double mean_excitation(const SymmetricState& state) {
    double acc = 0.0;
    for (int m = 0; m <= state.n; ++m) acc += m * std::norm(state.amps[m]);
    return acc;
}

namespace {

/// Reduced-density blocks of E0 psi and E1 psi; the post-operation matrices
/// are affine in e^{2 i phi}, so each cost evaluation needs no state vectors.
/// Both branch matrices live in the joint column space of the two block
/// coefficient matrices, so everything is compressed onto an orthonormal
/// basis of that space first. Directions with singular values below 1e-13
/// of the largest are dropped; they carry eigenvalues far below the 1e-15
/// entropy floor. Near-product states need only a handful of directions.
/// Small problems skip the compression.
class PostOperationCost {
public:
    PostOperationCost(const SymmetricState& state, double theta_f, const KrausPair& naive, const SchmidtMap& map)
        : c_(std::cos(theta_f)), s_(std::sin(theta_f)) {
        const Eigen::MatrixXcd ca = map.coefficients(naive.apply_e(0, state.amps));
        const Eigen::MatrixXcd cb = map.coefficients(naive.apply_e(1, state.amps));
        Eigen::MatrixXcd pa, pb;
        if (ca.rows() <= kDirectDim) {
            pa = ca;
            pb = cb;
        } else {
            Eigen::MatrixXcd joint(ca.rows(), ca.cols() + cb.cols());
            joint << ca, cb;
            const Eigen::BDCSVD<Eigen::MatrixXcd> svd(joint, Eigen::ComputeThinU);
            const Eigen::VectorXd& sv = svd.singularValues();
            Eigen::Index rank = 0;
            while (rank < sv.size() && sv[rank] > kRelativeCutoff * sv[0]) ++rank;
            const Eigen::MatrixXcd q = svd.matrixU().leftCols(std::max<Eigen::Index>(rank, 1));
            pa = q.adjoint() * ca;
            pb = q.adjoint() * cb;
        }
        const Eigen::Index rank = pa.rows();
        const Eigen::MatrixXcd raa = pa * pa.adjoint();
        const Eigen::MatrixXcd rbb = pb * pb.adjoint();
        rab_ = c_ * s_ * (pa * pb.adjoint());
        base0_ = c_ * c_ * raa + s_ * s_ * rbb;
        base1_ = s_ * s_ * raa + c_ * c_ * rbb;
        total_ = raa.trace().real() + rbb.trace().real();
        work_.resize(rank, rank);
        solver_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(rank);
    }

    double operator()(double phi) const {
        const std::complex<double> w = std::polar(1.0, 2.0 * phi);
        cross_.noalias() = w * rab_;
        work_.noalias() = cross_.adjoint();
        cross_ += work_;
        work_ = base0_ + cross_;
        double value = term();
        work_ = base1_ - cross_;
        value += term();
        return value;
    }

private:
    static constexpr double kRelativeCutoff = 1e-13;
    // Below this size the compression costs more than it saves.
    static constexpr Eigen::Index kDirectDim = 10;

    double term() const {
        const double p = work_.trace().real();
        if (!(p > 1e-30)) return 0.0;
        solver_.compute(work_, Eigen::EigenvaluesOnly);
        double s = 0.0;
        for (double x : solver_.eigenvalues()) {
            x /= p;
            if (x > 1e-15) s -= x * std::log2(x);
        }
        return p / total_ * s;
    }

    double c_, s_;
    Eigen::MatrixXcd base0_, base1_, rab_;
    double total_ = 1.0;
    mutable Eigen::MatrixXcd work_, cross_;
    mutable Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver_;
};

}  // namespace

double post_operation_entropy(const SymmetricState& state, double theta_f, double phi, const KrausPair& naive,
                              const SchmidtMap& map) {
    return PostOperationCost(state, theta_f, naive, map)(phi);
}

PhiChoice optimize_phi(const SymmetricState& state, double theta_f, const KrausPair& naive, int grid,
                       const SchmidtMap& map) {
    if (grid < 8) throw DomainError("optimize_phi: grid must be >= 8");
    const PostOperationCost cost(state, theta_f, naive, map);
    const double h = std::numbers::pi / grid;
    int best = 0;
    double best_value = cost(0.0);
    for (int i = 1; i < grid; ++i) {
        const double v = cost(i * h);
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    // Brent's tolerance is relative to |x|, so it runs on x in [1, 3] with
    // phi = (best + x - 2) h; 28 bits then locate phi to about 1e-8.
    const auto on_bracket = [&](double x) { return cost((best + x - 2.0) * h); };
    const auto [x, fx] = boost::math::tools::brent_find_minima(on_bracket, 1.0, 3.0, 28);
    PhiChoice out{best * h, best_value};
    if (fx < best_value) out = {(best + x - 2.0) * h, fx};
    out.phi_opt = std::fmod(out.phi_opt + 2.0 * std::numbers::pi, std::numbers::pi);
    return out;
}

PhiChoice optimize_phi(const SymmetricState& state, double theta_f, const KrausPair& naive, int grid) {
    if (state.n < 2) return {0.0, 0.0};
    return optimize_phi(state, theta_f, naive, grid, SchmidtMap(state.n, Bipartition::half(state.n)));
}

TrajectoryRng::TrajectoryRng(std::uint64_t seed, std::uint64_t traj_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(traj_index), static_cast<std::uint32_t>(traj_index >> 32)};
    engine_.seed(seq);
}

double TrajectoryRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int step_count(const TrajectoryOptions& opts) {
    if (!(opts.dt > 0.0) || !(opts.t_max >= 0.0)) throw DomainError("trajectory needs dt > 0 and t_max >= 0");
    return static_cast<int>(std::llround(opts.t_max / opts.dt));
}

std::vector<double> record_times(const TrajectoryOptions& opts) {
    if (opts.record_stride < 1) throw DomainError("record_stride must be >= 1");
    std::vector<double> t;
    const int steps = step_count(opts);
    for (int k = 0; k <= steps; k += opts.record_stride) t.push_back(k * opts.dt);
    return t;
}

TrajectoryRecord run_trajectory(const ModelParams& params, const TrajectoryOptions& opts, std::uint64_t seed,
                                int traj_index) {
    params.validate();
    const int n = params.n_emitters;
    const KrausPair naive = kraus_naive(n, params.gamma, opts.dt);
    if (!(opts.theta_f >= 0.0 && opts.theta_f <= 0.5 * std::numbers::pi))
        throw DomainError("theta_f must lie in [0, pi/2]");
    const int steps = step_count(opts);
    if (opts.record_stride < 1) throw DomainError("record_stride must be >= 1");
    std::optional<SchmidtMap> map;
    if (n >= 2) map.emplace(n, Bipartition::half(n));

    TrajectoryRecord rec;
    rec.traj_index = traj_index;
    rec.seed = seed;
    SymmetricState state = SymmetricState::dicke(n, n);
    TrajectoryRng rng(seed, static_cast<std::uint64_t>(traj_index));

    auto record = [&](int k) {
        rec.times.push_back(k * opts.dt);
        rec.xi.push_back(bloch_length(state));
        rec.entropy_bits.push_back(map ? map->entropy(state.amps) : 0.0);
        rec.mean_excitation.push_back(mean_excitation(state));
        std::vector<double> pops(n + 1);
        for (int m = 0; m <= n; ++m) pops[m] = std::norm(state.amps[m]);
        rec.populations.push_back(std::move(pops));
    };

    record(0);
    for (int k = 1; k <= steps; ++k) {
        const double draw = rng.uniform();
        StepResult r;
        try {
            switch (opts.strategy) {
                case Strategy::Naive:
                    r = qt_step(state, naive, draw);
                    break;
                case Strategy::PhiRandom: {
                    const double phi = 2.0 * std::numbers::pi * rng.uniform();
                    r = qt_step(state, remix(naive, MixingUnitary{opts.theta_f, phi}), draw);
                    break;
                }
                case Strategy::PhiOpt: {
                    const double phi = map ? optimize_phi(state, opts.theta_f, naive, opts.phi_grid, *map).phi_opt : 0.0;
                    r = qt_step(state, remix(naive, MixingUnitary{opts.theta_f, phi}), draw);
                    break;
                }
            }
        } catch (const NumericalBreakdown& e) {
            throw NumericalBreakdown(std::string(e.what()) + " (trajectory " + std::to_string(traj_index) +
                                     ", step " + std::to_string(k) + ")");
        }
        state = std::move(r.state);
        rec.jump_count += r.index;
        if (k % opts.record_stride == 0) record(k);
    }
    return rec;
}

namespace {

struct Moments {
    std::vector<double> sum, sumsq;

    explicit Moments(std::size_t size = 0) : sum(size, 0.0), sumsq(size, 0.0) {}
    void add(const std::vector<double>& x) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum[i] += x[i];
            sumsq[i] += x[i] * x[i];
        }
    }
    void finish(int n, std::vector<double>& mean, std::vector<double>& stderr_out) const {
        mean.resize(sum.size());
        stderr_out.resize(sum.size());
        for (std::size_t i = 0; i < sum.size(); ++i) {
            mean[i] = sum[i] / n;
            const double var = n > 1 ? std::max(0.0, (sumsq[i] - n * mean[i] * mean[i]) / (n - 1)) : 0.0;
            stderr_out[i] = std::sqrt(var / n);
        }
    }
};

}  // namespace

EnsembleStats ensemble_run(const ModelParams& params, const TrajectoryOptions& opts, int n_traj, std::uint64_t seed,
                           int workers) {
    params.validate();
    if (n_traj < 1) throw DomainError("ensemble_run: n_traj must be >= 1");
    const int n = params.n_emitters;
    const std::vector<double> times = record_times(opts);
    const std::size_t nt = times.size();

    Moments te(nt), xi(nt), exc(nt), extremes(2);
    std::vector<Moments> pops(n + 1, Moments(nt));
    EnsembleStats out;
    out.strategy = opts.strategy;
    out.n_traj = n_traj;
    out.times = times;

    // Blocks bound memory; within a block trajectories run in parallel and
    // are then folded in index order.
    const int block = std::max(1, workers) * 8;
    std::vector<TrajectoryRecord> recs;
    for (int start = 0; start < n_traj; start += block) {
        const int count = std::min(block, n_traj - start);
        recs.assign(count, {});
        parallel_for(static_cast<std::size_t>(count), workers,
                     [&](std::size_t i) { recs[i] = run_trajectory(params, opts, seed, start + static_cast<int>(i)); });
        for (const TrajectoryRecord& r : recs) {
            te.add(r.entropy_bits);
            xi.add(r.xi);
            exc.add(r.mean_excitation);
            std::vector<double> col(nt);
            for (int m = 0; m <= n; ++m) {
                for (std::size_t j = 0; j < nt; ++j) col[j] = r.populations[j][m];
                pops[m].add(col);
            }
            extremes.add({*std::max_element(r.entropy_bits.begin(), r.entropy_bits.end()),
                          *std::min_element(r.xi.begin(), r.xi.end())});
            out.jump_count += r.jump_count;
        }
    }

    std::vector<double> unused;
    te.finish(n_traj, out.te_mean, out.te_stderr);
    xi.finish(n_traj, out.xi_mean, out.xi_stderr);
    exc.finish(n_traj, out.mean_excitation, unused);
    std::vector<std::vector<double>> pm(n + 1), ps(n + 1);
    for (int m = 0; m <= n; ++m) pops[m].finish(n_traj, pm[m], ps[m]);
    out.pops_mean.assign(nt, std::vector<double>(n + 1));
    out.pops_stderr.assign(nt, std::vector<double>(n + 1));
    for (std::size_t j = 0; j < nt; ++j)
        for (int m = 0; m <= n; ++m) {
            out.pops_mean[j][m] = pm[m][j];
            out.pops_stderr[j][m] = ps[m][j];
        }
    std::vector<double> em, es;
    extremes.finish(n_traj, em, es);
    out.s_max_mean = em[0];
    out.s_max_stderr = es[0];
    out.xi_min_mean = em[1];
    out.xi_min_stderr = es[1];
    return out;
}

}  // namespace dicke
