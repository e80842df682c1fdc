#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "dicke/dicke_core.hpp"
#include "dicke/entanglement.hpp"

namespace dicke {

enum class Strategy { Naive, PhiRandom, PhiOpt };

std::string_view to_string(Strategy s);
/// Accepts "naive", "phi-random" and "phi-opt".
Strategy parse_strategy(std::string_view s);

/// u(theta, phi) = R(theta) diag(e^{i phi}, e^{-i phi}).
struct MixingUnitary {
    double theta_f = 0.0;
    double phi_f = 0.0;

    Eigen::Matrix2cd entries() const;
};

/// Throws DomainError when ||u^dagger u - 1||_max exceeds `tol`.
void check_unitary(const Eigen::Matrix2cd& u, double tol = 1e-12);

/**
 * Two Kraus operators for one timestep of the collective decay channel.
 *
 * The naive operators are E0 = 1 - dt gamma L^dagger L, which is diagonal, and
 * E1 = sqrt(2 dt gamma) L, which lowers m by one. The pair stores them
 * structurally and the remixed operators as F_n = sum_k mix(n, k) E_k.
 */
struct KrausPair {
    int n = 0;
    double dt = 0.0;
    double gamma = 0.0;
    /// E0 |m> = e0[m] |m>.
    Eigen::VectorXd e0;
    /// E1 |m> = e1[m] |m - 1>; e1[0] = 0.
    Eigen::VectorXd e1;
    Eigen::Matrix2cd mix = Eigen::Matrix2cd::Identity();
    double theta_f = 0.0;
    double phi_f = 0.0;

    Eigen::VectorXcd apply_e(int k, const Eigen::VectorXcd& psi) const;
    /// F_k psi.
    Eigen::VectorXcd apply(int k, const Eigen::VectorXcd& psi) const;
    Eigen::MatrixXcd e_dense(int k) const;
    Eigen::MatrixXcd f_dense(int k) const;
    /// sum_n F_n rho F_n^dagger.
    Eigen::MatrixXcd channel(const Eigen::MatrixXcd& rho) const;
};

/// Throws DomainError unless 0 < dt gamma <= 1e-2.
KrausPair kraus_naive(int n, double gamma, double dt);

/// Composes `u` onto the current mixing. Throws DomainError if u is not unitary.
KrausPair remix(const KrausPair& pair, const Eigen::Matrix2cd& u);
KrausPair remix(const KrausPair& pair, const MixingUnitary& u);

struct StepResult {
    SymmetricState state;
    int index = 0;
    double p0 = 0.0;
    double p1 = 0.0;
};

/// Samples k with probability p_k / (p_0 + p_1) using `draw` in [0, 1), applies
/// F_k and renormalizes. Throws NumericalBreakdown when both p_k < 1e-30.
StepResult qt_step(const SymmetricState& state, const KrausPair& pair, double draw);

/// (2/N) |<S>|, the mean collective spin length scaled to [0, 1].
double bloch_length(const SymmetricState& state);

double mean_excitation(const SymmetricState& state);

struct PhiChoice {
    double phi_opt = 0.0;
    /// p0 S0 + p1 S1 with p normalized to sum 1.
    double s_po = 0.0;
};

/// Post-operation entropy p0 S0 + p1 S1 for the naive pair remixed by u(theta_f, phi).
double post_operation_entropy(const SymmetricState& state, double theta_f, double phi, const KrausPair& naive,
                              const SchmidtMap& map);

/// Minimizes post_operation_entropy over phi in [0, pi): `grid` coarse samples,
/// then Brent refinement (golden section with parabolic steps) to about 1e-8.
PhiChoice optimize_phi(const SymmetricState& state, double theta_f, const KrausPair& naive, int grid,
                       const SchmidtMap& map);
PhiChoice optimize_phi(const SymmetricState& state, double theta_f, const KrausPair& naive, int grid = 16);

/**
 * Uniform draws for one trajectory.
 *
 * The stream is a 64-bit Mersenne twister seeded from (seed, traj_index)
 * through std::seed_seq, so each trajectory's draws depend only on those two
 * numbers and not on scheduling.
 */
class TrajectoryRng {
public:
    TrajectoryRng(std::uint64_t seed, std::uint64_t traj_index);
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

private:
    std::mt19937_64 engine_;
};

struct TrajectoryOptions {
    double dt = 1e-3;
    double t_max = 12.0;
    Strategy strategy = Strategy::Naive;
    double theta_f = 0.7853981633974483;
    int record_stride = 10;
    int phi_grid = 16;
};

struct TrajectoryRecord {
    int traj_index = 0;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> xi;
    std::vector<double> entropy_bits;
    std::vector<double> mean_excitation;
    /// populations[r][m] = |c_m|^2 at record r.
    std::vector<std::vector<double>> populations;
    int jump_count = 0;
};

/// Number of steps and recorded times implied by the options.
int step_count(const TrajectoryOptions& opts);
std::vector<double> record_times(const TrajectoryOptions& opts);

TrajectoryRecord run_trajectory(const ModelParams& params, const TrajectoryOptions& opts, std::uint64_t seed,
                                int traj_index);

struct EnsembleStats {
    Strategy strategy = Strategy::Naive;
    int n_traj = 0;
    std::vector<double> times;
    std::vector<double> te_mean, te_stderr;
    std::vector<double> xi_mean, xi_stderr;
    std::vector<double> mean_excitation;
    std::vector<std::vector<double>> pops_mean, pops_stderr;
    /// Trajectory averages of max_t S and min_t xi.
    double s_max_mean = 0.0, s_max_stderr = 0.0;
    double xi_min_mean = 0.0, xi_min_stderr = 0.0;
    int jump_count = 0;
};

/// Runs n_traj trajectories (indices 0..n_traj-1) on `workers` threads and
/// reduces them in index order; results do not depend on the worker count.
EnsembleStats ensemble_run(const ModelParams& params, const TrajectoryOptions& opts, int n_traj, std::uint64_t seed,
                           int workers = 1);

}  // namespace dicke
