#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "dicke/dicke_core.hpp"
#include "dicke/double_double.hpp"
#include "dicke/scalar.hpp"

namespace dicke {

/// Column-stochastic map from CSS polar-angle weights to Dicke populations.
///
/// Column a is the excitation distribution of N emitters each excited with
/// probability z_a = cos^2(theta_a / 2), theta_a = eta * a * pi / N. Rows are
/// indexed by d, the number of emitters in the ground state, so that
/// entries(d, a) = C(N, d) z_a^(N-d) (1 - z_a)^d.
struct MappingMatrix {
    int n = 0;
    double eta = 0.0;
    std::vector<double> thetas;
    std::vector<double> z;
    Eigen::MatrixXd entries;
    /// Uniform azimuths per polar angle; averaging over them removes all
    /// coherences analytically, so the count never enters the numerics.
    int n_phi = 0;
};

/// Weights P_a of the CSS mixture at one time and spacing parameter.
struct CssDecomposition {
    int n = 0;
    double eta = 0.0;
    double time = 0.0;
    /// Stored with ~32 significant digits so extended-precision solutions
    /// survive round trips; use weights_double() for reporting.
    std::vector<DoubleDouble> weights;
    /// Full-precision weights, kept only when the arithmetic is "mpfr-120".
    std::vector<MpFloat> weights_mp;
    double negativity = 0.0;
    /// max_d |(M P)_d - rho_d| in the arithmetic that produced the solve.
    double residual = 0.0;
    double condition = 0.0;
    /// Arithmetic that produced the weights: "double", "double-double" or "mpfr-120".
    std::string arithmetic;

    std::vector<double> weights_double() const;
    std::vector<double> thetas() const;
};

/// Target populations held at every arithmetic level the extended solver may need.
///
/// Entries are indexed by excitation count m. Values below the truncation
/// floor of each level are set to zero before solving. The MPFR level is
/// only materialized when a solve escalates to it.
class TargetPopulations {
public:
    TargetPopulations() = default;
    TargetPopulations(int n, double time, std::vector<double> d, std::vector<DoubleDouble> dd,
                      std::function<std::vector<MpFloat>()> mp_source, bool native_extended);

    int n() const { return n_; }
    double time() const { return time_; }
    const std::vector<double>& d() const { return d_; }
    const std::vector<DoubleDouble>& dd() const { return dd_; }
    const std::vector<MpFloat>& mp() const;
    /// Whether the wider levels were computed natively or promoted from doubles.
    bool native_extended() const { return native_extended_; }

private:
    struct MpCache {
        std::once_flag once;
        std::function<std::vector<MpFloat>()> source;
        std::vector<MpFloat> values;
    };
    int n_ = 0;
    double time_ = 0.0;
    std::vector<double> d_;
    std::vector<DoubleDouble> dd_;
    std::shared_ptr<MpCache> mp_;
    bool native_extended_ = false;
};

/// Truncation floors: 1e-16 in double, and the unit roundoff of each wider format.
double truncation_floor(std::string_view arithmetic);

/// Builds the target from double populations (extended levels are promoted).
TargetPopulations target_from(const DickePopulations& rho);

/// Exact target at time t computed natively at every requested level.
TargetPopulations exact_target(const ModelParams& params, double t, Precision precision);

MappingMatrix build_mapping(int n, double eta, Precision precision);

/// Solves M(eta) P = rho. Extended precision tries double-double first and
/// escalates to 120-digit MPFR when the condition estimate exceeds what
/// double-double can resolve or the residual max |M P - rho| exceeds 1e-26.
/// Throws IllConditionedError carrying the condition estimate when the
/// widest available arithmetic is still insufficient.
CssDecomposition solve_css(const TargetPopulations& target, double eta, Precision precision);
CssDecomposition solve_css(const DickePopulations& rho, double eta, Precision precision);

double negativity(std::span<const double> weights);

/// Closed-form lower-passage spacing for N = 2.
/// Throws DomainError for t <= 0 unless `allow_zero` is set and t == 0.
double eta_analytic_n2(double t, double gamma = 1.0, bool allow_zero = false);

/// M(eta) P mapped back to Dicke populations indexed by excitation count.
DickePopulations reconstruct_rho(const CssDecomposition& decomp);
std::vector<DoubleDouble> reconstruct_rho_extended(const CssDecomposition& decomp);

struct NegativityField {
    std::vector<double> t_grid;
    std::vector<double> eta_grid;
    /// values[i][j] = clamp(log10 negativity, -10, 0) at (t_grid[i], eta_grid[j]).
    std::vector<std::vector<double>> values;
    /// Cells whose solve was too ill-conditioned; they carry the ceiling value 0.
    int warnings = 0;
};

inline constexpr double kLogNegativityFloor = -10.0;
inline constexpr double kLogNegativityCeiling = 0.0;

double clamped_log_negativity(double negativity);

NegativityField scan_landscape(const ModelParams& params, std::span<const double> t_grid,
                               std::span<const double> eta_grid, Precision precision, int workers = 1);

enum class Branch { Lower, Upper };

struct EtaCurve {
    std::vector<double> t_grid;
    std::vector<double> eta;
    std::vector<double> negativity;
    Branch branch = Branch::Lower;
};

struct TraceOptions {
    double window = 0.05;
    int grid_points = 200;
    double refine_width = 1e-12;
    /// Candidates at or below tol * tie_fraction count as tied; the extreme
    /// one in the branch direction is kept and its boundary located by bisection.
    double tie_fraction = 1e-3;
    /// Largest eta the branch may use (lower branch: 1).
    double eta_max = 0.0;
    /// Coarse local minima refined per window, lowest first.
    int max_basins = 6;
    /// Times the window may slide when its best coarse value sits on an edge.
    int max_shifts = 8;
    /// Center of the first search window; 0 selects the N = 2 closed form at that time.
    double seed_eta = 0.0;
    int workers = 1;
};

struct PassageResult {
    EtaCurve curve;
    std::vector<CssDecomposition> decompositions;
    /// Times where no eta reached the tolerance; they are absent from `curve`.
    std::vector<double> gaps;
    /// Accepted points that moved more than half a window from the prediction.
    std::vector<double> jumps;
};

PassageResult trace_passage(const ModelParams& params, std::span<const double> t_grid, Branch branch,
                            double tol, Precision precision, TraceOptions options = {});

std::string_view to_string(Branch b);
Branch parse_branch(std::string_view s);

}  // namespace dicke
