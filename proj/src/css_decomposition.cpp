#include "dicke/css_decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>

#include "dicke/dense_lu.hpp"
#include "dicke/errors.hpp"
#include "dicke/parallel.hpp"

namespace dicke {

std::string_view to_string(Precision p) { return p == Precision::Double ? "double" : "extended"; }

Precision parse_precision(std::string_view s) {
    if (s == "double") return Precision::Double;
    if (s == "extended") return Precision::Extended;
    throw DomainError("precision must be 'double' or 'extended', got '" + std::string(s) + "'");
}

std::string_view to_string(Branch b) { return b == Branch::Lower ? "lower" : "upper"; }

Branch parse_branch(std::string_view s) {
    if (s == "lower") return Branch::Lower;
    if (s == "upper") return Branch::Upper;
    throw DomainError("branch must be 'lower' or 'upper', got '" + std::string(s) + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A level's answer is trusted when cond * unit_roundoff stays below this.
constexpr double kAccuracyTarget = 1e-12;
// Certified extended solves also need max |M P - rho| below this. The residual
// grows like unit_roundoff * |P|, which is large off the separable passage.
constexpr double kResidualTarget = 1e-26;

DoubleDouble to_dd(double x) { return DoubleDouble(x); }
DoubleDouble to_dd(const DoubleDouble& x) { return x; }
DoubleDouble to_dd(const MpFloat& x) {
    const double hi = x.convert_to<double>();
    const double lo = MpFloat(x - MpFloat(hi)).convert_to<double>();
    return DoubleDouble::from_sum(hi, lo);
}

void check_eta(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive and finite");
}

/// Column-major (n+1)x(n+1) mapping matrix in arithmetic S.
template <class S>
std::vector<S> mapping_entries(int n, double eta) {
    using std::cos;
    using std::sin;
    using T = ScalarTraits<S>;
    const int dim = n + 1;
    std::vector<S> binom(dim);
    binom[0] = T::from(1.0);
    for (int d = 0; d < n; ++d)
        binom[d + 1] = binom[d] * T::from(static_cast<double>(n - d)) / T::from(static_cast<double>(d + 1));

    // theta_a / 2 = eta * a * pi / (2N)
    const S step = T::from(eta) * T::pi() / T::from(2.0 * n);
    std::vector<S> out(static_cast<std::size_t>(dim) * dim);
    std::vector<S> zp(dim), wp(dim);
    for (int a = 0; a < dim; ++a) {
        const S half = step * T::from(static_cast<double>(a));
        const S c = cos(half);
        const S s = sin(half);
        const S z = c * c;
        const S w = s * s;
        zp[0] = T::from(1.0);
        wp[0] = T::from(1.0);
        for (int k = 1; k < dim; ++k) {
            zp[k] = zp[k - 1] * z;
            wp[k] = wp[k - 1] * w;
        }
        for (int d = 0; d < dim; ++d) out[static_cast<std::size_t>(a) * dim + d] = binom[d] * zp[n - d] * wp[d];
    }
    return out;
}

template <class S>
void truncate(std::vector<S>& v, double floor) {
    const S f = ScalarTraits<S>::from(floor);
    for (S& x : v)
        if (x < f) x = ScalarTraits<S>::from(0.0);
}

template <class S>
struct LevelSolve {
    std::vector<S> p;
    double condition = kInf;
    double residual = kInf;
    double negativity = kInf;
};

/// Solves M P = rhs where rhs is indexed by excitation count.
template <class S>
LevelSolve<S> solve_level(int n, double eta, const std::vector<S>& rho_m) {
    using std::abs;
    using T = ScalarTraits<S>;
    const int dim = n + 1;
    std::vector<S> m = mapping_entries<S>(n, eta);
    std::vector<S> rhs(dim);
    for (int d = 0; d < dim; ++d) rhs[d] = rho_m[n - d];

    DenseLu<S> lu(m, dim);
    LevelSolve<S> out;
    if (lu.singular()) return out;
    out.p = lu.solve(rhs);
    out.condition = lu.condition_estimate();

    S worst = T::from(0.0);
    for (int d = 0; d < dim; ++d) {
        S acc = -rhs[d];
        for (int a = 0; a < dim; ++a) acc += m[static_cast<std::size_t>(a) * dim + d] * out.p[a];
        worst = std::max(worst, S(abs(acc)));
    }
    out.residual = T::to_double(worst);
    S neg = T::from(0.0);
    for (const S& x : out.p)
        if (x < T::from(0.0)) neg -= x;
    out.negativity = T::to_double(neg);
    return out;
}

template <class S>
CssDecomposition package(const LevelSolve<S>& s, int n, double eta, double time) {
    CssDecomposition d;
    d.n = n;
    d.eta = eta;
    d.time = time;
    d.weights.reserve(s.p.size());
    for (const S& x : s.p) d.weights.push_back(to_dd(x));
    if constexpr (std::is_same_v<S, MpFloat>) d.weights_mp = s.p;
    d.negativity = s.negativity;
    d.residual = s.residual;
    d.condition = s.condition;
    d.arithmetic = std::string(ScalarTraits<S>::name);
    return d;
}

bool is_fully_inverted(const std::vector<double>& rho) {
    for (std::size_t m = 0; m + 1 < rho.size(); ++m)
        if (rho[m] != 0.0) return false;
    return rho.back() == 1.0;
}

std::string ill_conditioned_message(double eta, double t, double cond, std::string_view arithmetic) {
    std::ostringstream os;
    os << "mapping matrix too ill-conditioned at eta=" << eta << ", t=" << t << " (condition estimate " << cond
       << " in " << arithmetic << ")";
    return os.str();
}

}  // namespace

std::vector<double> CssDecomposition::weights_double() const {
    std::vector<double> out;
    out.reserve(weights.size());
    for (const DoubleDouble& w : weights) out.push_back(static_cast<double>(w));
    return out;
}

std::vector<double> CssDecomposition::thetas() const {
    std::vector<double> out(n + 1);
    for (int a = 0; a <= n; ++a) out[a] = eta * a * std::numbers::pi / n;
    return out;
}

TargetPopulations::TargetPopulations(int n, double time, std::vector<double> d, std::vector<DoubleDouble> dd,
                                     std::function<std::vector<MpFloat>()> mp_source, bool native_extended)
    : n_(n), time_(time), d_(std::move(d)), dd_(std::move(dd)), mp_(std::make_shared<MpCache>()),
      native_extended_(native_extended) {
    mp_->source = std::move(mp_source);
}

const std::vector<MpFloat>& TargetPopulations::mp() const {
    if (!mp_) throw DomainError("target populations are empty");
    std::call_once(mp_->once, [this] {
        if (mp_->source) {
            mp_->values = mp_->source();
        } else {
            mp_->values.reserve(d_.size());
            for (double x : d_) mp_->values.emplace_back(x);
        }
        truncate(mp_->values, truncation_floor("mpfr-120"));
    });
    return mp_->values;
}

double truncation_floor(std::string_view arithmetic) {
    if (arithmetic == "double") return 1e-16;
    if (arithmetic == "double-double") return 1e-32;
    if (arithmetic == "mpfr-120") return 1e-120;
    throw DomainError("unknown arithmetic '" + std::string(arithmetic) + "'");
}

TargetPopulations target_from(const DickePopulations& rho) {
    if (rho.probs.size() < 2) throw DomainError("target needs at least two populations");
    std::vector<double> d = rho.probs;
    truncate(d, truncation_floor("double"));
    std::vector<DoubleDouble> dd(d.begin(), d.end());
    return TargetPopulations(rho.n(), rho.time, std::move(d), std::move(dd), nullptr, false);
}

TargetPopulations exact_target(const ModelParams& params, double t, Precision precision) {
    std::vector<double> d = evolve_uniformized<double>(params, t);
    truncate(d, truncation_floor("double"));
    if (precision == Precision::Double) {
        std::vector<DoubleDouble> dd(d.begin(), d.end());
        return TargetPopulations(params.n_emitters, t, std::move(d), std::move(dd), nullptr, false);
    }
    std::vector<DoubleDouble> dd = evolve_uniformized<DoubleDouble>(params, t);
    truncate(dd, truncation_floor("double-double"));
    return TargetPopulations(params.n_emitters, t, std::move(d), std::move(dd),
                             [params, t] { return evolve_uniformized<MpFloat>(params, t); }, true);
}

MappingMatrix build_mapping(int n, double eta, Precision precision) {
    if (n < 1) throw DomainError("build_mapping: n must be >= 1");
    check_eta(eta);
    MappingMatrix m;
    m.n = n;
    m.eta = eta;
    m.n_phi = 2 * n;
    m.thetas.resize(n + 1);
    m.z.resize(n + 1);
    for (int a = 0; a <= n; ++a) {
        m.thetas[a] = eta * a * std::numbers::pi / n;
        const double c = std::cos(0.5 * m.thetas[a]);
        m.z[a] = c * c;
    }
    m.entries.resize(n + 1, n + 1);
    if (precision == Precision::Double) {
        const std::vector<double> e = mapping_entries<double>(n, eta);
        for (int a = 0; a <= n; ++a)
            for (int d = 0; d <= n; ++d) m.entries(d, a) = e[static_cast<std::size_t>(a) * (n + 1) + d];
    } else {
        const std::vector<DoubleDouble> e = mapping_entries<DoubleDouble>(n, eta);
        for (int a = 0; a <= n; ++a)
            for (int d = 0; d <= n; ++d)
                m.entries(d, a) = static_cast<double>(e[static_cast<std::size_t>(a) * (n + 1) + d]);
    }
    return m;
}

namespace {

/// `certify` additionally requires the double-double residual to meet
/// kResidualTarget; searches that only need the negativity skip it.
CssDecomposition solve_ladder(const TargetPopulations& target, double eta, Precision precision, bool certify) {
    check_eta(eta);
    const int n = target.n();
    const double t = target.time();

    if (is_fully_inverted(target.d())) {
        // P = delta_{a0} for every eta because column 0 of M is the unit vector on d = 0.
        CssDecomposition d;
        d.n = n;
        d.eta = eta;
        d.time = t;
        d.weights.assign(n + 1, DoubleDouble(0.0));
        d.weights[0] = DoubleDouble(1.0);
        d.condition = DenseLu<double>(mapping_entries<double>(n, eta), n + 1).condition_estimate();
        d.arithmetic = precision == Precision::Double ? "double" : "double-double";
        return d;
    }

    if (precision == Precision::Double) {
        const auto s = solve_level<double>(n, eta, target.d());
        if (!(s.condition * ScalarTraits<double>::epsilon() <= 1.0))
            throw IllConditionedError(ill_conditioned_message(eta, t, s.condition, "double"), s.condition);
        return package(s, n, eta, t);
    }

    const auto dd = solve_level<DoubleDouble>(n, eta, target.dd());
    if (dd.condition * ScalarTraits<DoubleDouble>::epsilon() <= kAccuracyTarget &&
        (!certify || dd.residual <= kResidualTarget))
        return package(dd, n, eta, t);

    const auto mp = solve_level<MpFloat>(n, eta, target.mp());
    if (mp.condition * ScalarTraits<MpFloat>::epsilon() <= kAccuracyTarget) return package(mp, n, eta, t);
    throw IllConditionedError(ill_conditioned_message(eta, t, mp.condition, "mpfr-120"), mp.condition);
}

}  // namespace

CssDecomposition solve_css(const TargetPopulations& target, double eta, Precision precision) {
    return solve_ladder(target, eta, precision, true);
}

CssDecomposition solve_css(const DickePopulations& rho, double eta, Precision precision) {
    return solve_css(target_from(rho), eta, precision);
}

double negativity(std::span<const double> weights) {
    double neg = 0.0;
    for (double w : weights) neg -= std::min(w, 0.0);
    return neg;
}

double eta_analytic_n2(double t, double gamma, bool allow_zero) {
    if (!(gamma > 0.0)) throw DomainError("eta_analytic_n2: gamma must be positive");
    if (t == 0.0 && allow_zero) return 0.0;
    if (!(t > 0.0)) throw DomainError("eta_analytic_n2: t must be positive");
    const double x = t * gamma;
    if (std::isinf(x)) return 1.0;
    const double e = std::exp(-x);
    // 2(1 - e^-x) - x e^-x, with 1 - e^-x = -expm1(-x) to keep small-x digits.
    const double den = -2.0 * std::expm1(-x) - x * e;
    const double ratio = x * e / den;
    return 2.0 / std::numbers::pi * std::acos(std::sqrt(std::min(ratio, 1.0)));
}

std::vector<DoubleDouble> reconstruct_rho_extended(const CssDecomposition& decomp) {
    const int n = decomp.n;
    if (static_cast<int>(decomp.weights.size()) != n + 1) throw DomainError("reconstruct_rho: weight count != N+1");
    std::vector<DoubleDouble> rho(n + 1, DoubleDouble(0.0));
    if (!decomp.weights_mp.empty()) {
        if (static_cast<int>(decomp.weights_mp.size()) != n + 1)
            throw DomainError("reconstruct_rho: weight count != N+1");
        const std::vector<MpFloat> m = mapping_entries<MpFloat>(n, decomp.eta);
        for (int d = 0; d <= n; ++d) {
            MpFloat acc = 0;
            for (int a = 0; a <= n; ++a) acc += m[static_cast<std::size_t>(a) * (n + 1) + d] * decomp.weights_mp[a];
            rho[n - d] = to_dd(acc);
        }
        return rho;
    }
    const std::vector<DoubleDouble> m = mapping_entries<DoubleDouble>(n, decomp.eta);
    for (int d = 0; d <= n; ++d) {
        DoubleDouble acc(0.0);
        for (int a = 0; a <= n; ++a) acc += m[static_cast<std::size_t>(a) * (n + 1) + d] * decomp.weights[a];
        rho[n - d] = acc;
    }
    return rho;
}

DickePopulations reconstruct_rho(const CssDecomposition& decomp) {
    DickePopulations out;
    out.time = decomp.time;
    for (const DoubleDouble& x : reconstruct_rho_extended(decomp)) out.probs.push_back(static_cast<double>(x));
    return out;
}

double clamped_log_negativity(double neg) {
    if (!(neg > std::pow(10.0, kLogNegativityFloor))) return kLogNegativityFloor;
    if (neg >= 1.0) return kLogNegativityCeiling;
    return std::log10(neg);
}

NegativityField scan_landscape(const ModelParams& params, std::span<const double> t_grid,
                               std::span<const double> eta_grid, Precision precision, int workers) {
    params.validate();
    if (t_grid.empty() || eta_grid.empty()) throw DomainError("scan_landscape: grids must be nonempty");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) || !std::is_sorted(eta_grid.begin(), eta_grid.end()))
        throw DomainError("scan_landscape: grids must be sorted");
    for (double e : eta_grid) check_eta(e);

    NegativityField field;
    field.t_grid.assign(t_grid.begin(), t_grid.end());
    field.eta_grid.assign(eta_grid.begin(), eta_grid.end());
    field.values.assign(t_grid.size(), std::vector<double>(eta_grid.size(), kLogNegativityCeiling));

    std::vector<TargetPopulations> targets(t_grid.size());
    parallel_for(t_grid.size(), workers, [&](std::size_t i) { targets[i] = exact_target(params, t_grid[i], precision); });

    std::vector<char> failed(t_grid.size() * eta_grid.size(), 0);
    const std::size_t ne = eta_grid.size();
    parallel_for(t_grid.size() * ne, workers, [&](std::size_t k) {
        const std::size_t i = k / ne;
        const std::size_t j = k % ne;
        try {
            field.values[i][j] =
                clamped_log_negativity(solve_ladder(targets[i], eta_grid[j], precision, false).negativity);
        } catch (const IllConditionedError&) {
            failed[k] = 1;
        }
    });
    field.warnings = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
    return field;
}

namespace {

struct Evaluator {
    const TargetPopulations& target;
    Precision precision;

    double operator()(double eta) const {
        try {
            return solve_ladder(target, eta, precision, false).negativity;
        } catch (const IllConditionedError&) {
            return kInf;
        }
    }
};

/// Shrinks [good, bad] (in either orientation) until its width is below `width`;
/// `good` satisfies neg <= floor and `bad` does not. Returns the final good end.
double bisect_edge(const Evaluator& f, double good, double bad, double floor, double width) {
    while (std::abs(bad - good) > width) {
        const double mid = 0.5 * (good + bad);
        if (mid == good || mid == bad) break;
        if (f(mid) <= floor)
            good = mid;
        else
            bad = mid;
    }
    return good;
}

struct Minimum {
    double eta;
    double value;
};

Minimum golden_section(const Evaluator& f, double lo, double hi, double width, Minimum best) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - g * (hi - lo);
    double d = lo + g * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    auto note = [&](double x, double v) {
        if (v < best.value) best = {x, v};
    };
    note(c, fc);
    note(d, fd);
    while (hi - lo > width) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
            note(c, fc);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
            note(d, fd);
        }
    }
    return best;
}

struct WindowSpec {
    bool lower;
    double eta_min;
    double eta_max;
    double tie;
    double tol;
    const TraceOptions& options;
};

struct WindowResult {
    std::optional<double> eta;
    /// -1 / +1 when the smallest coarse value lies on the lower / upper window edge.
    int edge = 0;
};

/// One coarse-grid search in [center - window, center + window].
WindowResult search_window(const Evaluator& f, double center, const WindowSpec& win) {
    const TraceOptions& opt = win.options;
    const double lo = std::max(win.eta_min, center - opt.window);
    const double hi = std::min(win.eta_max, center + opt.window);
    const int np = opt.grid_points;
    std::vector<double> grid(np), values(np);
    for (int i = 0; i < np; ++i) grid[i] = lo + (hi - lo) * i / (np - 1);
    parallel_for(static_cast<std::size_t>(np), opt.workers, [&](std::size_t i) { values[i] = f(grid[i]); });

    const int outward = win.lower ? -1 : 1;
    int pick = -1;
    for (int i = 0; i < np; ++i) {
        if (values[i] > win.tie) continue;
        pick = i;
        if (win.lower) break;
    }
    if (pick >= 0) {
        const int j = pick + outward;
        if (j < 0 || j >= np) return {grid[pick], 0};
        return {bisect_edge(f, grid[pick], grid[j], win.tie, opt.refine_width), 0};
    }

    // Several passages can share a window; refine every coarse basin, best first.
    std::vector<int> basins;
    for (int i = 0; i < np; ++i) {
        if (!std::isfinite(values[i])) continue;
        const bool left_ok = i == 0 || values[i] <= values[i - 1];
        const bool right_ok = i == np - 1 || values[i] <= values[i + 1];
        if (left_ok && right_ok) basins.push_back(i);
    }
    if (basins.empty()) return {};
    std::sort(basins.begin(), basins.end(), [&](int a, int b) { return values[a] < values[b]; });
    const int best = basins.front();
    if (basins.size() > static_cast<std::size_t>(opt.max_basins)) basins.resize(opt.max_basins);

    std::optional<double> chosen;
    for (int i : basins) {
        const double a = grid[std::max(i - 1, 0)];
        const double b = grid[std::min(i + 1, np - 1)];
        const Minimum m = golden_section(f, a, b, opt.refine_width, {grid[i], values[i]});
        if (!(m.value < win.tol)) continue;
        double eta = m.eta;
        if (m.value <= win.tie) {
            // The positive interval is narrower than the grid spacing; move to its edge.
            const double edge = win.lower ? a : b;
            if (f(edge) > win.tie) eta = bisect_edge(f, m.eta, edge, win.tie, opt.refine_width);
        }
        if (!chosen || (win.lower ? eta < *chosen : eta > *chosen)) chosen = eta;
    }
    if (chosen) return {chosen, 0};
    if (best == 0 && lo > win.eta_min) return {std::nullopt, -1};
    if (best == np - 1 && hi < win.eta_max) return {std::nullopt, 1};
    return {};
}

}  // namespace

PassageResult trace_passage(const ModelParams& params, std::span<const double> t_grid, Branch branch, double tol,
                            Precision precision, TraceOptions options) {
    params.validate();
    if (!(tol > 0.0)) throw DomainError("trace_passage: tol must be positive");
    if (t_grid.empty()) throw DomainError("trace_passage: time grid is empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || !std::isfinite(t_grid[i])) throw DomainError("trace_passage: bad time value");
        if (i > 0 && t_grid[i] < t_grid[i - 1]) throw DomainError("trace_passage: time grid must be sorted");
    }
    if (options.grid_points < 3) throw DomainError("trace_passage: need at least 3 grid points");
    if (!(options.window > 0.0) || !(options.refine_width > 0.0))
        throw DomainError("trace_passage: window and refine width must be positive");

    const bool lower = branch == Branch::Lower;
    const double eta_max = options.eta_max > 0.0 ? options.eta_max : (lower ? 1.0 : 2.0);
    const double eta_min = 1e-9;
    const double tie = tol * options.tie_fraction;
    const int n = params.n_emitters;

    PassageResult out;
    out.curve.branch = branch;
    double prev_eta = 0.0;
    double prev_t = 0.0;
    bool have_prev = false;

    auto accept = [&](CssDecomposition d) {
        out.curve.t_grid.push_back(d.time);
        out.curve.eta.push_back(d.eta);
        out.curve.negativity.push_back(d.negativity);
        prev_eta = d.eta;
        prev_t = d.time;
        have_prev = d.time > 0.0;
        out.decompositions.push_back(std::move(d));
    };

    for (double t : t_grid) {
        if (t == 0.0) {
            // Every eta gives P = delta_{a0}; record eta = 0 as the curve origin.
            CssDecomposition d;
            d.n = n;
            d.time = 0.0;
            d.eta = 0.0;
            d.weights.assign(n + 1, DoubleDouble(0.0));
            d.weights[0] = DoubleDouble(1.0);
            d.condition = 1.0;
            d.arithmetic = "exact";
            accept(std::move(d));
            continue;
        }

        double center;
        if (!have_prev) {
            center = options.seed_eta > 0.0 ? options.seed_eta : eta_analytic_n2(t, params.gamma);
        } else if (lower) {
            // Follow the slope of the N = 2 curve; passages for different N run nearly parallel.
            center = prev_eta + eta_analytic_n2(t, params.gamma) - eta_analytic_n2(prev_t, params.gamma);
        } else {
            center = prev_eta;
        }
        center = std::clamp(center, eta_min, eta_max);

        const TargetPopulations target = exact_target(params, t, precision);
        const Evaluator f{target, precision};
        const WindowSpec win{lower, eta_min, eta_max, tie, tol, options};
        std::optional<double> found;
        double c = center;
        for (int shift = 0; shift <= options.max_shifts; ++shift) {
            const WindowResult r = search_window(f, c, win);
            if (r.eta || r.edge == 0) {
                found = r.eta;
                break;
            }
            // The best coarse value sits on the window edge: slide the window that way.
            const double next = c + r.edge * options.window;
            if ((r.edge < 0 && c - options.window <= eta_min) || (r.edge > 0 && c + options.window >= eta_max)) break;
            c = std::clamp(next, eta_min, eta_max);
        }
        if (!found) {
            out.gaps.push_back(t);
            continue;
        }
        const double eta_acc = *found;

        CssDecomposition d;
        try {
            d = solve_css(target, eta_acc, precision);
        } catch (const IllConditionedError&) {
            out.gaps.push_back(t);
            continue;
        }
        if (!(d.negativity < tol)) {
            out.gaps.push_back(t);
            continue;
        }
        if (std::abs(eta_acc - center) > 0.5 * options.window) out.jumps.push_back(t);
        accept(std::move(d));
    }
    return out;
}

}  // namespace dicke
