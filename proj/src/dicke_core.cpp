#include "dicke/dicke_core.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <string>

#include "dicke/matrix_exponential.hpp"
#include "dicke/parallel.hpp"

namespace dicke {

void ModelParams::validate() const {
    if (n_emitters < 1) throw DomainError("n_emitters must be >= 1, got " + std::to_string(n_emitters));
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive and finite");
}

double beta_sq(int m, int n) {
    if (n < 1) throw DomainError("beta_sq: n must be >= 1");
    if (m < 0 || m > n) throw DomainError("beta_sq: m out of range [0, n]");
    return static_cast<double>(m) * static_cast<double>(n - m + 1) / static_cast<double>(n);
}

Eigen::MatrixXd Generator::dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int m = 0; m <= n; ++m) d(m, m) = diag[m];
    for (int k = 0; k < n; ++k) d(k, k + 1) = subflow[k];
    return d;
}

Generator build_generator(const ModelParams& params) {
    params.validate();
    const int n = params.n_emitters;
    Generator g;
    g.n = n;
    g.diag.resize(n + 1);
    g.subflow.resize(n);
    for (int m = 0; m <= n; ++m) {
        const double rate = params.gamma * beta_sq(m, n);
        g.diag[m] = -rate;
        if (m > 0) g.subflow[m - 1] = rate;
    }
    return g;
}

EvolutionMatrix evolution_matrix(const Generator& gen, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("evolution_matrix: t must be finite and >= 0");
    EvolutionMatrix a;
    a.time = t;
    if (t == 0.0) {
        a.entries = Eigen::MatrixXd::Identity(gen.n + 1, gen.n + 1);
        return a;
    }
    a.entries = expm(gen.dense() * t);
    return a;
}

namespace {

void check_grid(std::span<const double> t_grid) {
    if (t_grid.empty()) throw DomainError("time grid is empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || !std::isfinite(t_grid[i])) throw DomainError("time grid must be finite and >= 0");
        if (i > 0 && t_grid[i] < t_grid[i - 1]) throw DomainError("time grid must be sorted");
    }
}

DickePopulations column_populations(const Eigen::MatrixXd& a, int n, double t) {
    DickePopulations p;
    p.time = t;
    p.probs.resize(n + 1);
    for (int m = 0; m <= n; ++m) p.probs[m] = std::clamp(a(m, n), 0.0, 1.0);
    return p;
}

}  // namespace

std::vector<DickePopulations> evolve_exact(const ModelParams& params, std::span<const double> t_grid,
                                           int workers) {
    check_grid(t_grid);
    const Generator gen = build_generator(params);
    const int n = params.n_emitters;
    std::vector<DickePopulations> out(t_grid.size());

    parallel_for(t_grid.size(), workers, [&](std::size_t i) {
        out[i] = column_populations(evolution_matrix(gen, t_grid[i]).entries, n, t_grid[i]);
    });
    return out;
}

std::vector<DickePopulations> evolve_ode(const ModelParams& params, std::span<const double> t_grid,
                                         double tolerance) {
    namespace ode = boost::numeric::odeint;
    check_grid(t_grid);
    const Generator gen = build_generator(params);
    const int n = params.n_emitters;
    using State = std::vector<double>;

    auto rhs = [&](const State& x, State& dxdt, double) {
        for (int m = 0; m <= n; ++m) {
            dxdt[m] = gen.diag[m] * x[m];
            if (m < n) dxdt[m] += gen.subflow[m] * x[m + 1];
        }
    };

    State x(n + 1, 0.0);
    x[n] = 1.0;
    std::vector<DickePopulations> out;
    out.reserve(t_grid.size());
    auto observer = [&](const State& s, double t) {
        DickePopulations p;
        p.time = t;
        p.probs = s;
        out.push_back(std::move(p));
    };
    auto stepper = ode::make_dense_output(tolerance, tolerance, ode::runge_kutta_dopri5<State>());
    std::vector<double> times(t_grid.begin(), t_grid.end());
    const bool prepend = times.front() > 0.0;
    if (prepend) times.insert(times.begin(), 0.0);
    if (times.size() == 1) {
        observer(x, 0.0);
        return out;
    }
    ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3, observer);
    if (prepend) out.erase(out.begin());
    return out;
}

double emission_rate(const DickePopulations& pops, const ModelParams& params) {
    params.validate();
    if (pops.n() != params.n_emitters) throw DomainError("emission_rate: population size does not match N");
    double rate = 0.0;
    for (int m = 0; m <= pops.n(); ++m) rate += beta_sq(m, pops.n()) * pops.probs[m];
    return params.gamma * rate;
}

std::vector<double> linear_grid(double t_max, int points) {
    if (points < 1) throw DomainError("linear_grid: need at least one point");
    if (!(t_max >= 0.0)) throw DomainError("linear_grid: t_max must be >= 0");
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = t_max;
        return g;
    }
    for (int i = 0; i < points; ++i) g[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

}  // namespace dicke
