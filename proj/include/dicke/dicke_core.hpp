#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "dicke/errors.hpp"
#include "dicke/scalar.hpp"

namespace dicke {

/// N identical emitters decaying through one collective channel at rate gamma.
struct ModelParams {
    int n_emitters = 1;
    double gamma = 1.0;

    void validate() const;
};

/// Populations rho_m of the symmetric Dicke states, m = number of excited emitters.
struct DickePopulations {
    std::vector<double> probs;
    double time = 0.0;

    int n() const { return static_cast<int>(probs.size()) - 1; }
};

/// Bidiagonal rate matrix of the cascade |m> -> |m-1>.
///
/// diag[m] = -gamma * beta_sq(m) is the loss out of |m>; subflow[k] is the
/// gain into |k> from |k+1>, equal to gamma * beta_sq(k+1). Columns sum to
/// zero exactly because both entries come from the same product.
struct Generator {
    int n = 0;
    std::vector<double> diag;
    std::vector<double> subflow;

    Eigen::MatrixXd dense() const;
};

/// A_t = exp(D t), a column-stochastic matrix.
struct EvolutionMatrix {
    Eigen::MatrixXd entries;
    double time = 0.0;
};

/// m (n - m + 1) / n; the decay rate of |m> in units of gamma.
double beta_sq(int m, int n);

Generator build_generator(const ModelParams& params);

EvolutionMatrix evolution_matrix(const Generator& gen, double t);

/// Exact populations from the fully inverted state via the matrix exponential.
/// `workers` > 1 evaluates grid points concurrently; output follows t_grid order.
std::vector<DickePopulations> evolve_exact(const ModelParams& params, std::span<const double> t_grid,
                                           int workers = 1);

/// Same quantity by adaptive Dormand-Prince integration of the rate equations.
std::vector<DickePopulations> evolve_ode(const ModelParams& params, std::span<const double> t_grid,
                                         double tolerance = 1e-13);

/// Collective photon emission rate gamma * sum_m beta_sq(m) rho_m.
double emission_rate(const DickePopulations& pops, const ModelParams& params);

/// Uniform time grid [0, t_max] with `points` samples.
std::vector<double> linear_grid(double t_max, int points);

/**
 * Populations at time t from the fully inverted state by uniformization.
 *
 * With q the largest loss rate, exp(Dt) = exp(-qt) sum_k (qt)^k/k! (I + D/q)^k,
 * and I + D/q has no negative entries. Every term is therefore nonnegative,
 * which keeps each population accurate to a few ulps *relative to itself*;
 * a Padé or Taylor evaluation of exp(Dt) only controls the absolute error
 * and loses the tiny entries that matter for ill-conditioned solves.
 */
template <class Scalar>
std::vector<Scalar> evolve_uniformized(const ModelParams& params, double t) {
    using std::exp;
    params.validate();
    if (!(t >= 0.0)) throw DomainError("evolve_uniformized: time must be nonnegative");
    const int n = params.n_emitters;
    std::vector<Scalar> rho(n + 1, ScalarTraits<Scalar>::from(0.0));
    rho[n] = ScalarTraits<Scalar>::from(1.0);
    if (t == 0.0) return rho;

    double q = 0.0;
    for (int m = 0; m <= n; ++m) q = std::max(q, params.gamma * beta_sq(m, n));
    // Chunks keep exp(-q dt) far from underflow.
    const int chunks = std::max(1, static_cast<int>(std::ceil(q * t / 32.0)));
    const double dt = t / chunks;
    const double qdt = q * dt;

    std::vector<Scalar> stay(n + 1), move(n + 1);
    for (int m = 0; m <= n; ++m) {
        const Scalar rate = ScalarTraits<Scalar>::from(params.gamma * beta_sq(m, n));
        const Scalar qs = ScalarTraits<Scalar>::from(q);
        move[m] = rate / qs;
        stay[m] = Scalar(1.0) - move[m];
    }
    const double eps = ScalarTraits<Scalar>::epsilon();

    std::vector<Scalar> v(n + 1), next(n + 1), acc(n + 1);
    for (int c = 0; c < chunks; ++c) {
        v = rho;
        Scalar weight = exp(ScalarTraits<Scalar>::from(-qdt));
        for (int m = 0; m <= n; ++m) acc[m] = weight * v[m];
        const Scalar qdt_s = ScalarTraits<Scalar>::from(qdt);
        for (int k = 1;; ++k) {
            for (int m = 0; m <= n; ++m) {
                next[m] = stay[m] * v[m];
                if (m < n) next[m] += move[m + 1] * v[m + 1];
            }
            std::swap(v, next);
            weight = weight * qdt_s / ScalarTraits<Scalar>::from(static_cast<double>(k));
            Scalar smallest = ScalarTraits<Scalar>::from(0.0);
            bool first = true;
            for (int m = 0; m <= n; ++m) {
                acc[m] += weight * v[m];
                if (acc[m] > Scalar(0.0) && (first || acc[m] < smallest)) {
                    smallest = acc[m];
                    first = false;
                }
            }
            // Remaining Poisson mass is below 2*weight once k > 2 q dt.
            if (k > n && k > 2.0 * qdt && weight * Scalar(2.0) < smallest * ScalarTraits<Scalar>::from(eps)) break;
            if (k > 100000) break;
        }
        rho = acc;
    }
    return rho;
}

}  // namespace dicke
