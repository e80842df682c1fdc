#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <vector>

namespace dicke {

/// Pure state in the symmetric sector: amps[m] multiplies the Dicke state with m excitations.
struct SymmetricState {
    int n = 0;
    Eigen::VectorXcd amps;

    static SymmetricState dicke(int n, int m);
    double norm() const { return amps.norm(); }
};

/// Coherent spin state with polar angle theta (theta = 0 is fully excited) and azimuth phi.
SymmetricState css_state(int n, double theta, double phi);

/// Splits the emitters into block B (n_b emitters) and block A (the rest).
struct Bipartition {
    int n_b = 0;

    static Bipartition half(int n) { return {n / 2}; }
    int n_a(int n) const { return n - n_b; }
    /// Throws DomainError unless 1 <= n_b <= n - 1.
    void validate(int n) const;
};

/// C(n, k) as a double; zero outside 0 <= k <= n.
double binomial(int n, int k);

/// Schmidt probabilities s_l = C(n_b, l) C(n - n_b, m - l) / C(n, m), l = 0..n_b.
std::vector<double> dicke_schmidt_probs(int n, int m, int n_b);

/// Entanglement entropy of a Dicke state in bits.
double entropy_dicke(int n, int m, int n_b);

/// -sum p log2 p over eigenvalues p > 1e-15 of a Hermitian matrix.
double von_neumann_bits(const Eigen::MatrixXcd& rho);

/**
 * Schmidt-block map for one (N, n_b) split.
 *
 * Each Dicke state factorizes as |m> = sum_l sqrt(p_{l,m}) |l>_B |m-l>_A, so a
 * symmetric state with amplitudes c_m has the block coefficient matrix
 * C(l, k) = c_{l+k} sqrt(p_{l,l+k}), l excitations in B and k in A. The reduced
 * density matrix of the smaller block is C C^dagger or C^dagger C.
 */
class SchmidtMap {
public:
    SchmidtMap(int n, Bipartition part);

    int n() const { return n_; }
    int n_b() const { return n_b_; }
    /// Side length of the reduced matrix (smaller block + 1).
    int reduced_dim() const { return std::min(n_b_, n_ - n_b_) + 1; }

    /// Block coefficient matrix arranged so that rows index the smaller block.
    Eigen::MatrixXcd coefficients(const Eigen::VectorXcd& amps) const;
    Eigen::MatrixXcd reduced_density(const Eigen::VectorXcd& amps) const;
    double entropy(const Eigen::VectorXcd& amps) const;

private:
    int n_;
    int n_b_;
    bool rows_are_b_;
    Eigen::MatrixXd sqrt_p_;  // (n_b+1) x (n_a+1), sqrt(p_{l, l+k})
};

/// Entropy in bits of a normalized symmetric state across `part`.
/// Throws DomainError when the norm deviates from 1 by more than 1e-10.
double entropy_symmetric(const SymmetricState& state, Bipartition part);

/// Entropy from the explicit 2^N-amplitude expansion and a literal partial trace.
/// Throws CapacityError for N > 12.
double brute_force_entropy(const SymmetricState& state, Bipartition part);

}  // namespace dicke
