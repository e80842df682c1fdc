#include "dicke/entanglement.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "dicke/errors.hpp"

namespace dicke {

namespace {

constexpr double kEigenFloor = 1e-15;

void check_state(const SymmetricState& s) {
    if (s.n < 1 || s.amps.size() != s.n + 1) throw DomainError("symmetric state must have N+1 amplitudes, N >= 1");
    if (std::abs(s.amps.norm() - 1.0) > 1e-10) throw DomainError("symmetric state is not normalized");
}

double entropy_of_probs(const std::vector<double>& p) {
    double s = 0.0;
    for (double x : p)
        if (x > kEigenFloor) s -= x * std::log2(x);
    return s;
}

}  // namespace

SymmetricState SymmetricState::dicke(int n, int m) {
    if (n < 1 || m < 0 || m > n) throw DomainError("Dicke state index out of range");
    SymmetricState s;
    s.n = n;
    s.amps = Eigen::VectorXcd::Zero(n + 1);
    s.amps[m] = 1.0;
    return s;
}

SymmetricState css_state(int n, double theta, double phi) {
    if (n < 1) throw DomainError("css_state: n must be >= 1");
    SymmetricState s;
    s.n = n;
    s.amps.resize(n + 1);
    const double c = std::cos(0.5 * theta);
    const double sn = std::sin(0.5 * theta);
    for (int m = 0; m <= n; ++m) {
        const double mag = std::sqrt(binomial(n, m)) * std::pow(c, m) * std::pow(sn, n - m);
        s.amps[m] = std::polar(mag, (n - m) * phi);
    }
    return s;
}

void Bipartition::validate(int n) const {
    if (n_b < 1 || n_b > n - 1)
        throw DomainError("bipartition block size " + std::to_string(n_b) + " outside [1, " + std::to_string(n - 1) +
                          "]");
}

double binomial(int n, int k) {
    if (k < 0 || k > n || n < 0) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r) < 9007199254740992.0 ? std::round(r) : r;
}

std::vector<double> dicke_schmidt_probs(int n, int m, int n_b) {
    if (n < 1 || m < 0 || m > n) throw DomainError("dicke_schmidt_probs: m out of range");
    Bipartition{n_b}.validate(n);
    const double total = binomial(n, m);
    std::vector<double> s(n_b + 1);
    for (int l = 0; l <= n_b; ++l) s[l] = binomial(n_b, l) * binomial(n - n_b, m - l) / total;
    return s;
}

double entropy_dicke(int n, int m, int n_b) { return entropy_of_probs(dicke_schmidt_probs(n, m, n_b)); }

double von_neumann_bits(const Eigen::MatrixXcd& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    return entropy_of_probs(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

SchmidtMap::SchmidtMap(int n, Bipartition part) : n_(n), n_b_(part.n_b) {
    part.validate(n);
    const int n_a = n - n_b_;
    rows_are_b_ = n_b_ <= n_a;
    sqrt_p_.resize(n_b_ + 1, n_a + 1);
    for (int l = 0; l <= n_b_; ++l)
        for (int k = 0; k <= n_a; ++k)
            sqrt_p_(l, k) = std::sqrt(binomial(n_b_, l) * binomial(n_a, k) / binomial(n, l + k));
}

Eigen::MatrixXcd SchmidtMap::coefficients(const Eigen::VectorXcd& amps) const {
    if (amps.size() != n_ + 1) throw DomainError("SchmidtMap: amplitude count != N+1");
    const int n_a = n_ - n_b_;
    Eigen::MatrixXcd c(n_b_ + 1, n_a + 1);
    for (int k = 0; k <= n_a; ++k)
        for (int l = 0; l <= n_b_; ++l) c(l, k) = amps[l + k] * sqrt_p_(l, k);
    if (rows_are_b_) return c;
    return c.transpose();
}

Eigen::MatrixXcd SchmidtMap::reduced_density(const Eigen::VectorXcd& amps) const {
    const Eigen::MatrixXcd c = coefficients(amps);
    return c * c.adjoint();
}

double SchmidtMap::entropy(const Eigen::VectorXcd& amps) const { return von_neumann_bits(reduced_density(amps)); }

double entropy_symmetric(const SymmetricState& state, Bipartition part) {
    check_state(state);
    return SchmidtMap(state.n, part).entropy(state.amps);
}

double brute_force_entropy(const SymmetricState& state, Bipartition part) {
    check_state(state);
    const int n = state.n;
    if (n > 12) throw CapacityError("brute_force_entropy supports N <= 12, got " + std::to_string(n));
    part.validate(n);
    const int n_b = part.n_b;
    const int n_a = n - n_b;
    // Low n_b bits belong to block B; bit set = emitter excited.
    Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(1 << n_b, 1 << n_a);
    for (unsigned x = 0; x < (1u << n); ++x) {
        const int m = std::popcount(x);
        psi(x & ((1u << n_b) - 1), x >> n_b) = state.amps[m] / std::sqrt(binomial(n, m));
    }
    Eigen::MatrixXcd rho_b = Eigen::MatrixXcd::Zero(1 << n_b, 1 << n_b);
    for (int i = 0; i < (1 << n_b); ++i)
        for (int j = 0; j < (1 << n_b); ++j) {
            std::complex<double> acc = 0.0;
            for (int a = 0; a < (1 << n_a); ++a) acc += psi(i, a) * std::conj(psi(j, a));
            rho_b(i, j) = acc;
        }
    return von_neumann_bits(rho_b);
}

}  // namespace dicke
