#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dicke/entanglement.hpp"
#include "dicke/errors.hpp"

using namespace dicke;

namespace {

SymmetricState random_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    SymmetricState s;
    s.n = n;
    s.amps.resize(n + 1);
    for (int m = 0; m <= n; ++m) s.amps[m] = {g(rng), g(rng)};
    s.amps.normalize();
    return s;
}

double shannon_bits(const std::vector<double>& p) {
    double s = 0.0;
    for (double x : p)
        if (x > 0.0) s -= x * std::log2(x);
    return s;
}

}  // namespace

TEST_CASE("Dicke Schmidt probabilities") {
    const std::vector<double> p = dicke_schmidt_probs(4, 2, 2);
    REQUIRE(p.size() == 3);
    CHECK(p[0] == doctest::Approx(1.0 / 6.0));
    CHECK(p[1] == doctest::Approx(4.0 / 6.0));
    CHECK(p[2] == doctest::Approx(1.0 / 6.0));
    for (int n : {3, 9, 20})
        for (int m = 0; m <= n; ++m)
            for (int nb = 1; nb < n; ++nb) {
                double total = 0.0;
                for (double x : dicke_schmidt_probs(n, m, nb)) total += x;
                CHECK(std::abs(total - 1.0) < 1e-12);
            }
    CHECK_THROWS_AS(dicke_schmidt_probs(4, 5, 2), DomainError);
    CHECK_THROWS_AS(dicke_schmidt_probs(4, 2, 4), DomainError);
}

TEST_CASE("Dicke entropies") {
    const double expected = std::log2(6.0) - 2.0 / 3.0 * std::log2(4.0);
    CHECK(entropy_dicke(4, 2, 2) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(std::abs(entropy_dicke(4, 2, 2) - 1.25163) < 1e-5);
    CHECK(entropy_dicke(2, 1, 1) == doctest::Approx(1.0));
    CHECK(entropy_dicke(10, 0, 5) == 0.0);
    CHECK(entropy_dicke(10, 10, 3) == 0.0);
    CHECK(entropy_dicke(8, 1, 1) == doctest::Approx(shannon_bits({7.0 / 8.0, 1.0 / 8.0})));
}

TEST_CASE("entropy of symmetric Dicke states matches the closed form") {
    for (int n : {2, 7, 30, 64})
        for (int m : {0, 1, n / 3, n / 2, n})
            CHECK(std::abs(entropy_symmetric(SymmetricState::dicke(n, m), Bipartition::half(n)) -
                           entropy_dicke(n, m, n / 2)) < 1e-9);
}

TEST_CASE("coherent spin states are product states") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    for (int n : {2, 9, 40, 100})
        for (int i = 0; i < 10; ++i) {
            const SymmetricState s = css_state(n, 0.5 * u(rng), u(rng));
            CHECK(std::abs(s.norm() - 1.0) < 1e-12);
            CHECK(entropy_symmetric(s, Bipartition::half(n)) < 1e-9);
        }
}

TEST_CASE("Schmidt-block entropy equals the literal partial trace") {
    std::mt19937_64 rng(2024);
    for (int n : {4, 6, 8, 10})
        for (int i = 0; i < 50; ++i) {
            const SymmetricState s = random_state(n, rng);
            const int nb = 1 + static_cast<int>(rng() % (n - 1));
            CHECK(std::abs(entropy_symmetric(s, {nb}) - brute_force_entropy(s, {nb})) < 1e-9);
        }
}

TEST_CASE("entropy bounds and half-split maximality for Dicke states") {
    std::mt19937_64 rng(9);
    for (int n : {4, 7, 12}) {
        for (int i = 0; i < 20; ++i) {
            const SymmetricState s = random_state(n, rng);
            for (int nb = 1; nb < n; ++nb) {
                const double e = entropy_symmetric(s, {nb});
                CHECK(e >= 0.0);
                CHECK(e <= std::log2(std::min(nb, n - nb) + 1.0) + 1e-12);
            }
        }
        for (int m = 0; m <= n; ++m)
            for (int nb = 1; nb < n; ++nb) CHECK(entropy_dicke(n, m, nb) <= entropy_dicke(n, m, n / 2) + 1e-12);
    }
}

TEST_CASE("half-filled Dicke entropy grows logarithmically") {
    // Increments per added emitter shrink, and each doubling of N adds just under
    // half a bit, the slope of (1/2) log2 N.
    double previous = entropy_dicke(4, 2, 2), previous_slope = 1e9;
    int previous_n = 4;
    for (int n = 8; n <= 128; n *= 2) {
        const double e = entropy_dicke(n, n / 2, n / 2);
        const double slope = (e - previous) / (n - previous_n);
        CHECK(e > previous);
        CHECK(slope < previous_slope);
        CHECK(e - previous < 0.5);
        CHECK(e - previous > 0.35);
        CHECK(e <= std::log2(n / 2 + 1.0));
        previous_slope = slope;
        previous = e;
        previous_n = n;
    }
}

TEST_CASE("SchmidtMap orients rows to the smaller block") {
    const SchmidtMap small_b(10, {3});
    const SchmidtMap large_b(10, {7});
    const SymmetricState s = css_state(10, 1.0, 0.3);
    CHECK(small_b.reduced_density(s.amps).rows() == 4);
    CHECK(large_b.reduced_density(s.amps).rows() == 4);
    CHECK(small_b.reduced_dim() == 4);
    const Eigen::MatrixXcd rho = small_b.reduced_density(SymmetricState::dicke(10, 4).amps);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-12);
}

TEST_CASE("input validation") {
    SymmetricState s = SymmetricState::dicke(4, 2);
    s.amps *= 1.1;
    CHECK_THROWS_AS(entropy_symmetric(s, {2}), DomainError);
    CHECK_THROWS_AS(entropy_symmetric(SymmetricState::dicke(4, 2), {0}), DomainError);
    CHECK_THROWS_AS(entropy_symmetric(SymmetricState::dicke(4, 2), {4}), DomainError);
    CHECK_THROWS_AS(brute_force_entropy(SymmetricState::dicke(13, 2), {6}), CapacityError);
    CHECK_THROWS_AS(SymmetricState::dicke(3, 4), DomainError);
    CHECK(binomial(5, 7) == 0.0);
    CHECK(binomial(50, 25) == 126410606437752.0);
}
