#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dicke/errors.hpp"
#include "dicke/unraveling.hpp"
#include "oracles.hpp"

using namespace dicke;

namespace {

constexpr double kPi = std::numbers::pi;

SymmetricState random_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    SymmetricState s;
    s.n = n;
    s.amps.resize(n + 1);
    for (int m = 0; m <= n; ++m) s.amps[m] = {g(rng), g(rng)};
    s.amps.normalize();
    return s;
}

Eigen::MatrixXcd projector(const SymmetricState& s) { return s.amps * s.amps.adjoint(); }

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("naive Kraus operators") {
    const double dt = 1e-3;
    const KrausPair k = kraus_naive(6, 1.0, dt);
    const Eigen::MatrixXcd l = oracle::lowering(6) / std::sqrt(12.0);
    const Eigen::MatrixXcd ldl = l.adjoint() * l;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(7, 7);
    CHECK(max_abs(k.e_dense(0) - (id - dt * ldl)) < 1e-15);
    CHECK(max_abs(k.e_dense(1) - std::sqrt(2.0 * dt) * l) < 1e-15);

    // E0^dagger E0 + E1^dagger E1 = 1 + dt^2 gamma^2 (L^dagger L)^2 exactly.
    const Eigen::MatrixXcd e0 = k.e_dense(0), e1 = k.e_dense(1);
    const Eigen::MatrixXcd sum = e0.adjoint() * e0 + e1.adjoint() * e1;
    CHECK(max_abs(sum - id - dt * dt * ldl * ldl) < 1e-15);
    CHECK(max_abs(sum - id) <= 1.01 * dt * dt * max_abs(ldl * ldl));

    const SymmetricState top = SymmetricState::dicke(6, 6);
    CHECK(k.apply(1, top.amps).squaredNorm() == doctest::Approx(dt).epsilon(1e-14));
    CHECK(k.apply(1, SymmetricState::dicke(6, 0).amps).squaredNorm() == 0.0);
}

TEST_CASE("timestep range") {
    CHECK_THROWS_AS(kraus_naive(4, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(kraus_naive(4, 1.0, 0.02), DomainError);
    CHECK_THROWS_AS(kraus_naive(4, 2.0, 0.006), DomainError);
    CHECK_NOTHROW(kraus_naive(4, 1.0, 1e-2));
}

TEST_CASE("mixing unitaries") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Matrix2cd m = MixingUnitary{u(rng) / 4.0, u(rng)}.entries();
        CHECK(max_abs(m.adjoint() * m - Eigen::Matrix2cd::Identity()) < 1e-14);
    }
    CHECK(max_abs(MixingUnitary{0.0, 0.0}.entries() - Eigen::Matrix2cd::Identity()) == 0.0);
    Eigen::Matrix2cd bad;
    bad << 1.0, 0.1, 0.0, 1.0;
    CHECK_THROWS_AS(check_unitary(bad), DomainError);
    CHECK_THROWS_AS(remix(kraus_naive(3, 1.0, 1e-3), bad), DomainError);
    CHECK_THROWS_AS(remix(kraus_naive(3, 1.0, 1e-3), MixingUnitary{2.0, 0.0}), DomainError);
}

TEST_CASE("remixing leaves the channel unchanged") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const int n = 1 + static_cast<int>(rng() % 10);
        const KrausPair naive = kraus_naive(n, 1.0, 1e-2 * (0.1 + 0.9 * u(rng)));
        const SymmetricState s = random_state(n, rng);
        const Eigen::MatrixXcd rho = projector(s);
        const KrausPair mixed = remix(naive, MixingUnitary{0.5 * kPi * u(rng), 2.0 * kPi * u(rng)});
        CHECK(max_abs(mixed.channel(rho) - naive.channel(rho)) < 1e-12);
    }
}

TEST_CASE("quantum jump step") {
    const KrausPair k = kraus_naive(4, 1.0, 1e-3);
    const StepResult jump = qt_step(SymmetricState::dicke(4, 3), k, 0.9999999);
    CHECK(jump.index == 1);
    CHECK(std::abs(jump.state.amps[2] - 1.0) < 1e-15);
    const double b2 = beta_sq(3, 4);
    const double e0 = 1.0 - 0.5e-3 * b2;
    CHECK(jump.p1 == doctest::Approx(1e-3 * b2 / (e0 * e0 + 1e-3 * b2)).epsilon(1e-14));
    const StepResult ground = qt_step(SymmetricState::dicke(4, 0), k, 0.999);
    CHECK(ground.index == 0);
    CHECK(ground.p0 == 1.0);
    CHECK(std::abs(ground.state.amps[0] - 1.0) < 1e-15);

    KrausPair dead = k;
    dead.e0.setZero();
    dead.e1.setZero();
    CHECK_THROWS_AS(qt_step(SymmetricState::dicke(4, 2), dead, 0.5), NumericalBreakdown);
}

TEST_CASE("step sampling averages to the normalized channel") {
    std::mt19937_64 rng(12);
    const int n = 4;
    const SymmetricState s = random_state(n, rng);
    const KrausPair k = remix(kraus_naive(n, 1.0, 1e-2), MixingUnitary{kPi / 4, 0.3});
    Eigen::MatrixXcd expected = k.channel(projector(s));
    expected /= expected.trace().real();
    const int samples = 20000;
    Eigen::MatrixXcd average = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    TrajectoryRng draws(5, 0);
    for (int i = 0; i < samples; ++i) average += projector(qt_step(s, k, draws.uniform()).state);
    average /= samples;
    // Each entry has standard deviation below 0.5 / sqrt(samples) = 0.0035.
    CHECK(max_abs(average - expected) < 0.02);
}

TEST_CASE("Bloch length") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, kPi);
    for (int n : {1, 5, 50})
        for (int i = 0; i < 10; ++i) CHECK(std::abs(bloch_length(css_state(n, u(rng), 2.0 * u(rng))) - 1.0) < 1e-12);
    for (int n : {2, 7, 50})
        for (int m = 0; m <= n; ++m)
            CHECK(std::abs(bloch_length(SymmetricState::dicke(n, m)) - std::abs(2.0 * m - n) / n) < 1e-14);
    CHECK(mean_excitation(SymmetricState::dicke(9, 4)) == 4.0);
}

TEST_CASE("post-operation entropy matches explicit branch states") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, kPi);
    for (int n : {2, 5, 10}) {
        const KrausPair naive = kraus_naive(n, 1.0, 1e-2);
        const SchmidtMap map(n, Bipartition::half(n));
        for (int i = 0; i < 10; ++i) {
            const SymmetricState s = random_state(n, rng);
            const double theta = 0.5 * u(rng), phi = u(rng);
            const KrausPair mixed = remix(naive, MixingUnitary{theta, phi});
            double p[2], e[2];
            for (int k = 0; k < 2; ++k) {
                SymmetricState b{n, mixed.apply(k, s.amps)};
                p[k] = b.amps.squaredNorm();
                b.amps /= std::sqrt(p[k]);
                e[k] = entropy_symmetric(b, Bipartition::half(n));
            }
            const double expected = (p[0] * e[0] + p[1] * e[1]) / (p[0] + p[1]);
            CHECK(std::abs(post_operation_entropy(s, theta, phi, naive, map) - expected) < 1e-10);
        }
    }
}

TEST_CASE("phi optimization") {
    const KrausPair naive = kraus_naive(8, 1.0, 1e-3);
    const SchmidtMap map(8, Bipartition::half(8));
    // At the pole every phi is equivalent and the remixed branches carry only
    // an O(dt) admixture of |N-1>, so s_po vanishes like dt^2 log(1/dt).
    const SymmetricState pole = SymmetricState::dicke(8, 8);
    for (double dt : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const KrausPair k = kraus_naive(8, 1.0, dt);
        const double s_po = optimize_phi(pole, kPi / 4, k).s_po;
        CHECK(s_po <= dt * dt * std::log2(1.0 / dt));
        CHECK(s_po < 0.05 * post_operation_entropy(pole, 0.0, 0.0, k, map));
        for (double phi : {0.1, 0.9, 2.0, 3.0})
            CHECK(std::abs(post_operation_entropy(pole, kPi / 4, phi, k, map) - s_po) < 1e-12);
    }

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, kPi);
    const KrausPair naive4 = kraus_naive(4, 1.0, 1e-2);
    const SchmidtMap map4(4, Bipartition::half(4));
    for (int i = 0; i < 20; ++i) {
        const SymmetricState s = i < 10 ? random_state(4, rng) : css_state(4, u(rng), 2.0 * u(rng));
        const PhiChoice best = optimize_phi(s, kPi / 4, naive4);
        CHECK(best.phi_opt >= 0.0);
        CHECK(best.phi_opt < kPi);
        CHECK(std::abs(post_operation_entropy(s, kPi / 4, best.phi_opt, naive4, map4) - best.s_po) < 1e-12);
        for (int j = 0; j < 32; ++j)
            CHECK(best.s_po <= post_operation_entropy(s, kPi / 4, u(rng), naive4, map4) + 1e-12);
    }
    CHECK_THROWS_AS(optimize_phi(pole, kPi / 4, naive, 4), DomainError);
}

TEST_CASE("optimized step from the burst CSS beats the naive step") {
    for (int n : {10, 50}) {
        const KrausPair naive = kraus_naive(n, 1.0, 1e-3);
        const SymmetricState s = css_state(n, kPi / 2, 0.0);
        const SchmidtMap map(n, Bipartition::half(n));
        const double naive_entropy = post_operation_entropy(s, 0.0, 0.0, naive, map);
        const PhiChoice best = optimize_phi(s, kPi / 4, naive);
        CHECK(best.s_po < naive_entropy);
        CHECK(best.s_po < 1e-3);
    }
}

TEST_CASE("large-N remixed branches stay close to coherent states") {
    // F_k acting on a CSS leaves a state whose Bloch length stays near 1
    // once the mixing angle is nonzero, while the naive jump does not.
    const int n = 200;
    const KrausPair naive = kraus_naive(n, 1.0, 1e-3);
    const SymmetricState s = css_state(n, kPi / 2, 0.0);
    const PhiChoice best = optimize_phi(s, kPi / 4, naive);
    const KrausPair mixed = remix(naive, MixingUnitary{kPi / 4, best.phi_opt});
    for (int k = 0; k < 2; ++k) {
        SymmetricState b{n, mixed.apply(k, s.amps)};
        b.amps.normalize();
        CHECK(bloch_length(b) > 1.0 - 1e-3);
    }
    SymmetricState jumped{n, naive.apply(1, s.amps)};
    jumped.amps.normalize();
    CHECK(entropy_symmetric(jumped, Bipartition::half(n)) > post_operation_entropy(s, kPi / 4, best.phi_opt, naive,
                                                                                 SchmidtMap(n, Bipartition::half(n))));
}

TEST_CASE("trajectory records") {
    TrajectoryOptions o;
    o.dt = 1e-2;
    o.t_max = 3.0;
    o.record_stride = 5;
    CHECK(step_count(o) == 300);
    CHECK(record_times(o).size() == 61);
    for (Strategy st : {Strategy::Naive, Strategy::PhiRandom, Strategy::PhiOpt}) {
        o.strategy = st;
        const TrajectoryRecord r = run_trajectory({6, 1.0}, o, 42, 3);
        REQUIRE(r.times.size() == 61);
        CHECK(r.xi.front() == doctest::Approx(1.0));
        CHECK(r.entropy_bits.front() == 0.0);
        CHECK(r.mean_excitation.front() == 6.0);
        for (std::size_t j = 0; j < r.times.size(); ++j) {
            CHECK(r.xi[j] >= 0.0);
            CHECK(r.xi[j] <= 1.0 + 1e-12);
            CHECK(r.entropy_bits[j] >= 0.0);
            CHECK(r.entropy_bits[j] <= std::log2(4.0) + 1e-12);
            double total = 0.0;
            for (double p : r.populations[j]) total += p;
            CHECK(std::abs(total - 1.0) < 1e-12);
        }
        const TrajectoryRecord again = run_trajectory({6, 1.0}, o, 42, 3);
        CHECK(again.xi == r.xi);
        CHECK(again.jump_count == r.jump_count);
    }
}

TEST_CASE("naive trajectories stay in the Dicke basis") {
    TrajectoryOptions o;
    o.dt = 1e-2;
    o.t_max = 6.0;
    o.record_stride = 1;
    for (int idx = 0; idx < 5; ++idx) {
        const TrajectoryRecord r = run_trajectory({8, 1.0}, o, 7, idx);
        for (const auto& pops : r.populations) {
            int occupied = 0;
            for (double p : pops) occupied += p > 0.0;
            CHECK(occupied == 1);
        }
        CHECK(r.jump_count == 8 - static_cast<int>(std::lround(r.mean_excitation.back())));
    }
}

TEST_CASE("ensembles are reproducible") {
    TrajectoryOptions o;
    o.dt = 1e-2;
    o.t_max = 4.0;
    o.strategy = Strategy::PhiRandom;
    const EnsembleStats a = ensemble_run({6, 1.0}, o, 30, 11, 1);
    const EnsembleStats b = ensemble_run({6, 1.0}, o, 30, 11, 3);
    CHECK(a.te_mean == b.te_mean);
    CHECK(a.pops_mean == b.pops_mean);
    CHECK(a.s_max_mean == b.s_max_mean);

    const EnsembleStats one = ensemble_run({6, 1.0}, o, 1, 11, 2);
    const TrajectoryRecord r = run_trajectory({6, 1.0}, o, 11, 0);
    CHECK(one.te_mean == r.entropy_bits);
    CHECK(one.xi_mean == r.xi);
    for (double s : one.te_stderr) CHECK(s == 0.0);

    const EnsembleStats other = ensemble_run({6, 1.0}, o, 30, 12, 1);
    CHECK(other.te_mean != a.te_mean);
    CHECK_THROWS_AS(ensemble_run({6, 1.0}, o, 0, 1), DomainError);
}

TEST_CASE("uniform draws") {
    TrajectoryRng a(42, 0), b(42, 0), c(42, 1);
    double sum = 0.0;
    bool differ = false;
    for (int i = 0; i < 10000; ++i) {
        const double x = a.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        CHECK(x == b.uniform());
        differ |= x != c.uniform();
        sum += x;
    }
    CHECK(differ);
    CHECK(std::abs(sum / 10000 - 0.5) < 0.02);
}
