#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dicke/css_decomposition.hpp"
#include "dicke/errors.hpp"

using namespace dicke;

namespace {

// Closed-form N = 2 spacing evaluated with 30 significant digits (mpmath).
constexpr double kEta2AtT01 = 0.198079210736684707520514545863;
constexpr double kEta2AtT1 = 0.557341817022874187567156500174;
constexpr double kEta2AtT3 = 0.811320515514201874948980620332;
constexpr double kEta2AtT10 = 0.990406693698760341275675278471;

std::vector<double> unit(int n, int a) {
    std::vector<double> v(n + 1, 0.0);
    v[a] = 1.0;
    return v;
}

CssDecomposition with_weights(int n, double eta, const std::vector<double>& w) {
    CssDecomposition d;
    d.n = n;
    d.eta = eta;
    for (double x : w) d.weights.emplace_back(x);
    return d;
}

}  // namespace

TEST_CASE("mapping matrix for N = 2 and N = 1 at eta = 1") {
    const MappingMatrix m2 = build_mapping(2, 1.0, Precision::Double);
    const double expected[3][3] = {{1.0, 0.25, 0.0}, {0.0, 0.5, 0.0}, {0.0, 0.25, 1.0}};
    for (int d = 0; d < 3; ++d)
        for (int a = 0; a < 3; ++a) CHECK(std::abs(m2.entries(d, a) - expected[d][a]) < 1e-15);
    CHECK(m2.n_phi == 4);
    CHECK(m2.thetas[2] == doctest::Approx(std::numbers::pi));

    // theta_1 = pi for N = 1, so the two CSS are the two poles.
    const MappingMatrix m1 = build_mapping(1, 1.0, Precision::Double);
    CHECK(m1.entries(0, 0) == 1.0);
    CHECK(std::abs(m1.entries(0, 1)) < 1e-15);
    CHECK(m1.entries(1, 0) == 0.0);
    CHECK(std::abs(m1.entries(1, 1) - 1.0) < 1e-15);
    const MappingMatrix half = build_mapping(1, 0.5, Precision::Double);
    CHECK(std::abs(half.entries(0, 1) - 0.5) < 1e-15);
    CHECK(std::abs(half.entries(1, 1) - 0.5) < 1e-15);
}

TEST_CASE("mapping columns are probability vectors") {
    for (int n : {1, 5, 20, 50})
        for (double eta : {0.05, 0.4, 1.0, 1.7}) {
            const MappingMatrix m = build_mapping(n, eta, Precision::Double);
            CHECK(m.entries.minCoeff() >= 0.0);
            CHECK(m.entries.maxCoeff() <= 1.0);
            for (int a = 0; a <= n; ++a) CHECK(std::abs(m.entries.col(a).sum() - 1.0) < 1e-14);
            // Each column in double-double sums to 1 to ~1e-28.
            for (int a = 0; a <= n; ++a) {
                DoubleDouble s(0.0);
                for (const DoubleDouble& x : reconstruct_rho_extended(with_weights(n, eta, unit(n, a)))) s += x;
                CHECK(std::abs(static_cast<double>(s - DoubleDouble(1.0))) < 1e-28);
            }
        }
}

TEST_CASE("mapping rejects non-positive eta") {
    CHECK_THROWS_AS(build_mapping(3, 0.0, Precision::Double), DomainError);
    CHECK_THROWS_AS(build_mapping(3, -1.0, Precision::Extended), DomainError);
    CHECK_THROWS_AS(build_mapping(0, 1.0, Precision::Double), DomainError);
}

TEST_CASE("negativity sums the negative weights") {
    CHECK(negativity(std::vector<double>{0.5, 0.5}) == 0.0);
    CHECK(negativity(std::vector<double>{0.6, -0.1, 0.5}) == doctest::Approx(0.1));
    CHECK(negativity(std::vector<double>{-1.0, -2.0}) == 3.0);
}

TEST_CASE("closed-form N = 2 spacing") {
    CHECK(std::abs(eta_analytic_n2(0.1) - kEta2AtT01) < 1e-13);
    CHECK(std::abs(eta_analytic_n2(1.0) - kEta2AtT1) < 1e-13);
    CHECK(std::abs(eta_analytic_n2(3.0) - kEta2AtT3) < 1e-13);
    CHECK(std::abs(eta_analytic_n2(10.0) - kEta2AtT10) < 1e-13);
    CHECK(std::abs(eta_analytic_n2(0.5, 2.0) - kEta2AtT1) < 1e-13);
    CHECK(eta_analytic_n2(1e-10) < 1e-3);
    CHECK(eta_analytic_n2(1e-6) < eta_analytic_n2(1e-4));
    CHECK(eta_analytic_n2(200.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eta_analytic_n2(0.0, 1.0, true) == 0.0);
    CHECK_THROWS_AS(eta_analytic_n2(0.0), DomainError);
    CHECK_THROWS_AS(eta_analytic_n2(-1.0), DomainError);
}

TEST_CASE("fully inverted state decomposes into the pole CSS") {
    for (int n : {1, 4, 30})
        for (double eta : {0.2, 1.0, 1.5})
            for (Precision p : {Precision::Double, Precision::Extended}) {
                const auto rho = evolve_exact({n, 1.0}, std::vector<double>{0.0});
                const CssDecomposition d = solve_css(rho[0], eta, p);
                CHECK(d.weights_double() == unit(n, 0));
                CHECK(d.negativity == 0.0);
            }
}

TEST_CASE("N = 2 at gamma t = 1") {
    const auto rho = evolve_exact({2, 1.0}, std::vector<double>{1.0});
    const CssDecomposition on_curve = solve_css(rho[0], eta_analytic_n2(1.0), Precision::Double);
    for (double w : on_curve.weights_double()) CHECK(w >= -1e-12);
    CHECK(std::abs(on_curve.weights_double()[1]) < 1e-12);
    double total = 0.0;
    for (double w : on_curve.weights_double()) total += w;
    CHECK(std::abs(total - 1.0) < 1e-10);

    // Independent closed forms for the two non-pole weights of N = 2.
    auto closed_form = [](double t, double eta) {
        const double csc2 = 1.0 / std::pow(std::sin(eta * std::numbers::pi / 4), 2);
        const double sec2 = 1.0 / std::pow(std::cos(eta * std::numbers::pi / 4), 2);
        const double den = 1.0 + 2.0 * std::cos(eta * std::numbers::pi / 2);
        const double et = std::exp(t);
        const double mid = -std::exp(-t) * (-1.0 + et - 1.5 * t + (-1.0 + et - 0.5 * t) * std::cos(eta * std::numbers::pi)) *
                           csc2 * csc2 / (2.0 * den);
        const double far = std::exp(-t) * csc2 * csc2 * (-2.0 + 2.0 * et - t - t * sec2) / (8.0 * den);
        return std::pair{mid, far};
    };
    for (double eta : {0.5, 0.8, 0.99, 1.1}) {
        const CssDecomposition d = solve_css(rho[0], eta, Precision::Double);
        const auto [mid, far] = closed_form(1.0, eta);
        CHECK(std::abs(d.weights_double()[1] - mid) < 1e-12);
        CHECK(std::abs(d.weights_double()[2] - far) < 1e-12);
    }
    CHECK(solve_css(rho[0], 0.99, Precision::Double).negativity == 0.0);
    CHECK(solve_css(rho[0], 0.5, Precision::Double).negativity > 0.5);
}

TEST_CASE("reconstruction") {
    const DickePopulations pole = reconstruct_rho(with_weights(5, 0.7, unit(5, 0)));
    CHECK(pole.probs == unit(5, 5));
    const DickePopulations mid = reconstruct_rho(with_weights(2, 1.0, {0.0, 1.0, 0.0}));
    CHECK(mid.probs[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(mid.probs[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mid.probs[2] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("double round trip for N <= 20") {
    for (int n : {2, 8, 14, 20}) {
        const std::vector<double> t{0.5, 2.0, 6.0};
        const auto rho = evolve_exact({n, 1.0}, t);
        for (const auto& r : rho) {
            const CssDecomposition d = solve_css(r, 1.0, Precision::Double);
            CHECK(d.arithmetic == "double");
            CHECK(d.residual < 1e-10);
            const DickePopulations back = reconstruct_rho(d);
            for (int m = 0; m <= n; ++m) CHECK(std::abs(back.probs[m] - r.probs[m]) < 1e-10);
            double total = 0.0;
            for (double w : d.weights_double()) total += w;
            CHECK(std::abs(total - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("double precision reports ill-conditioning with the estimate") {
    const auto rho = evolve_exact({30, 1.0}, std::vector<double>{0.3});
    try {
        (void)solve_css(rho[0], 0.1, Precision::Double);
        FAIL("expected IllConditionedError");
    } catch (const IllConditionedError& e) {
        CHECK(e.condition_estimate() > 1e16);
    }
}

TEST_CASE("extended precision escalates from double-double to MPFR") {
    const ModelParams p{30, 1.0};
    const TargetPopulations late = exact_target(p, 6.0, Precision::Extended);
    CHECK(solve_css(late, 0.96, Precision::Extended).arithmetic == "double-double");
    const TargetPopulations early = exact_target(p, 0.1, Precision::Extended);
    const CssDecomposition d = solve_css(early, 0.3, Precision::Extended);
    CHECK(d.arithmetic == "mpfr-120");
    CHECK(d.condition > 1e21);
    CHECK(d.residual < 1e-25);
}

TEST_CASE("large off-passage weights escalate and keep full precision") {
    const TargetPopulations target = exact_target({40, 1.0}, 8.0, Precision::Extended);
    const CssDecomposition d = solve_css(target, 0.7, Precision::Extended);
    CHECK(d.arithmetic == "mpfr-120");
    CHECK(d.weights_mp.size() == 41);
    CHECK(d.negativity > 1e6);
    const std::vector<DoubleDouble> back = reconstruct_rho_extended(d);
    for (int m = 0; m <= 40; ++m) CHECK(std::abs(static_cast<double>(back[m] - target.dd()[m])) < 1e-28);
    const CssDecomposition on = solve_css(target, 1.0, Precision::Extended);
    CHECK(on.arithmetic == "double-double");
    CHECK(on.weights_mp.empty());
    CHECK(on.residual <= 1e-26);
}

TEST_CASE("condition grows with N at fixed eta") {
    for (double eta : {0.3, 0.6, 1.0}) {
        double previous = 0.0;
        for (int n : {10, 20, 30, 40, 50}) {
            const TargetPopulations target = exact_target({n, 1.0}, 2.0, Precision::Extended);
            const CssDecomposition d = solve_css(target, eta, Precision::Extended);
            CHECK(std::isfinite(d.condition));
            CHECK(d.condition > previous);
            previous = d.condition;
        }
    }
}

TEST_CASE("truncation floors per arithmetic") {
    CHECK(truncation_floor("double") == 1e-16);
    CHECK(truncation_floor("double-double") == 1e-32);
    CHECK(truncation_floor("mpfr-120") == 1e-120);
    DickePopulations r;
    r.probs = {1e-17, 0.5, 0.5 - 1e-17};
    CHECK(target_from(r).d()[0] == 0.0);
}

TEST_CASE("extended targets agree across arithmetic levels") {
    const ModelParams p{30, 1.0};
    for (double t : {0.05, 1.0, 8.0}) {
        const TargetPopulations target = exact_target(p, t, Precision::Extended);
        CHECK(target.native_extended());
        for (int m = 0; m <= 30; ++m) {
            const MpFloat& hi = target.mp()[m];
            if (hi < MpFloat(1e-30)) continue;
            const double rel_dd = MpFloat(abs(MpFloat(target.dd()[m].hi()) + MpFloat(target.dd()[m].lo()) - hi) / hi)
                                      .convert_to<double>();
            CHECK(rel_dd < 1e-29);
        }
    }
}

TEST_CASE("log-negativity clamp") {
    CHECK(clamped_log_negativity(0.0) == -10.0);
    CHECK(clamped_log_negativity(1e-12) == -10.0);
    CHECK(clamped_log_negativity(1e-5) == doctest::Approx(-5.0));
    CHECK(clamped_log_negativity(7.0) == 0.0);
}

TEST_CASE("landscape rows and sentinels") {
    const std::vector<double> t{0.0, 1.0};
    const std::vector<double> eta{0.3, 0.6, 0.9};
    const NegativityField f = scan_landscape({4, 1.0}, t, eta, Precision::Double);
    for (double v : f.values[0]) CHECK(v == -10.0);
    CHECK(f.warnings == 0);
    for (const auto& row : f.values)
        for (double v : row) CHECK((v >= -10.0 && v <= 0.0));

    // Double precision cannot resolve small spacings at N = 30.
    const NegativityField bad = scan_landscape({30, 1.0}, std::vector<double>{0.5}, std::vector<double>{0.05, 0.9},
                                               Precision::Double);
    CHECK(bad.warnings >= 1);
    CHECK(bad.values[0][0] == 0.0);
}

TEST_CASE("landscape reaches the floor along the N = 2 curve") {
    for (double t : {0.2, 1.0, 4.0, 9.0}) {
        const std::vector<double> eta{eta_analytic_n2(t)};
        const NegativityField f = scan_landscape({2, 1.0}, std::vector<double>{t}, eta, Precision::Double);
        CHECK(f.values[0][0] == -10.0);
    }
}

TEST_CASE("landscape is independent of the worker count") {
    const std::vector<double> t{0.5, 2.0, 5.0};
    const std::vector<double> eta{0.4, 0.7, 1.0, 1.3};
    const NegativityField a = scan_landscape({12, 1.0}, t, eta, Precision::Extended, 1);
    const NegativityField b = scan_landscape({12, 1.0}, t, eta, Precision::Extended, 3);
    CHECK(a.values == b.values);
}

TEST_CASE("traced N = 2 passage reproduces the closed form") {
    std::vector<double> t(100);
    for (int i = 0; i < 100; ++i) t[i] = 0.1 + 9.9 * i / 99.0;
    const PassageResult r = trace_passage({2, 1.0}, t, Branch::Lower, 1e-6, Precision::Double);
    CHECK(r.gaps.empty());
    REQUIRE(r.curve.eta.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(r.curve.eta[i] - eta_analytic_n2(t[i])) < 1e-6);
}

TEST_CASE("traced points certify separability") {
    const ModelParams p{12, 1.0};
    const std::vector<double> t = linear_grid(6.0, 61);
    const PassageResult r = trace_passage(p, t, Branch::Lower, 1e-6, Precision::Extended);
    CHECK(r.gaps.empty());
    const auto exact = evolve_exact(p, t);
    for (std::size_t i = 0; i < r.decompositions.size(); ++i) {
        const CssDecomposition& d = r.decompositions[i];
        CHECK(d.negativity < 1e-6);
        CHECK(d.eta <= 1.0);
        const DickePopulations back = reconstruct_rho(d);
        for (int m = 0; m <= 12; ++m) CHECK(std::abs(back.probs[m] - exact[i].probs[m]) < 1e-6);
    }
    CHECK(r.curve.t_grid.front() == 0.0);
    CHECK(r.curve.eta.front() == 0.0);
}

TEST_CASE("upper branch stays within its limit") {
    const std::vector<double> t{4.0, 4.1, 4.2};
    TraceOptions o;
    o.seed_eta = 1.3;
    const PassageResult r = trace_passage({8, 1.0}, t, Branch::Upper, 1e-6, Precision::Extended, o);
    CHECK(r.curve.branch == Branch::Upper);
    for (double e : r.curve.eta) CHECK(e <= 2.0);
    for (double v : r.curve.negativity) CHECK(v < 1e-6);
}

TEST_CASE("trace input validation") {
    CHECK_THROWS_AS(trace_passage({2, 1.0}, std::vector<double>{1.0}, Branch::Lower, 0.0, Precision::Double),
                    DomainError);
    CHECK_THROWS_AS(trace_passage({2, 1.0}, std::vector<double>{}, Branch::Lower, 1e-6, Precision::Double),
                    DomainError);
    CHECK_THROWS_AS(trace_passage({2, 1.0}, std::vector<double>{2.0, 1.0}, Branch::Lower, 1e-6, Precision::Double),
                    DomainError);
    CHECK(parse_branch("upper") == Branch::Upper);
    CHECK(to_string(Branch::Lower) == "lower");
    CHECK_THROWS_AS(parse_branch("middle"), DomainError);
    CHECK(parse_precision("extended") == Precision::Extended);
    CHECK_THROWS_AS(parse_precision("quad"), DomainError);
}
