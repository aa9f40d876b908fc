#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qnd/dynamics.hpp"
#include "qnd/errors.hpp"
#include "qnd/observables.hpp"
#include "test_support.hpp"

#include <cmath>
#include <limits>

using namespace qnd;

namespace {

using Vec3 = std::array<double, 3>;

// Partly mixed state with a nonzero <Jz>.
DensityMatrix tilted_mixture(const SpinOperators& ops) {
    const auto a = rotate(css_x(ops), ops, Axis::Y, -0.3);
    const Matrix mixed = 0.8 * a.matrix() + 0.2 * Matrix::Identity(ops.system.dim(), ops.system.dim()) /
                                                static_cast<double>(ops.system.dim());
    return DensityMatrix(mixed);
}

}  // namespace

TEST_CASE("xi2 of a coherent state is one in any normal frame") {
    for (int n : {1, 4, 25}) {
        const auto ops = build_spin_operators(SpinSystem(n));
        const auto css = css_x(ops);
        CHECK(xi2_z(css, ops) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(xi2_general(css, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, ops) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(xi2_general(css, {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, ops) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("xi2 degenerate inputs") {
    const auto ops = build_spin_operators(SpinSystem(4));
    CHECK_THROWS_AS(xi2_z(z_polarized(ops.system), ops), RegimeError);
    CHECK_THROWS_AS(xi2_general(css_x(ops), {0, 0, 1}, {1, 0.1, 0}, {0, 1, 0}, ops), ValidationError);
    const Matrix mixed = Matrix::Identity(5, 5) / 5.0;
    CHECK_THROWS_AS(xi2_general(DensityMatrix(mixed), {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, ops), RegimeError);
}

TEST_CASE("general xi2 uses the variance, xi2_z the second moment") {
    const int n = 6;
    const auto ops = build_spin_operators(SpinSystem(n));
    const auto rho = tilted_mixture(ops);
    const double jx = expectation(ops.jx, rho).real();
    const double jy = expectation(ops.jy, rho).real();
    const double jz = expectation(ops.jz, rho).real();
    const double jz2 = expectation(ops.jz.matrix() * ops.jz.matrix(), rho.matrix()).real();
    REQUIRE(std::abs(jz) > 0.1);
    CHECK(xi2_z(rho, ops) == doctest::Approx(n * jz2 / (jx * jx)).epsilon(1e-12));
    CHECK(xi2_general(rho, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, ops) ==
          doctest::Approx(n * (jz2 - jz * jz) / (jx * jx + jy * jy)).epsilon(1e-12));
}

TEST_CASE("xi2 is invariant under a co-rotated frame") {
    const int n = 8;
    const auto ops = build_spin_operators(SpinSystem(n));
    // Squeeze a little with the exact dynamics to get a nontrivial state.
    MeParams p;
    p.t_max = 0.3;
    const auto rho = integrate_me(css_x(ops), p, FeedbackLaw::analytic(n), ops).final_state;
    const double base = xi2_general(rho, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, ops);
    for (double angle : {0.2, 1.1, -2.5}) {
        const auto turned = rotate(rho, ops, Axis::X, angle);
        // Rotating the state by angle about x maps J_n to J_{R n}.
        const double c = std::cos(angle), s = std::sin(angle);
        const Vec3 n1{0, -s, c}, n3{0, c, s};
        CHECK(xi2_general(turned, n1, {1, 0, 0}, n3, ops) == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("analytic predictions") {
    const auto at0 = analytic_predictions(0.0, 20, 1.0);
    CHECK(at0.jz2 == doctest::Approx(5.0));
    CHECK(at0.jx == doctest::Approx(10.0));
    CHECK(at0.xi2 == doctest::Approx(1.0));
    CHECK(at0.tau_star == doctest::Approx(1.0));
    CHECK(at0.xi2_min == doctest::Approx(std::exp(1.0) / 20));
    const auto half = analytic_predictions(0.7, 30, 0.5);
    CHECK(half.jz2 == doctest::Approx(1.0 / (4 * 0.5 * 0.7 + 2.0 / 15)));
    CHECK(half.xi2 == doctest::Approx(std::exp(0.7) / (1 + 0.5 * 30 * 0.7)));
    CHECK(half.tau_star == doctest::Approx(2.0));
    CHECK(half.xi2_min == doctest::Approx(std::exp(2.0) / 30));
    CHECK_THROWS_AS(analytic_predictions(-1.0, 20, 1.0), ValidationError);

    // Interior minimum of exp(tau)/(1 + N tau) lies at (N-1)/N.
    const int n = 200;
    double best = 1e9, best_tau = 0;
    for (int i = 0; i <= 20000; ++i) {
        const double t = i * 1e-4;
        const double v = analytic_predictions(t, n, 1.0).xi2;
        if (v < best) best = v, best_tau = t;
    }
    CHECK(best_tau == doctest::Approx((n - 1.0) / n).epsilon(1e-3));
}

TEST_CASE("analytic predictions track the exact solution at N=20") {
    const int n = 20;
    const auto ops = build_spin_operators(SpinSystem(n));
    const auto sol = integrate_me(css_x(ops), MeParams{}, FeedbackLaw::analytic(n), ops);
    const auto min = find_minimum(sol.series);
    CHECK(min.xi2_min >= 2.5 / 20);
    CHECK(min.xi2_min <= 4.0 / 20);
    CHECK(min.tau_star > 0.5);
    CHECK(min.tau_star < 2.0);
    for (std::size_t i = 0; i < sol.series.size(); ++i) {
        const double tau = sol.series.tau[i];
        const auto a = analytic_predictions(tau, n, 1.0);
        if (tau <= 1.0) CHECK(std::abs(a.jx - sol.series.jx[i]) / sol.series.jx[i] <= 0.05);
        if (tau <= min.tau_star) CHECK(std::abs(a.jz2 - sol.series.jz2[i]) / sol.series.jz2[i] <= 0.25);
        CHECK(sol.series.purity[i] <= 1.0 + 1e-9);
        CHECK(sol.series.purity[i] > 0.0);
        CHECK(sol.series.xi2[i] > 0.0);
    }
}

TEST_CASE("find_minimum") {
    std::vector<double> tau, up, parabola;
    for (int i = 0; i <= 40; ++i) {
        const double t = 0.05 * i;
        tau.push_back(t);
        up.push_back(1.0 + t);
        parabola.push_back(0.3 + 2.0 * (t - 0.8123) * (t - 0.8123));
    }
    CHECK_THROWS_AS(find_minimum(tau, up), RegimeError);
    const auto m = find_minimum(tau, parabola);
    CHECK(m.tau_star == doctest::Approx(0.8123).epsilon(1e-10));
    CHECK(m.xi2_min == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(interpolate_quadratic(tau, parabola, m.index, 0.8123) == doctest::Approx(0.3).epsilon(1e-10));

    // Undefined samples are skipped.
    auto holes = parabola;
    holes[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK(find_minimum(tau, holes).tau_star == doctest::Approx(0.8123).epsilon(1e-10));
}

TEST_CASE("inverse scaling fit") {
    std::vector<ScalingPoint> exact;
    for (int n = 10; n <= 100; n += 10) exact.push_back({n, 5.0 / n});
    const auto f = fit_inverse_scaling(exact);
    CHECK(f.exponent == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(f.coefficient == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(f.loglog_prefactor == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(f.residual >= 0.0);
    CHECK(f.residual < 1e-10);
    CHECK(f.n_xi2.size() == exact.size());
    CHECK(f.points[f.fitted_from].n_atoms == 60);

    // A 1/N correction is absorbed by the asymptotic coefficient.
    std::vector<ScalingPoint> corrected;
    for (int n = 10; n <= 100; n += 10) corrected.push_back({n, (3.3 - 7.0 / n) / n});
    CHECK(fit_inverse_scaling(corrected).coefficient == doctest::Approx(3.3).epsilon(1e-10));

    // Scaling every value leaves the exponent unchanged.
    std::vector<ScalingPoint> scaled = corrected;
    for (auto& p : scaled) p.xi2_min *= 2.7;
    CHECK(fit_inverse_scaling(scaled).exponent ==
          doctest::Approx(fit_inverse_scaling(corrected).exponent).epsilon(1e-12));

    CHECK_THROWS_AS(fit_inverse_scaling({{10, 0.3}, {20, 0.1}}), ValidationError);
    CHECK_THROWS_AS(fit_inverse_scaling({{10, 0.3}, {20, -0.1}, {30, 0.05}}), ValidationError);
    CHECK_THROWS_AS(fit_inverse_scaling({{10, 0.3}, {30, 0.1}, {20, 0.05}}), ValidationError);
}

TEST_CASE("stop time for a target squeezing") {
    CHECK(stop_time_for_target(1.0, 50, 1.0) == 0.0);
    CHECK_THROWS_AS(stop_time_for_target(1.2, 50, 1.0), ValidationError);
    CHECK_THROWS_AS(stop_time_for_target(std::exp(1.0) / 50 * 0.99, 50, 1.0), RegimeError);
    const double tau = stop_time_for_target(0.1, 100, 1.0);
    CHECK(std::abs(tau - 0.1) / 0.1 <= 0.2);
    CHECK(analytic_predictions(tau, 100, 1.0).xi2 == doctest::Approx(0.1).epsilon(1e-9));
    const double tau_half = stop_time_for_target(0.5, 40, 0.5);
    CHECK(analytic_predictions(tau_half, 40, 0.5).xi2 == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("series records equal-length columns") {
    const auto ops = build_spin_operators(SpinSystem(3));
    ObservableSeries s;
    s.append(0.0, css_x(ops).matrix(), ops, 1.0);
    s.append(0.1, css_x(ops).matrix(), ops, 0.9);
    CHECK(s.size() == 2);
    CHECK(s.jx.size() == 2);
    CHECK(s.lambda[1] == 0.9);
    s.append(0.2, z_polarized(ops.system).matrix(), ops, 0.0);
    CHECK(std::isnan(s.xi2[2]));
}
