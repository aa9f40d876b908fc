#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qnd/dynamics.hpp"
#include "qnd/errors.hpp"
#include "qnd/feedback.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace qnd;
using qnd::testing::max_abs;

TEST_CASE("analytic law closed form") {
    CHECK(analytic_lambda(0.0, 2.5, 20, 1.0, 1.0) == doctest::Approx(2.5));
    CHECK(analytic_lambda(0.0, 2.5, 20, 1.0, 1.2) == doctest::Approx(3.0));
    CHECK(analytic_lambda(1.0, 1.0, 20, 1.0, 1.0) == doctest::Approx(std::exp(0.5) / 21.0).epsilon(1e-15));
    CHECK(analytic_lambda(2.0, 3.0, 10, 0.5, 1.2) == doctest::Approx(1.2 * 3.0 * std::exp(1.0) / 11.0));
    CHECK_THROWS_AS(analytic_lambda(-0.1, 1.0, 10, 1.0), ValidationError);
}

TEST_CASE("analytic law is positive with a single interior minimum when eta N > 1") {
    for (double eta : {1.0, 0.5, 0.2}) {
        const int n = 30;
        int turns = 0;
        double prev = analytic_lambda(0.0, 1.0, n, eta);
        double prev_diff = -1.0;
        for (int i = 1; i <= 4000; ++i) {
            const double v = analytic_lambda(i * 1e-3, 1.0, n, eta);
            CHECK(v > 0.0);
            const double diff = v - prev;
            if (diff * prev_diff < 0) ++turns;
            prev_diff = diff;
            prev = v;
        }
        CHECK(turns == 1);
    }
}

TEST_CASE("conditional and analytic laws agree at the initial state") {
    for (int n : {1, 5, 20}) {
        const auto ops = build_spin_operators(SpinSystem(n));
        const auto css = css_x(ops);
        CHECK(conditional_lambda(css, 1.7, ops) == doctest::Approx(1.7).epsilon(1e-12));
        CHECK(FeedbackLaw::conditional(1.2).strength(0.0, 1.7, css.matrix(), ops) ==
              doctest::Approx(1.2 * 1.7).epsilon(1e-12));
        CHECK(FeedbackLaw::analytic(n, 1.0, 1.2).strength(0.0, 1.7, css.matrix(), ops) ==
              doctest::Approx(1.2 * 1.7).epsilon(1e-12));
    }
}

TEST_CASE("conditional law rejects a collapsed mean spin") {
    const auto ops = build_spin_operators(SpinSystem(6));
    const Matrix mixed = Matrix::Identity(7, 7) / 7.0;
    CHECK_THROWS_AS(conditional_lambda(mixed, 1.0, ops), RegimeError);
    CHECK_THROWS_AS(conditional_lambda(z_polarized(ops.system), 1.0, ops), RegimeError);
}

TEST_CASE("conditional law tracks the analytic law along the exact solution") {
    const int n = 20;
    const auto ops = build_spin_operators(SpinSystem(n));
    const auto sol = integrate_me(css_x(ops), MeParams{}, FeedbackLaw::analytic(n), ops);
    const auto min = find_minimum(sol.series);
    for (std::size_t i = 0; i < sol.series.size(); ++i) {
        const double tau = sol.series.tau[i];
        if (tau > min.tau_star) break;
        const double cond = 2.0 * sol.series.jz2[i] / sol.series.jx[i];
        const double ana = analytic_lambda(tau, 1.0, n, 1.0);
        CHECK(std::abs(cond - ana) / ana <= 0.25);
    }
}

TEST_CASE("baseline laws") {
    const auto ops = build_spin_operators(SpinSystem(3));
    const Matrix rho = css_x(ops).matrix();
    CHECK(FeedbackLaw::off().strength(0.4, 2.0, rho, ops) == 0.0);
    CHECK(FeedbackLaw::constant(0.3).strength(5.0, 2.0, rho, ops) == 0.3);
    CHECK(FeedbackLaw::constant(0.3, 2.0).strength(5.0, 2.0, rho, ops) == doctest::Approx(0.6));
    CHECK_THROWS_AS(FeedbackLaw::constant(-1.0).validate(), ValidationError);
    CHECK_THROWS_AS(FeedbackLaw::conditional(-0.5).validate(), ValidationError);
    for (auto k : {FeedbackLaw::Kind::Off, FeedbackLaw::Kind::Constant, FeedbackLaw::Kind::Analytic,
                   FeedbackLaw::Kind::Conditional}) {
        CHECK(parse_law_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_law_kind("bang-bang"), ValidationError);
    CHECK_FALSE(FeedbackLaw::analytic(10).describe().empty());
}

TEST_CASE("feedback generator") {
    const auto ops = build_spin_operators(SpinSystem(4));
    CHECK(max_abs(feedback_generator(1.0, 0.0, 1.0, ops).matrix()) == 0.0);
    const auto g = feedback_generator(0.8, 0.3, 4.0, ops);
    CHECK(max_abs(g.matrix() - (0.8 / 2.0) * 0.3 * ops.jy.matrix()) <= 1e-15);
    CHECK(max_abs(g.matrix() * ops.jy.matrix() - ops.jy.matrix() * g.matrix()) <= 1e-14);
    CHECK_THROWS_AS(feedback_generator(-1.0, 0.1, 1.0, ops), ValidationError);

    // A state tilted toward +z is pulled back down by positive current and positive lambda.
    const auto tilted = rotate(css_x(ops), ops, Axis::Y, -0.05);
    const double before = expectation(ops.jz, tilted).real();
    REQUIRE(before > 0.0);
    const auto& s = ops.spectral_of(Axis::Y);
    const auto gen = feedback_generator(1.0, 0.1, 1.0, ops).matrix();
    // Generator is diagonal in the Jy eigenbasis; exponentiate there.
    const Matrix diag = s.vectors.adjoint() * gen * s.vectors;
    Eigen::VectorXcd u(diag.rows());
    for (int k = 0; k < diag.rows(); ++k) u(k) = std::exp(Complex(0, -1) * diag(k, k).real());
    const Matrix unitary = s.vectors * u.asDiagonal() * s.vectors.adjoint();
    const Matrix after = unitary * tilted.matrix() * unitary.adjoint();
    CHECK(expectation(ops.jz.matrix(), after).real() < before);
}
