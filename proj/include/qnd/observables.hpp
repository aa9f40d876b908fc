#pragma once

#include "qnd/spin_algebra.hpp"

#include <array>
#include <string>
#include <vector>

namespace qnd {

/// Time-indexed record of the squeezing observables.
struct ObservableSeries {
    struct Snapshot {
        int n_atoms = 0;
        double measurement_strength = 1.0;
        double efficiency = 1.0;
        double dt = 0.0;
        double t_max = 0.0;
        std::string law;  // human-readable feedback law description
    };

    std::vector<double> tau;
    std::vector<double> jx;
    std::vector<double> jy2;
    std::vector<double> jz2;
    std::vector<double> xi2;  // N<Jz^2>/<Jx>^2, NaN where <Jx> vanishes
    std::vector<double> purity;
    std::vector<double> lambda;
    Snapshot params;

    std::size_t size() const { return tau.size(); }
    void append(double t, const Matrix& rho, const SpinOperators& ops, double lambda_value);
};

/// N <Jz^2> / <Jx>^2. Uses the second moment, not the variance.
double xi2_z(const Matrix& rho, const SpinOperators& ops);
double xi2_z(const DensityMatrix& state, const SpinOperators& ops);

/// N (Delta J_n1)^2 / (<J_n2>^2 + <J_n3>^2) for an orthonormal frame (n1, n2, n3).
double xi2_general(const DensityMatrix& state, const std::array<double, 3>& n1,
                   const std::array<double, 3>& n2, const std::array<double, 3>& n3,
                   const SpinOperators& ops);

/// Closed-form approximations for the analytic feedback law, in dimensionless time tau = Mt.
struct AnalyticPredictions {
    double jz2;
    double jx;
    double xi2;
    double tau_star;
    double xi2_min;
};

AnalyticPredictions analytic_predictions(double tau, int n_atoms, double efficiency);

struct SeriesMinimum {
    double tau_star;
    double xi2_min;
    std::size_t index;  // grid argmin
};

/// Grid argmin of xi2 refined by a three-point parabola. Throws RegimeError when
/// the minimum sits on either end of the series.
SeriesMinimum find_minimum(const std::vector<double>& tau, const std::vector<double>& values);
SeriesMinimum find_minimum(const ObservableSeries& series);

/// Three-point quadratic interpolation of `values` at `t` around grid index `center`.
double interpolate_quadratic(const std::vector<double>& tau, const std::vector<double>& values,
                             std::size_t center, double t);

struct ScalingPoint {
    int n_atoms;
    double xi2_min;
};

struct ScalingFit {
    double exponent;             // log-log slope over the fitted points
    double coefficient;          // asymptotic N * xi2_min, from N*xi2 = a + b/N
    double correction;           // b in the same fit
    double loglog_prefactor;     // exp(intercept) of the log-log fit
    double residual;             // rms residual of the log-log fit
    std::size_t fitted_from;     // index of the first point used (largest-N half)
    std::vector<ScalingPoint> points;
    std::vector<double> n_xi2;   // per point N * xi2_min
};

/// Power-law and asymptotic-coefficient fit over the largest-N half of the points.
ScalingFit fit_inverse_scaling(const std::vector<ScalingPoint>& points);

/// Smallest tau with e^tau / (1 + eta N tau) = target.
double stop_time_for_target(double xi2_target, int n_atoms, double efficiency);

}  // namespace qnd
