#pragma once

#include "qnd/feedback.hpp"
#include "qnd/observables.hpp"
#include "qnd/spin_algebra.hpp"


#include <functional>
#include <string>
#include <vector>

namespace qnd {

/// Parameters shared by the deterministic and stochastic integrators.
/// Times are dimensionless, tau = M t.
struct MeParams {
    double measurement_strength = 1.0;  // M, 1/time; 0 freezes the state
    double efficiency = 1.0;            // eta in (0, 1]
    double dt = 1e-3;
    double t_max = 2.0;
    double sample_interval = 1e-2;      // must be an integer multiple of dt

    void validate() const;
    /// Integration steps between recorded samples.
    int steps_per_sample() const;
    /// Number of recorded samples, including tau = 0.
    int sample_count() const;
    /// tau after `step` steps.
    double time_at(long step) const;
};

/// Structured evaluator for the measurement-plus-feedback generator in units of M:
///   d rho / d tau = D[Jz]rho - i l [Jy, Jz rho + rho Jz] + (l^2/eta) D[Jy]rho,  l = lambda/M.
/// Exploits Jz diagonal and Jy tridiagonal, so one evaluation is O(dim^2).
class MasterEquation {
public:
    explicit MasterEquation(const SpinOperators& ops);

    void rhs(const Matrix& rho, double lambda_ratio, double efficiency, Matrix& out) const;
    Matrix rhs(const Matrix& rho, double lambda_ratio, double efficiency) const;

    /// Operator-norm bound on the generator, used to choose stable RK4 sub-steps.
    double rate_bound(double lambda_ratio, double efficiency) const;

private:
    Eigen::VectorXd m_;        // Jz diagonal
    Eigen::MatrixXd dephase_;  // -(m_i - m_k)^2 / 2
    Eigen::MatrixXd anti_;     // m_i + m_k
    Eigen::VectorXd up_;       // Jy(k, k+1) / i
    Eigen::VectorXd lo_;       // Jy(k+1, k) / i
    double j_;
    // Scratch space: one instance must not be shared between threads.
    mutable Matrix ws_s_, ws_a_, ws_b_;

    void left(const Matrix& a, Matrix& out) const;
    void right(const Matrix& a, Matrix& out) const;
};

/// d rho / dt = M D[Jz]rho - i lambda [Jy, Jz rho + rho Jz] + lambda^2/(eta M) D[Jy]rho.
Matrix me_rhs(const DensityMatrix& state, double lambda, const MeParams& params, const SpinOperators& ops);

/// Same generator in Lindblad form with c = sqrt(M) Jz, F = lambda Jy / sqrt(M):
///   -(i/2)[c^dag F + F c, rho] + D[c - iF]rho + ((1-eta)/eta) D[F]rho.
/// Built from dense products only.
Matrix me_rhs_lindblad(const DensityMatrix& state, double lambda, const MeParams& params,
                       const SpinOperators& ops);

/// D[r]rho = r rho r^dag - (r^dag r rho + rho r^dag r)/2.
Matrix dissipator(const Matrix& r, const Matrix& rho);

struct EffectiveHamiltonian {
    OperatorMatrix matrix;
    double lambda_at_t;
};

/// (1/2) lambda (Jz Jy + Jy Jz).
EffectiveHamiltonian effective_hamiltonian(double lambda, const SpinOperators& ops);

/// Called at every recorded sample with (sample index, tau, state, lambda).
using SampleObserver = std::function<void(std::size_t, double, const Matrix&, double)>;

struct MeSolution {
    ObservableSeries series;
    DensityMatrix final_state;
};

/// Fixed-step classical RK4 in tau with lambda re-evaluated at every stage time.
/// Invariants are checked at each sample; violations throw NumericalError.
MeSolution integrate_me(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                        const SpinOperators& ops, const SampleObserver& observer = {});

/// Measurement strength with an optional validity warning.
struct MeasurementStrength {
    double value;
    std::vector<std::string> warnings;
};

/// Cavity: M = 8 chi^2 P / (hbar omega kappa^2). SI units.
double m_from_cavity(double chi, double power, double omega, double kappa);

/// kappa / (chi |beta| sqrt(N)) with P = hbar omega |beta|^2 kappa / 2; warns below 10.
MeasurementStrength m_from_cavity_checked(double chi, double power, double omega, double kappa, int n_atoms);

/// Free space: M = P theta^2 / (hbar omega). SI units.
double m_from_freespace(double theta, double power, double omega);

/// As above, warning when theta sqrt(N) >= 0.1.
MeasurementStrength m_from_freespace_checked(double theta, double power, double omega, int n_atoms);

}  // namespace qnd
