#pragma once

#include "qnd/spin_algebra.hpp"

#include <string>

namespace qnd {

/// Feedback-strength policy lambda(t).
///
/// `scale` multiplies every law (the miscalibration factor of robustness runs,
/// e.g. 1.2). `efficiency` and `n_atoms` enter only the analytic law.
struct FeedbackLaw {
    enum class Kind { Off, Constant, Analytic, Conditional };

    Kind kind = Kind::Off;
    double lambda0 = 0.0;  // Constant only, 1/time
    double scale = 1.0;
    double efficiency = 1.0;
    int n_atoms = 1;

    static FeedbackLaw off();
    static FeedbackLaw constant(double lambda0, double scale = 1.0);
    static FeedbackLaw analytic(int n_atoms, double efficiency = 1.0, double scale = 1.0);
    static FeedbackLaw conditional(double scale = 1.0);

    void validate() const;
    std::string describe() const;

    /// lambda at dimensionless time tau for the given state. Conditional uses the
    /// moments of `rho` (ensemble moments when rho is an unconditional state).
    double strength(double tau, double measurement_strength, const Matrix& rho,
                    const SpinOperators& ops) const;
};

FeedbackLaw::Kind parse_law_kind(const std::string& name);
std::string to_string(FeedbackLaw::Kind kind);

/// scale * M e^{tau/2} / (1 + eta N tau).
double analytic_lambda(double tau, double measurement_strength, int n_atoms, double efficiency,
                       double scale = 1.0);

/// 2 M <Jz^2> / <Jx>. Throws RegimeError when |<Jx>| < 1e-6 j.
double conditional_lambda(const Matrix& rho, double measurement_strength, const SpinOperators& ops);
double conditional_lambda(const DensityMatrix& state, double measurement_strength, const SpinOperators& ops);

/// (lambda / sqrt(M)) I_c dt J_y: the Hermitian generator of one feedback step,
/// U = exp(-i G).
OperatorMatrix feedback_generator(double lambda, double current_dt, double measurement_strength,
                                  const SpinOperators& ops);

}  // namespace qnd
