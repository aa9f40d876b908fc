#include "qnd/feedback.hpp"

#include "qnd/errors.hpp"

#include <cmath>
#include <sstream>

namespace qnd {

FeedbackLaw FeedbackLaw::off() { return {}; }

FeedbackLaw FeedbackLaw::constant(double lambda0, double scale) {
    FeedbackLaw law;
    law.kind = Kind::Constant;
    law.lambda0 = lambda0;
    law.scale = scale;
    law.validate();
    return law;
}

FeedbackLaw FeedbackLaw::analytic(int n_atoms, double efficiency, double scale) {
    FeedbackLaw law;
    law.kind = Kind::Analytic;
    law.n_atoms = n_atoms;
    law.efficiency = efficiency;
    law.scale = scale;
    law.validate();
    return law;
}

FeedbackLaw FeedbackLaw::conditional(double scale) {
    FeedbackLaw law;
    law.kind = Kind::Conditional;
    law.scale = scale;
    law.validate();
    return law;
}

void FeedbackLaw::validate() const {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw ValidationError("feedback law: scale must be >= 0");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) {
        throw ValidationError("feedback law: efficiency must lie in (0, 1]");
    }
    if (kind == Kind::Constant && (!(lambda0 >= 0.0) || !std::isfinite(lambda0))) {
        throw ValidationError("feedback law: constant lambda0 must be finite and >= 0");
    }
    if (kind == Kind::Analytic && n_atoms < 1) {
        throw ValidationError("feedback law: analytic law needs N >= 1");
    }
}

std::string FeedbackLaw::describe() const {
    std::ostringstream os;
    os << to_string(kind);
    switch (kind) {
        case Kind::Off: break;
        case Kind::Constant: os << "(lambda0=" << lambda0 << ",scale=" << scale << ")"; break;
        case Kind::Analytic:
            os << "(N=" << n_atoms << ",eta=" << efficiency << ",scale=" << scale << ")";
            break;
        case Kind::Conditional: os << "(scale=" << scale << ")"; break;
    }
    return os.str();
}

double FeedbackLaw::strength(double tau, double measurement_strength, const Matrix& rho,
                             const SpinOperators& ops) const {
    switch (kind) {
        case Kind::Off: return 0.0;
        case Kind::Constant: return scale * lambda0;
        case Kind::Analytic:
            return analytic_lambda(tau, measurement_strength, n_atoms, efficiency, scale);
        case Kind::Conditional:
            return scale * conditional_lambda(rho, measurement_strength, ops);
    }
    return 0.0;
}

FeedbackLaw::Kind parse_law_kind(const std::string& name) {
    if (name == "off") return FeedbackLaw::Kind::Off;
    if (name == "constant") return FeedbackLaw::Kind::Constant;
    if (name == "analytic") return FeedbackLaw::Kind::Analytic;
    if (name == "conditional") return FeedbackLaw::Kind::Conditional;
    throw ValidationError("unknown feedback law '" + name + "' (off|constant|analytic|conditional)");
}

std::string to_string(FeedbackLaw::Kind kind) {
    switch (kind) {
        case FeedbackLaw::Kind::Off: return "off";
        case FeedbackLaw::Kind::Constant: return "constant";
        case FeedbackLaw::Kind::Analytic: return "analytic";
        case FeedbackLaw::Kind::Conditional: return "conditional";
    }
    return "off";
}

double analytic_lambda(double tau, double measurement_strength, int n_atoms, double efficiency,
                       double scale) {
    if (!(tau >= 0.0)) throw ValidationError("analytic_lambda: tau must be >= 0");
    return scale * measurement_strength * std::exp(0.5 * tau) /
           (1.0 + efficiency * n_atoms * tau);
}

double conditional_lambda(const Matrix& rho, double measurement_strength, const SpinOperators& ops) {
    const double mean_x = expectation(ops.jx.matrix(), rho).real();
    if (std::abs(mean_x) < 1e-6 * ops.system.j()) {
        throw RegimeError("conditional_lambda: mean spin <Jx> collapsed (" + std::to_string(mean_x) +
                          "); feedback law undefined");
    }
    const Matrix& jz = ops.jz.matrix();
    const double z2 = expectation(jz * jz, rho).real();
    return 2.0 * measurement_strength * z2 / mean_x;
}

double conditional_lambda(const DensityMatrix& state, double measurement_strength, const SpinOperators& ops) {
    return conditional_lambda(state.matrix(), measurement_strength, ops);
}

OperatorMatrix feedback_generator(double lambda, double current_dt, double measurement_strength,
                                  const SpinOperators& ops) {
    if (!(lambda >= 0.0)) throw ValidationError("feedback_generator: lambda must be >= 0");
    if (lambda == 0.0 || current_dt == 0.0) {
        return OperatorMatrix(Matrix::Zero(ops.system.dim(), ops.system.dim()), true);
    }
    if (!(measurement_strength > 0.0)) {
        throw ValidationError("feedback_generator: feedback requires M > 0");
    }
    const double angle = lambda / std::sqrt(measurement_strength) * current_dt;
    return OperatorMatrix(angle * ops.jy.matrix(), true);
}

}  // namespace qnd
