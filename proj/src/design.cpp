#include "qnd/design.hpp"

#include "qnd/constants.hpp"
#include "qnd/errors.hpp"

#include <cmath>

namespace qnd::design {

namespace {

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(what + " must be finite and > 0");
}

}  // namespace

double ExperimentalParams::probe_frequency() const {
    if (omega) return *omega;
    require_positive(wavelength, "wavelength");
    return 2.0 * si::pi * si::c / wavelength;
}

void ExperimentalParams::validate() const {
    require_positive(n_atoms, "N");
    require_positive(gamma, "gamma");
    require_positive(wavelength, "wavelength");
    require_positive(power, "P");
    require_positive(detuning, "Delta");
    require_positive(probe_frequency(), "omega");
    if (!(feedback_delay >= 0.0)) throw ValidationError("feedback delay must be >= 0");
}

ExperimentalParams cesium_preset() {
    ExperimentalParams p;
    p.regime = Regime::FreeSpace;
    p.n_atoms = 1e7;
    p.gamma = 5e6;
    p.wavelength = 852e-9;
    p.power = 1e-15;
    p.detuning = 1e9;
    p.feedback_delay = 1e-7;
    p.area = diffraction_area(p.wavelength);
    return p;
}

double diffraction_area(double wavelength) {
    require_positive(wavelength, "wavelength");
    return wavelength * wavelength / (16.0 * si::pi * si::pi);
}

double alpha(const ExperimentalParams& params) {
    if (params.regime == Regime::Cavity) {
        if (!params.kappa || !params.g) throw ValidationError("cavity regime needs kappa and g");
        require_positive(*params.kappa, "kappa");
        require_positive(*params.g, "g");
        require_positive(params.gamma, "gamma");
        return *params.kappa * params.gamma / (*params.g * *params.g);
    }
    if (!params.area) throw ValidationError("free-space regime needs the beam area");
    require_positive(*params.area, "area");
    require_positive(params.wavelength, "wavelength");
    return 16.0 * si::pi * si::pi * *params.area / (params.wavelength * params.wavelength);
}

LossBudget loss_rate_and_budget(double alpha, double measurement_strength, double n_atoms, double t) {
    if (!(alpha >= 0.0) || !(measurement_strength >= 0.0) || !(n_atoms > 0.0) || !(t >= 0.0)) {
        throw ValidationError("loss budget: inputs must be non-negative (N > 0)");
    }
    LossBudget b{};
    b.loss_rate = alpha * measurement_strength;
    b.atoms_lost = b.loss_rate * n_atoms * t;
    b.total_loss = b.atoms_lost >= n_atoms;
    return b;
}

AttainableSqueezing attainable_squeezing(double alpha, double n_atoms) {
    if (!(alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
    require_positive(n_atoms, "N");
    AttainableSqueezing out{};
    if (alpha >= n_atoms) {
        out.xi2 = 1.0;
        out.regime = SqueezingClass::None;
        return out;
    }
    out.xi2 = std::sqrt(alpha / n_atoms);
    const double root_n = std::sqrt(n_atoms);
    if (alpha < 1.0 / root_n) {
        out.regime = SqueezingClass::Heisenberg;
    } else if (alpha < root_n) {
        out.regime = SqueezingClass::SqrtN;
    } else {
        out.regime = SqueezingClass::Weak;
    }
    return out;
}

std::string to_string(SqueezingClass c) {
    switch (c) {
        case SqueezingClass::Heisenberg: return "heisenberg";
        case SqueezingClass::SqrtN: return "sqrtN";
        case SqueezingClass::Weak: return "weak";
        case SqueezingClass::None: return "none";
    }
    return "none";
}

LaserConstraints laser_constraints(const ExperimentalParams& params, double alpha) {
    params.validate();
    require_positive(alpha, "alpha");
    const double omega = params.probe_frequency();
    const double delta2 = params.detuning * params.detuning;
    LaserConstraints lc{};
    lc.measurement_strength =
        params.gamma * params.gamma * params.power / (si::hbar * omega * delta2 * alpha * alpha);
    lc.far_detuned_ratio = lc.measurement_strength * alpha / params.gamma;
    lc.far_detuned_ok = lc.far_detuned_ratio < kMuchLessRatio;
    lc.power_bound = si::hbar * omega * alpha / params.gamma;
    lc.power_ratio = params.power / delta2 / lc.power_bound;
    lc.feedback_time = 1.0 / (params.n_atoms * lc.measurement_strength);
    lc.delay_ok = params.feedback_delay <= lc.feedback_time;
    return lc;
}

SingleShotFloor single_shot_floor(double epsilon, double n_atoms) {
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be >= 0");
    require_positive(n_atoms, "N");
    return {epsilon * epsilon * n_atoms / 4.0, epsilon * epsilon};
}

double single_shot_crossover(double coefficient, double epsilon) {
    require_positive(coefficient, "coefficient");
    require_positive(epsilon, "epsilon");
    return coefficient / (epsilon * epsilon);
}

double saturation_intensity(double omega, double gamma, double wavelength) {
    require_positive(omega, "omega");
    require_positive(gamma, "gamma");
    require_positive(wavelength, "wavelength");
    return 2.0 * si::pi * si::pi * si::hbar * omega * gamma / (wavelength * wavelength);
}

double phase_shift_per_atom(double omega, double gamma, double area, double detuning, double wavelength) {
    require_positive(area, "area");
    require_positive(detuning, "Delta");
    return si::hbar * omega * gamma * gamma /
           (8.0 * area * detuning * saturation_intensity(omega, gamma, wavelength));
}

}  // namespace qnd::design
