#pragma once

#include <optional>
#include <string>

namespace qnd::design {

/// All relations here are order-of-magnitude estimates; treat outputs as such.
/// SI units throughout. gamma is taken as the bare linewidth number (no 2 pi).
enum class Regime { Cavity, FreeSpace };

struct ExperimentalParams {
    Regime regime = Regime::FreeSpace;
    double n_atoms = 1.0;
    double gamma = 0.0;          // 1/s, spontaneous emission rate
    double wavelength = 0.0;     // m
    double power = 0.0;          // W
    double detuning = 0.0;       // rad/s
    std::optional<double> omega; // rad/s; defaults to 2 pi c / wavelength
    double feedback_delay = 0.0; // s
    // Cavity only.
    std::optional<double> kappa; // 1/s
    std::optional<double> g;     // rad/s, one-photon Rabi frequency
    // Free space only.
    std::optional<double> area;  // m^2

    double probe_frequency() const;
    void validate() const;
};

/// Worked example used throughout: 1e7 cesium atoms, 852 nm, gamma = 5 MHz,
/// P = 1 fW, Delta = 1 GHz, free space at the diffraction-scale area.
ExperimentalParams cesium_preset();

/// Loss parameter: kappa gamma / g^2 (cavity) or 16 pi^2 A / lambda^2 (free space).
double alpha(const ExperimentalParams& params);

/// Area at which the free-space alpha equals one: lambda^2 / (16 pi^2).
double diffraction_area(double wavelength);

struct LossBudget {
    double loss_rate;   // Gamma = alpha M
    double atoms_lost;  // Delta N = alpha M N t
    bool total_loss;    // Delta N >= N
};

LossBudget loss_rate_and_budget(double alpha, double measurement_strength, double n_atoms, double t);

enum class SqueezingClass { Heisenberg, SqrtN, Weak, None };

struct AttainableSqueezing {
    double xi2;  // sqrt(alpha / N), capped at 1 when alpha >= N
    SqueezingClass regime;
};

/// xi^2 ~ sqrt(alpha/N). Classes split at the geometric midpoints of the anchors
/// alpha ~ 1/N (Heisenberg), alpha ~ 1 (1/sqrt(N)), alpha ~ N (none).
AttainableSqueezing attainable_squeezing(double alpha, double n_atoms);

std::string to_string(SqueezingClass c);

/// Threshold used for every "much less than" verdict.
inline constexpr double kMuchLessRatio = 0.1;

struct LaserConstraints {
    double measurement_strength;  // M = gamma^2 P / (hbar omega Delta^2 alpha^2), 1/s
    double far_detuned_ratio;     // Gamma / gamma = M alpha / gamma
    bool far_detuned_ok;          // ratio < kMuchLessRatio
    double power_bound;           // hbar omega alpha / gamma; need P/Delta^2 << this (W s^2 rad^-2)
    double power_ratio;           // (P/Delta^2) / power_bound
    double feedback_time;         // tau_fb ~ 1/(N M), s
    bool delay_ok;                // feedback_delay <= tau_fb
};

LaserConstraints laser_constraints(const ExperimentalParams& params, double alpha);

struct SingleShotFloor {
    double err_variance;  // eps^2 N / 4
    double xi2_floor;     // eps^2
};

SingleShotFloor single_shot_floor(double epsilon, double n_atoms);

/// N above which a continuous-feedback minimum coefficient/N beats the eps^2 floor.
double single_shot_crossover(double coefficient, double epsilon);

/// Single-atom probe phase shift theta = hbar omega gamma^2 / (8 A Delta I_sat),
/// I_sat = 2 pi^2 hbar omega gamma / lambda^2.
double saturation_intensity(double omega, double gamma, double wavelength);
double phase_shift_per_atom(double omega, double gamma, double area, double detuning, double wavelength);

}  // namespace qnd::design
