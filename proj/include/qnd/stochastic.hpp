#pragma once

#include "qnd/dynamics.hpp"
#include "qnd/feedback.hpp"
#include "qnd/observables.hpp"
#include "qnd/spin_algebra.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qnd {

/// Reproducible standard-Gaussian stream for one trajectory.
///
/// Seeds for trajectory i of an ensemble are the (i+1)-th output of splitmix64
/// started from master_seed. Variates come from std::mt19937_64 through
/// Box-Muller on 53-bit uniforms, so streams are identical on every platform.
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed);

    static std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

    std::uint64_t seed() const { return seed_; }
    double gaussian();
    /// Wiener increment over a step of length dt: sqrt(dt) N(0,1).
    double increment(double dt) { return std::sqrt(dt) * gaussian(); }

private:
    double uniform();

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// One homodyne-conditioned trajectory, sampled on the integrate_me grid.
struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<double> times;
    /// Dimensionless charge sqrt(M) * sum(I_c dt) over the preceding sample interval.
    std::vector<double> photocurrent;
    std::vector<std::array<double, 3>> cond_means;  // <Jx>_c, <Jz>_c, <Jz^2>_c
    std::vector<double> cond_purity;
    std::vector<double> lambda;
    DensityMatrix final_state = DensityMatrix::trusted(Matrix());
};

/// Per-trajectory stepping engine with cached spectral data. Works in tau = Mt:
/// `dW` is the Wiener increment over params.dt and the returned charge is
/// q = sqrt(M) I_c dt = 2 eta <Jz>_c dtau + sqrt(eta) dW.
class SmeStepper {
public:
    explicit SmeStepper(const SpinOperators& ops);

    /// Advances rho in place (measurement update, feedback conjugation, renormalization).
    double step(Matrix& rho, double dW, const MeParams& params, double lambda) const;

private:
    Eigen::VectorXd m_;
    Eigen::VectorXd jy_values_;
    Matrix jy_vectors_;
};

/// One conditioned step. Returns the new state and sqrt(M) I_c dt.
std::pair<DensityMatrix, double> sme_step(const DensityMatrix& rho_c, double dW, const MeParams& params,
                                          double lambda, const SpinOperators& ops);

/// Called at each sample with (sample index, tau, conditional state, lambda, charge since last sample).
using TrajectoryObserver = std::function<void(std::size_t, double, const Matrix&, double, double)>;

/// Runs one trajectory from tau = 0 to t_max, invoking `observer` at each sample.
DensityMatrix run_trajectory(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                             std::uint64_t seed, const SpinOperators& ops, const TrajectoryObserver& observer);

TrajectoryRecord simulate_trajectory(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                                     std::uint64_t seed, const SpinOperators& ops);

struct EnsembleOptions {
    int workers = 1;
    /// Step of the deterministic master-equation reference run.
    double reference_dt = 1e-3;
};

struct EnsembleResult {
    ObservableSeries series;              // observables of the averaged state
    std::vector<double> trace_distance;   // to the integrate_me solution, per sample
    double stat_scale = 0.0;              // 1/sqrt(K)
    double min_cond_purity = 1.0;         // over every trajectory and sample
    int trajectories = 0;
    DensityMatrix final_state = DensityMatrix::trusted(Matrix());
};

/// Mean of rho_c over K trajectories seeded from (master_seed, index). Results are
/// bit-identical for any worker count.
EnsembleResult ensemble_average(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                                int trajectories, std::uint64_t master_seed, const SpinOperators& ops,
                                const EnsembleOptions& options = {});

/// (1/2) sum |eigenvalues(a - b)| for Hermitian a, b.
double trace_distance(const Matrix& a, const Matrix& b);

}  // namespace qnd
