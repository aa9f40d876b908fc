#include "qnd/stochastic.hpp"

#include "qnd/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace qnd {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t NoiseStream::derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    // Output number index+1 of splitmix64, computed directly.
    std::uint64_t state = master_seed + index * 0x9E3779B97F4A7C15ULL;
    return splitmix64(state);
}

double NoiseStream::uniform() {
    // (0, 1]: never zero, so log() below is finite.
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double NoiseStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
}

SmeStepper::SmeStepper(const SpinOperators& ops) {
    const int d = ops.system.dim();
    m_.resize(d);
    for (int k = 0; k < d; ++k) m_[k] = ops.system.m(k);
    const auto& s = ops.spectral_of(Axis::Y);
    jy_values_ = s.values;
    jy_vectors_ = s.vectors;
}

double SmeStepper::step(Matrix& rho, double dW, const MeParams& params, double lambda) const {
    const double mstr = params.measurement_strength;
    const double eta = params.efficiency;
    const double sqrt_eta = std::sqrt(eta);
    if (mstr == 0.0) {
        if (lambda != 0.0) throw ValidationError("sme_step: feedback without measurement (M = 0)");
        return sqrt_eta * dW;
    }
    const double dtau = params.dt;
    const int d = static_cast<int>(m_.size());

    double mean_z = 0.0;
    for (int i = 0; i < d; ++i) mean_z += m_[i] * rho(i, i).real();

    // Measurement: rho -> A rho A + (1 - eta) Jz rho Jz dtau with A diagonal in the Jz basis.
    const double dy = 2.0 * sqrt_eta * mean_z * dtau + dW;
    Eigen::VectorXd a(d);
    for (int i = 0; i < d; ++i) {
        const double m = m_[i];
        a[i] = 1.0 - 0.5 * m * m * dtau + sqrt_eta * m * dy + 0.5 * eta * m * m * (dy * dy - dtau);
    }
    const double undetected = (1.0 - eta) * dtau;
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < d; ++i) {
            rho(i, k) *= a[i] * a[k] + undetected * m_[i] * m_[k];
        }
    }
    double trace = 0.0;
    for (int i = 0; i < d; ++i) trace += rho(i, i).real();
    if (!(trace > 0.0) || !std::isfinite(trace)) {
        throw NumericalError("sme_step: non-positive trace after measurement update; reduce dt");
    }

    const double charge = sqrt_eta * dy;

    // Feedback: U = exp(-i (lambda/M) q Jy), applied in the Jy eigenbasis.
    const double angle = lambda / mstr * charge;
    if (angle != 0.0) {
        Eigen::VectorXcd phase(d);
        for (int i = 0; i < d; ++i) phase[i] = std::polar(1.0, -angle * jy_values_[i]);
        Matrix in_y = jy_vectors_.adjoint() * rho * jy_vectors_;
        in_y = phase.asDiagonal() * in_y * phase.conjugate().asDiagonal();
        rho.noalias() = jy_vectors_ * in_y * jy_vectors_.adjoint();
    }
    rho /= trace;
    return charge;
}

std::pair<DensityMatrix, double> sme_step(const DensityMatrix& rho_c, double dW, const MeParams& params,
                                          double lambda, const SpinOperators& ops) {
    if (rho_c.dim() != ops.system.dim()) throw ValidationError("sme_step: dimension mismatch");
    if (!std::isfinite(lambda)) throw ValidationError("sme_step: lambda must be finite");
    const SmeStepper stepper(ops);
    Matrix rho = rho_c.matrix();
    const double charge = stepper.step(rho, dW, params, lambda);
    return {DensityMatrix::trusted(std::move(rho)), charge};
}

DensityMatrix run_trajectory(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                             std::uint64_t seed, const SpinOperators& ops, const TrajectoryObserver& observer) {
    params.validate();
    law.validate();
    if (rho0.dim() != ops.system.dim()) throw ValidationError("run_trajectory: dimension mismatch");

    const double mstr = params.measurement_strength;
    const int per_sample = params.steps_per_sample();
    const int samples = params.sample_count();
    const SmeStepper stepper(ops);
    NoiseStream noise(seed);

    Matrix rho = rho0.matrix();
    auto lambda_at = [&](double tau) { return mstr == 0.0 ? 0.0 : law.strength(tau, mstr, rho, ops); };

    if (observer) observer(0, 0.0, rho, lambda_at(0.0), 0.0);
    long step = 0;
    for (int s = 1; s < samples; ++s) {
        double charge = 0.0;
        for (int k = 0; k < per_sample; ++k, ++step) {
            const double tau = params.time_at(step);
            const double dW = noise.increment(params.dt);
            charge += stepper.step(rho, dW, params, lambda_at(tau));
        }
        const double tau = params.time_at(step);
        if (observer) observer(static_cast<std::size_t>(s), tau, rho, lambda_at(tau), charge);
    }
    return DensityMatrix::trusted(std::move(rho));
}

TrajectoryRecord simulate_trajectory(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                                     std::uint64_t seed, const SpinOperators& ops) {
    TrajectoryRecord rec;
    rec.seed = seed;
    const Matrix& jx = ops.jx.matrix();
    const Matrix& jz = ops.jz.matrix();
    const Matrix jz2 = jz * jz;
    auto observer = [&](std::size_t, double tau, const Matrix& rho, double lambda, double charge) {
        rec.times.push_back(tau);
        rec.photocurrent.push_back(charge);
        rec.cond_means.push_back({expectation(jx, rho).real(), expectation(jz, rho).real(),
                                  expectation(jz2, rho).real()});
        rec.cond_purity.push_back(rho.cwiseAbs2().sum());
        rec.lambda.push_back(lambda);
    };
    rec.final_state = run_trajectory(rho0, params, law, seed, ops, observer);
    return rec;
}

double trace_distance(const Matrix& a, const Matrix& b) {
    const Matrix diff = a - b;
    const Matrix herm = 0.5 * (diff + diff.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace {

constexpr int kChunk = 8;

struct ChunkSum {
    std::vector<Matrix> states;
    std::vector<double> lambdas;
    double min_purity = 1.0;
    std::exception_ptr error;
};

// Fixed-shape pairwise reduction over chunk index, independent of who computed what.
void pairwise_reduce(std::vector<ChunkSum>& chunks, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 1) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    pairwise_reduce(chunks, lo, mid);
    pairwise_reduce(chunks, mid, hi);
    for (std::size_t s = 0; s < chunks[lo].states.size(); ++s) {
        chunks[lo].states[s] += chunks[mid].states[s];
        chunks[lo].lambdas[s] += chunks[mid].lambdas[s];
    }
    chunks[lo].min_purity = std::min(chunks[lo].min_purity, chunks[mid].min_purity);
}

}  // namespace

EnsembleResult ensemble_average(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                                int trajectories, std::uint64_t master_seed, const SpinOperators& ops,
                                const EnsembleOptions& options) {
    params.validate();
    law.validate();
    if (trajectories < 1) throw ValidationError("ensemble_average: K must be >= 1");
    if (options.workers < 1) throw ValidationError("ensemble_average: workers must be >= 1");

    const int samples = params.sample_count();
    const int d = ops.system.dim();
    const int n_chunks = (trajectories + kChunk - 1) / kChunk;
    std::vector<ChunkSum> chunks(static_cast<std::size_t>(n_chunks));

    auto run_chunk = [&](int c) {
        ChunkSum& sum = chunks[static_cast<std::size_t>(c)];
        sum.states.assign(static_cast<std::size_t>(samples), Matrix::Zero(d, d));
        sum.lambdas.assign(static_cast<std::size_t>(samples), 0.0);
        try {
            const int first = c * kChunk;
            const int last = std::min(trajectories, first + kChunk);
            for (int t = first; t < last; ++t) {
                const auto seed = NoiseStream::derive_seed(master_seed, static_cast<std::uint64_t>(t));
                run_trajectory(rho0, params, law, seed, ops,
                               [&](std::size_t s, double, const Matrix& rho, double lambda, double) {
                                   sum.states[s] += rho;
                                   sum.lambdas[s] += lambda;
                                   sum.min_purity = std::min(sum.min_purity, rho.cwiseAbs2().sum());
                               });
            }
        } catch (...) {
            sum.error = std::current_exception();
        }
    };

    const int workers = std::min(options.workers, n_chunks);
    if (workers <= 1) {
        for (int c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int c = next++; c < n_chunks; c = next++) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& c : chunks) {
        if (c.error) std::rethrow_exception(c.error);
    }
    pairwise_reduce(chunks, 0, chunks.size());

    MeParams reference = params;
    // Largest step not above reference_dt that divides the sample interval.
    reference.dt = params.sample_interval / std::ceil(params.sample_interval / options.reference_dt - 1e-9);
    std::vector<Matrix> me_states;
    me_states.reserve(static_cast<std::size_t>(samples));
    integrate_me(rho0, reference, law, ops,
                 [&](std::size_t, double, const Matrix& rho, double) { me_states.push_back(rho); });

    EnsembleResult result;
    result.trajectories = trajectories;
    result.stat_scale = 1.0 / std::sqrt(static_cast<double>(trajectories));
    result.min_cond_purity = chunks[0].min_purity;
    result.series.params = {ops.system.n_atoms(), params.measurement_strength, params.efficiency,
                            params.dt, params.t_max, law.describe()};
    const double inv_k = 1.0 / trajectories;
    Matrix mean;
    for (int s = 0; s < samples; ++s) {
        mean = chunks[0].states[static_cast<std::size_t>(s)] * inv_k;
        const double tau = params.time_at(static_cast<long>(s) * params.steps_per_sample());
        result.series.append(tau, mean, ops, chunks[0].lambdas[static_cast<std::size_t>(s)] * inv_k);
        result.trace_distance.push_back(trace_distance(mean, me_states.at(static_cast<std::size_t>(s))));
    }
    result.final_state = DensityMatrix::trusted(mean);
    return result;
}

}  // namespace qnd
