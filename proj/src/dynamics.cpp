#include "qnd/dynamics.hpp"

#include "qnd/constants.hpp"
#include "qnd/errors.hpp"

#include <cmath>
#include <sstream>

namespace qnd {

void MeParams::validate() const {
    if (!(measurement_strength >= 0.0) || !std::isfinite(measurement_strength)) {
        throw ValidationError("measurement strength M must be finite and >= 0");
    }
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ValidationError("efficiency eta must lie in (0, 1]");
    if (!(dt > 0.0 && dt <= 1e-2)) throw ValidationError("dt must lie in (0, 1e-2]");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("t_max must be finite and > 0");
    if (!(sample_interval >= dt)) throw ValidationError("sample_interval must be >= dt");
    const double ratio = sample_interval / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ValidationError("sample_interval must be an integer multiple of dt");
    }
    if (t_max < sample_interval) throw ValidationError("t_max must cover at least one sample interval");
}

int MeParams::steps_per_sample() const {
    return static_cast<int>(std::llround(sample_interval / dt));
}

double MeParams::time_at(long step) const {
    // Divide by an exact step count per unit time when there is one, so sample
    // times print as 0.03 rather than 0.030000000000000002.
    const double per_unit = 1.0 / dt;
    const double rounded = std::round(per_unit);
    if (rounded >= 1.0 && std::abs(per_unit - rounded) <= 1e-9 * rounded) return static_cast<double>(step) / rounded;
    return static_cast<double>(step) * dt;
}

int MeParams::sample_count() const {
    return static_cast<int>(std::floor(t_max / sample_interval + 1e-9)) + 1;
}

MasterEquation::MasterEquation(const SpinOperators& ops) : j_(ops.system.j()) {
    const int d = ops.system.dim();
    m_.resize(d);
    for (int k = 0; k < d; ++k) m_[k] = ops.system.m(k);
    dephase_.resize(d, d);
    anti_.resize(d, d);
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
            dephase_(i, k) = -0.5 * (m_[i] - m_[k]) * (m_[i] - m_[k]);
            anti_(i, k) = m_[i] + m_[k];
        }
    }
    // Jy = i T with T real and tridiagonal.
    const Matrix& jy = ops.jy.matrix();
    up_ = Eigen::VectorXd::Zero(d);
    lo_ = Eigen::VectorXd::Zero(d);
    for (int k = 0; k + 1 < d; ++k) {
        up_[k] = jy(k, k + 1).imag();
        lo_[k] = jy(k + 1, k).imag();
    }
}

// out = T a.
void MasterEquation::left(const Matrix& a, Matrix& out) const {
    const Eigen::Index d = a.rows();
    out.resize(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        auto dst = out.col(k).array();
        const auto src = a.col(k).array();
        dst.head(d - 1) = src.tail(d - 1) * up_.head(d - 1).array();
        dst[d - 1] = 0.0;
        dst.tail(d - 1) += src.head(d - 1) * lo_.head(d - 1).array();
    }
}

// out = a T.
void MasterEquation::right(const Matrix& a, Matrix& out) const {
    const Eigen::Index d = a.rows();
    out.resize(d, d);
    out.col(0) = lo_[0] * a.col(1);
    for (Eigen::Index k = 1; k + 1 < d; ++k) out.col(k) = up_[k - 1] * a.col(k - 1) + lo_[k] * a.col(k + 1);
    out.col(d - 1) = up_[d - 2] * a.col(d - 2);
}

void MasterEquation::rhs(const Matrix& rho, double lambda_ratio, double efficiency, Matrix& out) const {
    out.array() = rho.array() * dephase_.array();
    if (lambda_ratio == 0.0 || rho.rows() < 2) return;
    // With Jy = i T: -i l [Jy, S] = l (T S - S T), and D[Jy]rho = (T^2 rho + rho T^2)/2 - T rho T.
    ws_s_.array() = rho.array() * anti_.array();  // Jz rho + rho Jz
    left(ws_s_, ws_a_);
    right(ws_s_, ws_b_);
    out += lambda_ratio * (ws_a_ - ws_b_);
    const double c = lambda_ratio * lambda_ratio / efficiency;
    left(rho, ws_s_);     // T rho
    right(ws_s_, ws_a_);  // T rho T
    left(ws_s_, ws_b_);   // T^2 rho
    out += (0.5 * c) * ws_b_ - c * ws_a_;
    right(rho, ws_s_);    // rho T
    right(ws_s_, ws_b_);  // rho T^2
    out += (0.5 * c) * ws_b_;
}

Matrix MasterEquation::rhs(const Matrix& rho, double lambda_ratio, double efficiency) const {
    Matrix out;
    rhs(rho, lambda_ratio, efficiency, out);
    return out;
}

double MasterEquation::rate_bound(double lambda_ratio, double efficiency) const {
    const double l = std::abs(lambda_ratio);
    return 2.0 * j_ * j_ * (1.0 + 2.0 * l + l * l / efficiency);
}

namespace {

void check_rhs_inputs(const DensityMatrix& state, double lambda, const MeParams& params,
                      const SpinOperators& ops) {
    if (state.dim() != ops.system.dim()) throw ValidationError("me_rhs: dimension mismatch");
    if (!std::isfinite(lambda)) throw ValidationError("me_rhs: lambda must be finite");
    if (!(params.efficiency > 0.0 && params.efficiency <= 1.0)) {
        throw ValidationError("me_rhs: efficiency must lie in (0, 1]");
    }
    if (!(params.measurement_strength >= 0.0)) throw ValidationError("me_rhs: M must be >= 0");
    if (params.measurement_strength == 0.0 && lambda != 0.0) {
        throw ValidationError("me_rhs: feedback (lambda != 0) without measurement (M = 0) is undefined");
    }
}

}  // namespace

Matrix me_rhs(const DensityMatrix& state, double lambda, const MeParams& params, const SpinOperators& ops) {
    check_rhs_inputs(state, lambda, params, ops);
    const double m = params.measurement_strength;
    if (m == 0.0) return Matrix::Zero(state.dim(), state.dim());
    const MasterEquation eq(ops);
    return m * eq.rhs(state.matrix(), lambda / m, params.efficiency);
}

Matrix dissipator(const Matrix& r, const Matrix& rho) {
    const Matrix rdr = r.adjoint() * r;
    return r * rho * r.adjoint() - 0.5 * (rdr * rho + rho * rdr);
}

Matrix me_rhs_lindblad(const DensityMatrix& state, double lambda, const MeParams& params,
                       const SpinOperators& ops) {
    check_rhs_inputs(state, lambda, params, ops);
    const double m = params.measurement_strength;
    const Matrix& rho = state.matrix();
    if (m == 0.0) return Matrix::Zero(state.dim(), state.dim());
    const double eta = params.efficiency;
    const Complex i(0.0, 1.0);
    const Matrix c = std::sqrt(m) * ops.jz.matrix();
    const Matrix f = (lambda / std::sqrt(m)) * ops.jy.matrix();
    const Matrix h = c.adjoint() * f + f * c;
    Matrix out = -0.5 * i * (h * rho - rho * h);
    out += dissipator(c - i * f, rho);
    out += ((1.0 - eta) / eta) * dissipator(f, rho);
    return out;
}

EffectiveHamiltonian effective_hamiltonian(double lambda, const SpinOperators& ops) {
    if (!std::isfinite(lambda)) throw ValidationError("effective_hamiltonian: lambda must be finite");
    const Matrix& jy = ops.jy.matrix();
    const Matrix& jz = ops.jz.matrix();
    Matrix h = 0.5 * lambda * (jz * jy + jy * jz);
    // Symmetrize away rounding so the Hermitian contract holds exactly.
    h = 0.5 * (h + h.adjoint()).eval();
    return {OperatorMatrix(std::move(h), true), lambda};
}

namespace {

void check_invariants(const Matrix& rho, double tau) {
    const auto d = diagnose(rho);
    if (!d.ok(1e-10, 1e-9, 1e-8)) {
        std::ostringstream os;
        os << "integrate_me: state invariant violated at tau=" << tau << " (" << d.describe()
           << "); reduce dt";
        throw NumericalError(os.str());
    }
}

}  // namespace

MeSolution integrate_me(const DensityMatrix& rho0, const MeParams& params, const FeedbackLaw& law,
                        const SpinOperators& ops, const SampleObserver& observer) {
    params.validate();
    law.validate();
    if (rho0.dim() != ops.system.dim()) throw ValidationError("integrate_me: dimension mismatch");

    const double m = params.measurement_strength;
    const double eta = params.efficiency;
    const int per_sample = params.steps_per_sample();
    const int samples = params.sample_count();

    ObservableSeries series;
    series.params = {ops.system.n_atoms(), m, eta, params.dt, params.t_max, law.describe()};

    Matrix rho = rho0.matrix();
    auto ratio_at = [&](double tau, const Matrix& state) {
        return m == 0.0 ? 0.0 : law.strength(tau, m, state, ops) / m;
    };
    auto record = [&](std::size_t index, double tau) {
        const double lambda = m == 0.0 ? 0.0 : law.strength(tau, m, rho, ops);
        series.append(tau, rho, ops, lambda);
        if (observer) observer(index, tau, rho, lambda);
    };

    if (m == 0.0) {
        if (law.kind == FeedbackLaw::Kind::Constant && law.scale * law.lambda0 != 0.0) {
            throw ValidationError("integrate_me: constant feedback without measurement (M = 0) is undefined");
        }
        // rho-dot = 0: the state is frozen.
        for (int s = 0; s < samples; ++s) record(static_cast<std::size_t>(s), params.time_at(static_cast<long>(s) * per_sample));
        return {std::move(series), DensityMatrix::trusted(rho)};
    }

    const MasterEquation eq(ops);
    Matrix k1, k2, k3, k4, stage;
    record(0, 0.0);
    long step = 0;
    for (int s = 1; s < samples; ++s) {
        for (int k = 0; k < per_sample; ++k, ++step) {
            const double t0 = params.time_at(step);
            const double l_start = ratio_at(t0, rho);
            const double l_end = law.kind == FeedbackLaw::Kind::Analytic ? ratio_at(t0 + params.dt, rho) : l_start;
            const double bound = eq.rate_bound(1.25 * std::max(std::abs(l_start), std::abs(l_end)), eta);
            const int substeps = std::max(1, static_cast<int>(std::ceil(params.dt * bound / 2.0)));
            const double h = params.dt / substeps;
            for (int sub = 0; sub < substeps; ++sub) {
                const double t = t0 + sub * h;
                eq.rhs(rho, sub == 0 ? l_start : ratio_at(t, rho), eta, k1);
                stage = rho + (0.5 * h) * k1;
                eq.rhs(stage, ratio_at(t + 0.5 * h, stage), eta, k2);
                stage = rho + (0.5 * h) * k2;
                eq.rhs(stage, ratio_at(t + 0.5 * h, stage), eta, k3);
                stage = rho + h * k3;
                eq.rhs(stage, ratio_at(t + h, stage), eta, k4);
                rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        const double tau = params.time_at(step);
        check_invariants(rho, tau);
        record(static_cast<std::size_t>(s), tau);
    }
    return {std::move(series), DensityMatrix::trusted(rho)};
}

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError(std::string(what) + " must be finite and > 0");
    }
}

}  // namespace

double m_from_cavity(double chi, double power, double omega, double kappa) {
    require_positive(chi, "chi");
    require_positive(power, "P");
    require_positive(omega, "omega");
    require_positive(kappa, "kappa");
    return 8.0 * chi * chi * power / (si::hbar * omega * kappa * kappa);
}

MeasurementStrength m_from_cavity_checked(double chi, double power, double omega, double kappa, int n_atoms) {
    MeasurementStrength out{m_from_cavity(chi, power, omega, kappa), {}};
    if (n_atoms < 1) throw ValidationError("N must be >= 1");
    const double beta = std::sqrt(2.0 * power / (si::hbar * omega * kappa));
    const double ratio = kappa / (chi * beta * std::sqrt(static_cast<double>(n_atoms)));
    if (ratio < 10.0) {
        std::ostringstream os;
        os << "adiabatic elimination questionable: kappa/(chi|beta|sqrt(N)) = " << ratio << " < 10";
        out.warnings.push_back(os.str());
    }
    return out;
}

double m_from_freespace(double theta, double power, double omega) {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be finite and >= 0");
    require_positive(power, "P");
    require_positive(omega, "omega");
    return power * theta * theta / (si::hbar * omega);
}

MeasurementStrength m_from_freespace_checked(double theta, double power, double omega, int n_atoms) {
    MeasurementStrength out{m_from_freespace(theta, power, omega), {}};
    if (n_atoms < 1) throw ValidationError("N must be >= 1");
    const double product = theta * std::sqrt(static_cast<double>(n_atoms));
    if (product >= 0.1) {
        std::ostringstream os;
        os << "small-phase approximation questionable: theta*sqrt(N) = " << product << " >= 0.1";
        out.warnings.push_back(os.str());
    }
    return out;
}

}  // namespace qnd
