#include "qnd/spin_algebra.hpp"

#include "qnd/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace qnd {

namespace {

double max_antihermitian(const Matrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

Matrix conjugate_by_spectral(const SpinOperators::Spectral& s, double angle) {
    Eigen::VectorXcd phases(s.values.size());
    for (Eigen::Index k = 0; k < s.values.size(); ++k) {
        phases[k] = std::polar(1.0, -angle * s.values[k]);
    }
    return s.vectors * phases.asDiagonal() * s.vectors.adjoint();
}

}  // namespace

SpinSystem::SpinSystem(int n_atoms) : n_(n_atoms) {
    if (n_atoms < 1) {
        throw ValidationError("SpinSystem: atom number must be >= 1, got " + std::to_string(n_atoms));
    }
}

OperatorMatrix::OperatorMatrix(Matrix entries, bool hermitian_hint)
    : m_(std::move(entries)), hermitian_(hermitian_hint) {
    if (m_.rows() != m_.cols()) {
        throw ValidationError("OperatorMatrix: matrix is not square");
    }
    if (hermitian_ && max_antihermitian(m_) > 1e-12) {
        throw ValidationError("OperatorMatrix: hermitian_hint set on a non-Hermitian matrix");
    }
}

bool StateDiagnostics::ok(double herm_tol, double trace_tol, double eig_tol) const {
    return hermiticity_error <= herm_tol && trace_error <= trace_tol && min_eigenvalue >= -eig_tol;
}

std::string StateDiagnostics::describe() const {
    std::ostringstream os;
    os << "hermiticity_error=" << hermiticity_error << " trace_error=" << trace_error
       << " min_eigenvalue=" << min_eigenvalue;
    return os.str();
}

StateDiagnostics diagnose(const Matrix& rho) {
    StateDiagnostics d{};
    d.hermiticity_error = max_antihermitian(rho);
    d.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
    const Matrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

DensityMatrix::DensityMatrix(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
        throw ValidationError("DensityMatrix: matrix must be square and non-empty");
    }
    const auto d = diagnose(m_);
    if (!d.ok()) {
        throw ValidationError("DensityMatrix: invariant violated (" + d.describe() + ")");
    }
}

DensityMatrix DensityMatrix::trusted(Matrix entries) {
    return DensityMatrix(std::move(entries), Unchecked{});
}

DensityMatrix DensityMatrix::from_pure(const Eigen::VectorXcd& psi) {
    const double norm = psi.norm();
    if (!(norm > 0.0)) throw ValidationError("DensityMatrix::from_pure: zero vector");
    const Eigen::VectorXcd v = psi / norm;
    return DensityMatrix(v * v.adjoint());
}

double DensityMatrix::purity() const {
    // Tr[rho^2] = sum |rho_ik|^2 for Hermitian rho.
    return m_.cwiseAbs2().sum();
}

const OperatorMatrix& SpinOperators::component(Axis axis) const {
    switch (axis) {
        case Axis::X: return jx;
        case Axis::Y: return jy;
        case Axis::Z: return jz;
    }
    return jz;
}

Matrix SpinOperators::along(const std::array<double, 3>& n) const {
    return n[0] * jx.matrix() + n[1] * jy.matrix() + n[2] * jz.matrix();
}

SpinOperators build_spin_operators(const SpinSystem& sys) {
    const int d = sys.dim();
    const double j = sys.j();
    Matrix jz = Matrix::Zero(d, d);
    Matrix jp = Matrix::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        jz(k, k) = sys.m(k);
    }
    // J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>; m+1 lives one row above m.
    for (int k = 1; k < d; ++k) {
        const double m = sys.m(k);
        jp(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    const Matrix jm = jp.adjoint();
    const Matrix jx = 0.5 * (jp + jm);
    const Matrix jy = (jp - jm) / Complex(0.0, 2.0);

    SpinOperators ops{sys,
                      OperatorMatrix(jx, true),
                      OperatorMatrix(jy, true),
                      OperatorMatrix(jz, true),
                      OperatorMatrix(jp, false),
                      OperatorMatrix(jm, false),
                      {}};
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(ops.component(a).matrix());
        ops.spectral[static_cast<int>(a)] = {es.eigenvalues(), es.eigenvectors()};
    }
    return ops;
}

std::shared_ptr<const SpinOperators> shared_spin_operators(int n_atoms) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const SpinOperators>> cache;
    const SpinSystem sys(n_atoms);
    std::lock_guard lock(mutex);
    auto& slot = cache[n_atoms];
    if (!slot) slot = std::make_shared<const SpinOperators>(build_spin_operators(sys));
    return slot;
}

DensityMatrix z_polarized(const SpinSystem& sys) {
    Matrix rho = Matrix::Zero(sys.dim(), sys.dim());
    rho(0, 0) = 1.0;
    return DensityMatrix::trusted(std::move(rho));
}

DensityMatrix css_x(const SpinOperators& ops) {
    const Matrix u = rotation(ops, Axis::Y, M_PI / 2.0);
    const Eigen::VectorXcd psi = u.col(0);
    Matrix rho = psi * psi.adjoint();
    return DensityMatrix::trusted(std::move(rho));
}

Matrix rotation(const SpinOperators& ops, Axis axis, double angle) {
    if (!std::isfinite(angle)) throw ValidationError("rotation: angle must be finite");
    return conjugate_by_spectral(ops.spectral_of(axis), angle);
}

DensityMatrix rotate(const DensityMatrix& state, const SpinOperators& ops, Axis axis, double angle) {
    if (state.dim() != ops.system.dim()) throw ValidationError("rotate: dimension mismatch");
    const Matrix u = rotation(ops, axis, angle);
    return DensityMatrix::trusted(u * state.matrix() * u.adjoint());
}

Complex expectation(const Matrix& op, const Matrix& rho) {
    if (op.rows() != rho.rows() || op.cols() != rho.cols()) {
        throw ValidationError("expectation: dimension mismatch");
    }
    // Tr[A rho] = sum_ik A_ik rho_ki
    return (op.cwiseProduct(rho.transpose())).sum();
}

Complex expectation(const OperatorMatrix& op, const DensityMatrix& state) {
    return expectation(op.matrix(), state.matrix());
}

}  // namespace qnd
