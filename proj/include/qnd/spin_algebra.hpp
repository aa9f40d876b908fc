#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <memory>
#include <string>

namespace qnd {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Fixed-j Dicke space of N spin-1/2 atoms, j = N/2, basis |j,m>, m = +j (row 0) ... -j.
class SpinSystem {
public:
    explicit SpinSystem(int n_atoms);

    int n_atoms() const { return n_; }
    /// Twice the total spin; j itself is half of this.
    int two_j() const { return n_; }
    double j() const { return 0.5 * n_; }
    int dim() const { return n_ + 1; }
    /// Magnetic quantum number of basis row k.
    double m(int k) const { return j() - k; }

    bool operator==(const SpinSystem&) const = default;

private:
    int n_;
};

/// Dense square complex matrix with an optional Hermiticity contract.
class OperatorMatrix {
public:
    OperatorMatrix() = default;
    OperatorMatrix(Matrix entries, bool hermitian_hint);

    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    bool hermitian_hint() const { return hermitian_; }

private:
    Matrix m_;
    bool hermitian_ = false;
};

/// Summary of how far a matrix is from being a valid density matrix.
struct StateDiagnostics {
    double hermiticity_error;  // max |rho - rho^dagger| entry
    double trace_error;        // |Tr rho - 1|
    double min_eigenvalue;

    bool ok(double herm_tol = 1e-10, double trace_tol = 1e-10, double eig_tol = 1e-8) const;
    std::string describe() const;
};

StateDiagnostics diagnose(const Matrix& rho);

/// Hermitian, unit-trace, positive semidefinite state in the Dicke basis.
class DensityMatrix {
public:
    /// Validates the invariants; throws ValidationError on failure.
    explicit DensityMatrix(Matrix entries);

    /// Wraps without validation. For integrators that monitor invariants themselves.
    static DensityMatrix trusted(Matrix entries);

    static DensityMatrix from_pure(const Eigen::VectorXcd& psi);

    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    double purity() const;

private:
    struct Unchecked {};
    DensityMatrix(Matrix entries, Unchecked) : m_(std::move(entries)) {}
    Matrix m_;
};

enum class Axis { X, Y, Z };

/// Collective spin operators for one SpinSystem, built once and shared read-only.
struct SpinOperators {
    SpinSystem system;
    OperatorMatrix jx, jy, jz, jp, jm;

    // Eigendecompositions J_a = V diag(w) V^dagger, used for exact rotations.
    struct Spectral {
        Eigen::VectorXd values;
        Matrix vectors;
    };
    std::array<Spectral, 3> spectral;

    const OperatorMatrix& component(Axis axis) const;
    const Spectral& spectral_of(Axis axis) const { return spectral[static_cast<int>(axis)]; }
    /// n . J for a real 3-vector n.
    Matrix along(const std::array<double, 3>& n) const;
};

SpinOperators build_spin_operators(const SpinSystem& sys);

/// Process-wide immutable cache keyed by atom number.
std::shared_ptr<const SpinOperators> shared_spin_operators(int n_atoms);

/// |j, m=+j><j, m=+j|, polarized along +z.
DensityMatrix z_polarized(const SpinSystem& sys);

/// Coherent spin state along +x: |j,j> rotated by pi/2 about y.
DensityMatrix css_x(const SpinOperators& ops);

/// exp(-i angle J_axis) for the given axis.
Matrix rotation(const SpinOperators& ops, Axis axis, double angle);

/// U rho U^dagger with U = exp(-i angle J_axis).
DensityMatrix rotate(const DensityMatrix& state, const SpinOperators& ops, Axis axis, double angle);

/// Tr[A rho].
Complex expectation(const OperatorMatrix& op, const DensityMatrix& state);
Complex expectation(const Matrix& op, const Matrix& rho);

}  // namespace qnd
