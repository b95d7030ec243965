#pragma once

#include "focklaser/spectrum.hpp"
#include "focklaser/types.hpp"

#include <optional>
#include <vector>

// Truncated-Fock exact diagonalization of the generalized Rabi Hamiltonian and
// brute-force constructions used to check the perturbative spectrum.
namespace focklaser::exact {

/// Qubit (x) Fock(0..n_fock-1), qubit index slowest: index = q * n_fock + n.
/// Qubit index 0 is the sigma_z = +1 state.
struct TruncatedBasis {
    int n_fock = 0;
    static constexpr int qubit_dim = 2;

    Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(qubit_dim) * n_fock; }
    Eigen::Index index(int qubit, int n) const noexcept {
        return static_cast<Eigen::Index>(qubit) * n_fock + n;
    }
};

/// Smallest n_fock satisfying the displaced-state support rule 4g^2 + 10(2g) + 20.
int required_fock_dimension(double g);
void check_support(const TruncatedBasis& basis, double g);

template <typename Scalar>
struct DenseOperator {
    Matrix<Scalar> matrix;
    TruncatedBasis basis;
    bool hermitian = false;
};

using RealOperator = DenseOperator<double>;

/// max |M - M^dagger|, the test behind the `hermitian` flag.
template <typename Scalar>
double hermiticity_defect(const Matrix<Scalar>& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// Photonic operators on Fock(0..n-1).
Matrix<double> annihilation(int n_fock);
/// exp(z (a' - a)) on Fock(0..n-1), via the matrix exponential.
Matrix<double> displacement(int n_fock, double z);

// Composite-basis operators.
RealOperator field_a(const TruncatedBasis& basis);
RealOperator sigma_x(const TruncatedBasis& basis);
RealOperator sigma_z(const TruncatedBasis& basis);
/// b = a + g sigma_x, the displaced-oscillator annihilator.
RealOperator field_b(const TruncatedBasis& basis, double g);
/// a + a' or b + b'.
RealOperator field_quadrature(const TruncatedBasis& basis, const RabiParams& p, spectrum::FieldOperator op);

RealOperator build_rabi(const RabiParams& p, const TruncatedBasis& basis);

/// D'(z)|n> with truncation-loss check (mass in the top 5 Fock levels <= 1e-6).
Vector<double> displaced_fock(int n, double z, int n_fock);

struct Label {
    int n = 0;
    SpinBranch sigma = SpinBranch::Minus;
    double overlap = 0.0;  // |<analytic|exact>|^2
};

struct EigenSystem {
    Vector<double> values;            // ascending
    Matrix<double> vectors;           // columns, orthonormal
    std::vector<std::optional<Label>> labels;
    TruncatedBasis basis;

    Eigen::Index size() const noexcept { return values.size(); }
};

struct DiagonalizeOptions {
    // Tail-mass bound in the top 5 Fock levels, checked on the lowest `check_count` vectors.
    double tail_tolerance = 1e-8;
    int check_count = 0;  // 0: no tail check
};

/// Dense diagonalization. At lambda = 0 the parity blocks are solved separately
/// so that near-degenerate spin pairs come out as parity eigenstates.
EigenSystem diagonalize_rabi(const RabiParams& p, const TruncatedBasis& basis,
                             const DiagonalizeOptions& opts = {});

/// Generic symmetric diagonalization with residual validation.
EigenSystem diagonalize(const RealOperator& h);

/// Analytic |n, sigma> in the composite basis.
Vector<double> analytic_state(int n, SpinBranch sigma, const RabiParams& p, const TruncatedBasis& basis);

struct LabelOptions {
    double threshold = 0.7;  // minimum |overlap|^2
    int n_template_max = -1; // -1: automatic (largest n whose template stays in the basis)
};

EigenSystem label_eigenstates(EigenSystem es, const RabiParams& p, const LabelOptions& opts = {});

/// Ties closer than this (in units of omega) count as degenerate in positive_frequency_part.
inline constexpr double kDegeneracyTolerance = 1e-10;

/// Strictly energy-lowering part of an operator already expressed in the eigenbasis.
template <typename Scalar>
Matrix<Scalar> positive_frequency_part_eigen(const Matrix<Scalar>& j_eig, const Vector<double>& energies,
                                             double tie_tolerance) {
    Matrix<Scalar> out = Matrix<Scalar>::Zero(j_eig.rows(), j_eig.cols());
    for (Eigen::Index n = 0; n < j_eig.cols(); ++n) {
        for (Eigen::Index m = 0; m < j_eig.rows(); ++m) {
            if (energies(m) < energies(n) - tie_tolerance) {
                out(m, n) = j_eig(m, n);
            }
        }
    }
    return out;
}

/// J^(+) = sum_{E_m < E_n} <m|J|n> |m><n| in the composite basis.
RealOperator positive_frequency_part(const RealOperator& j, const EigenSystem& es,
                                     double tie_tolerance = kDegeneracyTolerance);

} // namespace focklaser::exact
