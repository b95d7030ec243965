#pragma once

#include "focklaser/types.hpp"

#include <vector>

// Perturbative deep-strong-coupling spectrum of the generalized Rabi model.
//
// Levels |n, sigma> carry an oscillator number n and a pseudo-spin sigma. The
// pseudo-spin label is chosen so that it is continuous in lambda: at lambda = 0
// it coincides with E = n omega + sigma omega0 D_n / 2, including the sign of D_n.
namespace focklaser::spectrum {

/// L_n(x) by the three-term recurrence. Throws NumericalError on overflow.
double laguerre(int n, double x);

/// A real number stored as sign * exp(log_abs).
struct SignedLog {
    int sign = 1;  // -1, 0 or +1
    double log_abs = 0.0;

    double value() const noexcept;
};

struct DiagonalOptions {
    // Absolute accuracy demanded of D_n; the rounding estimate must stay below it.
    double abs_tolerance = 1e-9;
};

/// D_n = <n|D(2g)|n> = exp(-2g^2) L_n(4g^2) in sign/log-magnitude form.
///
/// The exponential prefactor is carried inside the recurrence as a running log
/// scale, so the result is representable for any g where exp(-2g^2) alone
/// would underflow.
SignedLog displacement_diagonal_log(int n, double g, const DiagonalOptions& opts = {});

double displacement_diagonal(int n, double g, const DiagonalOptions& opts = {});

/// All D_0..D_n_max in one recurrence pass.
std::vector<double> displacement_diagonals(int n_max, double g, const DiagonalOptions& opts = {});

/// Signed spin splitting E_{n,+} - E_{n,-} = sgn(D_n) sqrt((omega0 D_n)^2 + lambda^2).
double splitting(int n, const RabiParams& p);

double energy(int n, SpinBranch sigma, const RabiParams& p);

struct Level {
    int n = 0;
    SpinBranch sigma = SpinBranch::Minus;
    double energy = 0.0;
    double gap = 0.0;  // E_{n+1,sigma} - E_{n,sigma}
};

struct SpectrumTable {
    std::vector<Level> levels;  // sorted by (sigma, n)
};

/// Gaps E_{n+1} - E_n for n = 0..n_max-1 in one branch.
SpectrumTable excitation_gaps(SpinBranch sigma, const RabiParams& p, int n_max);

/// Both branches, sorted by (sigma, n).
SpectrumTable spectrum_table(const RabiParams& p, int n_max);

struct CriticalOptions {
    double threshold = 0.01;  // relative gap deviation |gap - omega| / omega
    int scan_ceiling = 0;     // 0: automatic (max(1000, 16 g^2))
    SpinBranch branch = SpinBranch::Minus;
    // Below this coupling the perturbative ladder does not describe the system;
    // a failed scan there is reported as single-photon blockade (n_c = 0).
    double dsc_min_coupling = 1.0;
};

/// Estimator of the critical photon number n_c ~ g^2: the first n whose gap
/// deviates from omega by more than the threshold.
int critical_photon_number(const RabiParams& p, const CriticalOptions& opts = {});

/// Mixing angle in [0, pi) with tan(theta) = omega0 D_n / lambda.
double mixing_angle(int n, const RabiParams& p);

enum class FieldOperator { APlusAdag, BPlusBdag };

/// <n', sigma'| X |n, sigma> for X = a + a' or b + b' in the perturbative basis.
double matrix_element_x(int n_prime, SpinBranch sigma_prime, int n, SpinBranch sigma,
                        const RabiParams& p, FieldOperator op = FieldOperator::APlusAdag);

} // namespace focklaser::spectrum
