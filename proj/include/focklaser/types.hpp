#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace focklaser {

using Complex = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A violated precondition on user-supplied parameters.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation that could not reach its accuracy or stability target.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SpinBranch : int { Minus = -1, Plus = +1 };

constexpr int sign(SpinBranch s) noexcept { return static_cast<int>(s); }
constexpr SpinBranch flip(SpinBranch s) noexcept {
    return s == SpinBranch::Plus ? SpinBranch::Minus : SpinBranch::Plus;
}

/// Generalized Rabi model parameters. Frequencies share the unit of `omega`.
///
/// H = (omega0 sz + lambda sx)/2 + omega a'a + g omega sx (a + a').
struct RabiParams {
    double omega = 1.0;
    double omega0 = 1.0;
    double lambda = 0.0;
    double g = 0.0;

    double coupling() const noexcept { return g * omega; }

    // Resonant qubit (omega0 == omega).
    static RabiParams resonant(double g, double lambda = 0.0, double omega = 1.0) {
        return RabiParams{omega, omega, lambda, g};
    }

    void validate() const;
};

/// Emitter and laser parameters: emitter coupling, dimensionless emitter
/// detuning (omega_em - omega = omega * delta), emitter decay, pump and bare
/// cavity decay.
struct GainParams {
    double epsilon = 1e-5;
    double delta = 0.0;
    double Gamma = 1e-3;
    double r = 1e-2;
    double kappa = 1e-8;

    // Throws on hard violations; returns soft warnings (e.g. epsilon not << omega).
    std::vector<std::string> validate(const RabiParams& p) const;
};

} // namespace focklaser
