#pragma once

#include "focklaser/types.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

// Coarse-grained Fock-laser master equation for the diagonal of the DSC-photon
// density matrix: gain A_n = n R_n into level n, loss C_{n-1} = kappa_n out of it.
namespace focklaser::laser_rate {

struct PhotonDistribution {
    Vector<double> probs;
    double mean = 0.0;
    double variance = 0.0;
    double fano = 0.0;
    double entropy = 0.0;

    double stddev() const { return std::sqrt(variance); }
    int n_max() const { return static_cast<int>(probs.size()) - 1; }
    int mode() const;
};

/// Normalizes a non-negative vector and fills the statistics.
PhotonDistribution make_distribution(Vector<double> probs);

/// Half the L1 distance; the shorter vector is padded with zeros.
double total_variation(const PhotonDistribution& a, const PhotonDistribution& b);
double total_variation(const Vector<double>& a, const Vector<double>& b);

enum class LossModel {
    Harmonic,       // kappa_n = kappa n
    MatrixElement,  // kappa |<n-1|a+a'|n>|^2 on the chosen branch
};

struct RateOptions {
    SpinBranch branch = SpinBranch::Minus;
    LossModel loss = LossModel::Harmonic;
    // Drop the anharmonic detuning from F(n), leaving pure power broadening.
    bool weak_coupling = false;
};

/// F(n) = 4 n eps^2 + 4 Delta_n^2 with Delta_n the half detuning of transition n-1 -> n.
double nonlinearity_F(int n, const RabiParams& p, const GainParams& gp, const RateOptions& opts = {});

/// Index n runs 0..n_max; entry 0 is unused (zero) in every array.
struct GainLossCurves {
    std::vector<double> R;        // 2 r eps^2 / (Gamma^2 + F)
    std::vector<double> kappa_n;  // loss coefficient out of n
    std::vector<double> F;
    std::vector<double> G;        // F / Gamma^2
    std::vector<double> gain;     // n R_n

    int n_max() const { return static_cast<int>(R.size()) - 1; }
};

GainLossCurves gain_loss(const RabiParams& p, const GainParams& gp, int n_max, const RateOptions& opts = {});

/// Threshold pump r_th = kappa Gamma^2 / (2 eps^2) and pump parameter alpha = r / r_th.
double threshold_pump(const GainParams& gp);
double pump_parameter(const GainParams& gp);

/// First n where the propagation function 1/(1+G) has fallen below 1/2; -1 if none up to n_max.
int propagation_cutoff(const GainLossCurves& curves);

struct SteadyStateOptions {
    int n_max = 0;              // 0: automatic
    double tail_tolerance = 1e-8;
    double balance_tolerance = 1e-12;
    RateOptions rate;
};

struct SteadyState {
    PhotonDistribution dist;
    Vector<double> log_weights;  // log rho_n up to the normalization
    double balance_residual = 0.0;
};

/// Birth-death steady state from log-space products of A_m / C_{m-1}.
SteadyState steady_state_full(const RabiParams& p, const GainParams& gp, const SteadyStateOptions& opts = {});
PhotonDistribution steady_state(const RabiParams& p, const GainParams& gp, const SteadyStateOptions& opts = {});

/// Steady state for arbitrary log ratios log(rho_n / rho_{n-1}), n = 1..size-1, with
/// gain/loss pairs supplied for the detailed-balance check. Shared with laser_direct.
SteadyState steady_state_from_rates(const std::vector<double>& gain, const std::vector<double>& loss,
                                    double tail_tolerance, double balance_tolerance);

/// Truncation where log rho has dropped 50 nats below its maximum past the peak,
/// never below the n_c + max(50, 10 sqrt(n_c)) rule when the coupling is deep-strong.
int suggest_n_max(const RabiParams& p, const GainParams& gp, const RateOptions& opts = {});

struct TransientOptions {
    int n_max = 0;  // 0: size of rho0
    double abs_tol = 1e-14;
    double rel_tol = 1e-10;
    double conservation_tolerance = 1e-9;
    RateOptions rate;
};

/// Integrates the rate equation from rho0 up to t_final (adaptive Dormand-Prince).
PhotonDistribution transient(const PhotonDistribution& rho0, const RabiParams& p, const GainParams& gp,
                             double t_final, const TransientOptions& opts = {});

struct SweepPoint {
    double r = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    double fano = 0.0;
    PhotonDistribution dist;
};

struct SweepOptions {
    int jobs = 1;
    SteadyStateOptions steady;
};

std::vector<SweepPoint> pump_sweep(const RabiParams& p, const GainParams& gp, const std::vector<double>& r_values,
                                   const SweepOptions& opts = {});

enum class Regime { Thermal, CoherentLike, UniformCutoff, Bimodal, FockLike };

std::string to_string(Regime r);

struct ClassifyOptions {
    double modality_height = 1e-3;  // local maxima counted above this fraction of the peak
    double uniform_ratio = 10.0;    // max/min over [2, n_c - 5]
    double cutoff_ratio = 1e-3;     // rho_{n_c+5} / rho_{n_c-5}
    double fock_fano = 0.2;
};

/// Number of local maxima above the relative height threshold.
int count_modes(const PhotonDistribution& d, double relative_height);

/// Near-uniform plateau over [2, n_c - 5] with a sharp drop across n_c.
bool is_uniform_cutoff(const PhotonDistribution& d, int n_c, const ClassifyOptions& opts = {});

Regime classify(const PhotonDistribution& d, int n_c, const ClassifyOptions& opts = {});

struct RegimePoint {
    double r = 0.0;
    double Gamma = 0.0;
    int n_c = -1;
    Regime regime = Regime::Thermal;
    double mean = 0.0;
    double fano = 0.0;
    PhotonDistribution dist;
};

/// Classifies the steady state on an (r, Gamma) grid; r varies fastest in the output.
std::vector<RegimePoint> regime_map(const RabiParams& p, const GainParams& gp, const std::vector<double>& r_values,
                                    const std::vector<double>& gamma_values, const SweepOptions& opts = {},
                                    const ClassifyOptions& copts = {});

/// Runs task(i) for i in [0, count) on up to `jobs` threads. The first exception
/// in index order is rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

} // namespace focklaser::laser_rate
