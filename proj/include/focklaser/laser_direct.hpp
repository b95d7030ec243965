#pragma once

#include "focklaser/laser_rate.hpp"
#include "focklaser/types.hpp"

#include <vector>

// Steady state from the multi-level gain medium: pump g -> a, lasing a -> b,
// bath levels a -> c -> g and b -> d -> g.
namespace focklaser::laser_direct {

struct MultiLevelGain {
    double r = 1e-2;
    double gamma_a = 1e-3;
    double gamma_b = 1e-3;
    double gamma_c = 1e1;
    double gamma_d = 1e1;
    double min_bath_ratio = 100.0;  // gamma_c / gamma_a and gamma_d / gamma_b

    /// gamma_a = gamma_b = Gamma and r from gp; bath levels `bath_ratio` times faster.
    static MultiLevelGain from_gain(const GainParams& gp, double bath_ratio = 1e4);

    /// Effective pump r Gamma / (r + Gamma); requires gamma_a == gamma_b.
    double r_a() const;
    double Gamma() const;

    void validate() const;
};

/// M_n P_n = r_a rho_nn e_1 over (rho_{an,an}, rho_{an,bn+1}, rho_{bn+1,an}, rho_{bn+1,bn+1}).
struct CoherenceBlock {
    Eigen::Matrix4cd M;
    Eigen::Vector4cd rhs;
    double condition = 0.0;
};

/// Block for the transition into photon number n (n >= 1), with full detuning
/// Delta = E_{a,n-1} - E_{b,n} and coupling V = V_{b n, a n-1}.
CoherenceBlock coherence_block(double Gamma, double Delta, Complex V, double r_a);

/// Full detuning and |V|^2 for the transition n-1 -> n.
struct TransitionData {
    double Delta = 0.0;
    double V2 = 0.0;
    double x2 = 0.0;  // |<n-1|a+a'|n>|^2
};
std::vector<TransitionData> transitions(const RabiParams& p, const GainParams& gp, int n_max,
                                        const laser_rate::RateOptions& opts = {});

/// A_n = 2 r_a |V|^2 / (Gamma^2 + 4 |V|^2 + Delta^2).
double block_gain_closed(double Gamma, double Delta, double V2, double r_a);

/// A_n from the explicit solve of the 4x4 block; the phase of V is free.
double block_gain_inverted(double Gamma, double Delta, Complex V, double r_a);

enum class GainMethod { ClosedForm, Inversion };

struct BlockGain {
    double closed = 0.0;
    double inverted = 0.0;
    double condition = 0.0;
};

/// Both evaluations of A_n for one n >= 1; throws if they disagree beyond 1e-10 relative.
BlockGain block_gain_A(int n, const RabiParams& p, const GainParams& gp, const MultiLevelGain& mlg,
                       double v_phase = 0.0, const laser_rate::RateOptions& opts = {});

struct DirectOptions {
    int n_max = 0;  // 0: automatic, from the rate model with r -> r_a
    GainMethod method = GainMethod::ClosedForm;
    double v_phase = 0.0;
    double tail_tolerance = 1e-8;
    double balance_tolerance = 1e-12;
    laser_rate::RateOptions rate;
};

laser_rate::PhotonDistribution steady_state_direct(const RabiParams& p, const GainParams& gp,
                                                   const MultiLevelGain& mlg, const DirectOptions& opts = {});

/// Full five-level ladder before eliminating the bath levels, photon-diagonal sector.
struct LadderResult {
    laser_rate::PhotonDistribution dist;  // photon marginal
    // Per photon number, populations of g, a, b, c, d.
    Vector<double> Pg, Pa, Pb, Pc, Pd;
    // max_n |gamma_a Pa - gamma_c Pc| and |gamma_b Pb - gamma_d Pd| relative to the largest flux.
    double bookkeeping_ac = 0.0;
    double bookkeeping_bd = 0.0;
    // Same balances summed over n (exact up to rounding).
    double bookkeeping_total = 0.0;
    double residual = 0.0;
};

LadderResult ladder_steady_state(const RabiParams& p, const GainParams& gp, const MultiLevelGain& mlg, int n_max,
                                 const laser_rate::RateOptions& opts = {});

} // namespace focklaser::laser_direct
