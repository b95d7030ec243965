#pragma once

#include "focklaser/types.hpp"

#include <vector>

// Two-level emitter exchanging one DSC photon with a single spin ladder.
namespace focklaser::emission {

/// 2x2 block H_m = E_m I + Delta_m sz + eps sqrt(m) sx over {|e, m-1>, |g, m>}.
struct SubspaceBloch {
    int m = 1;
    double E = 0.0;
    double Delta = 0.0;
    double U = 0.0;  // sqrt(Delta^2 + m eps^2)
};

/// Half detuning Delta_m for the transition m-1 -> m on `branch`:
/// Delta_m = (omega_em - (E_m - E_{m-1})) / 2 with omega_em = omega (1 + delta).
///
/// Every gain model in the library calls this one function, so Delta_m always
/// refers to the photon entering level m.
double detuning(int m, const RabiParams& p, const GainParams& gp, SpinBranch branch = SpinBranch::Minus);

/// Delta_1..Delta_n_max in one displacement-diagonal pass (index 0 unused).
std::vector<double> detunings(int n_max, const RabiParams& p, const GainParams& gp,
                              SpinBranch branch = SpinBranch::Minus);

SubspaceBloch subspace_bloch(int m, const RabiParams& p, const GainParams& gp,
                             SpinBranch branch = SpinBranch::Minus);

/// Probability that an excited emitter meeting n photons has deposited photon
/// n+1 after time t.
double emission_probability(int n, double t, const RabiParams& p, const GainParams& gp,
                            SpinBranch branch = SpinBranch::Minus);

/// Complement of emission_probability (emitter still excited).
double survival_probability(int n, double t, const RabiParams& p, const GainParams& gp,
                            SpinBranch branch = SpinBranch::Minus);

/// Same pair from an already built block; the two always sum to one.
struct Outcome {
    double emit = 0.0;
    double survive = 1.0;
};
Outcome evolve(const SubspaceBloch& block, double epsilon, double t);

struct BlockadePoint {
    int n = 0;
    double probability = 0.0;  // P(n+1)
};

/// Emission probability against photon number for n = 0..n_max.
std::vector<BlockadePoint> blockade_profile(const RabiParams& p, const GainParams& gp, double t, int n_max,
                                            SpinBranch branch = SpinBranch::Minus);

} // namespace focklaser::emission
