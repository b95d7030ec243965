#include "focklaser/emission.hpp"

#include "focklaser/spectrum.hpp"

#include <cmath>
#include <string>

namespace focklaser {

std::vector<std::string> GainParams::validate(const RabiParams& p) const {
    auto rate = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError(std::string("GainParams: ") + name + " must be non-negative and finite");
        }
    };
    rate(epsilon, "epsilon");
    rate(Gamma, "Gamma");
    rate(r, "r");
    rate(kappa, "kappa");
    if (!std::isfinite(delta)) {
        throw ValidationError("GainParams: delta must be finite");
    }
    std::vector<std::string> warnings;
    if (epsilon / p.omega >= 1e-2) {
        warnings.push_back("epsilon/omega = " + std::to_string(epsilon / p.omega) +
                           " is not small; the weak emitter coupling picture may fail");
    }
    return warnings;
}

} // namespace focklaser

namespace focklaser::emission {

namespace {

double splitting_of(double d, const RabiParams& p) {
    if (p.lambda == 0.0) {
        return p.omega0 * d;
    }
    return (d < 0.0 ? -1.0 : 1.0) * std::hypot(p.omega0 * d, p.lambda);
}

double half_detuning(double s_prev, double s_cur, const RabiParams& p, const GainParams& gp, SpinBranch branch) {
    return 0.5 * p.omega * gp.delta - 0.25 * sign(branch) * (s_cur - s_prev);
}

} // namespace

double detuning(int m, const RabiParams& p, const GainParams& gp, SpinBranch branch) {
    if (m < 1) {
        throw ValidationError("detuning: m must be >= 1");
    }
    p.validate();
    const auto d = spectrum::displacement_diagonals(m, p.g);
    return half_detuning(splitting_of(d[m - 1], p), splitting_of(d[m], p), p, gp, branch);
}

std::vector<double> detunings(int n_max, const RabiParams& p, const GainParams& gp, SpinBranch branch) {
    if (n_max < 1) {
        throw ValidationError("detunings: n_max must be >= 1");
    }
    p.validate();
    const auto d = spectrum::displacement_diagonals(n_max, p.g);
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    double prev = splitting_of(d[0], p);
    for (int m = 1; m <= n_max; ++m) {
        const double cur = splitting_of(d[m], p);
        out[m] = half_detuning(prev, cur, p, gp, branch);
        prev = cur;
    }
    return out;
}

SubspaceBloch subspace_bloch(int m, const RabiParams& p, const GainParams& gp, SpinBranch branch) {
    SubspaceBloch b;
    b.m = m;
    b.Delta = detuning(m, p, gp, branch);
    // Mean of the two bare energies (emitter excited with m-1 photons, ground with m).
    b.E = 0.5 * (spectrum::energy(m - 1, branch, p) + spectrum::energy(m, branch, p));
    b.U = std::sqrt(b.Delta * b.Delta + m * gp.epsilon * gp.epsilon);
    return b;
}

Outcome evolve(const SubspaceBloch& block, double epsilon, double t) {
    if (!(t >= 0.0)) {
        throw ValidationError("emission: t must be non-negative");
    }
    Outcome out;
    const double coupling2 = block.m * epsilon * epsilon;
    if (block.U == 0.0 || coupling2 == 0.0) {
        return out;
    }
    const double s = std::sin(block.U * t);
    out.emit = coupling2 / (block.U * block.U) * s * s;
    out.survive = 1.0 - out.emit;
    return out;
}

double emission_probability(int n, double t, const RabiParams& p, const GainParams& gp, SpinBranch branch) {
    if (n < 0) {
        throw ValidationError("emission_probability: n must be non-negative");
    }
    return evolve(subspace_bloch(n + 1, p, gp, branch), gp.epsilon, t).emit;
}

double survival_probability(int n, double t, const RabiParams& p, const GainParams& gp, SpinBranch branch) {
    if (n < 0) {
        throw ValidationError("survival_probability: n must be non-negative");
    }
    return evolve(subspace_bloch(n + 1, p, gp, branch), gp.epsilon, t).survive;
}

std::vector<BlockadePoint> blockade_profile(const RabiParams& p, const GainParams& gp, double t, int n_max,
                                            SpinBranch branch) {
    if (n_max < 0) {
        throw ValidationError("blockade_profile: n_max must be non-negative");
    }
    const auto delta = detunings(n_max + 1, p, gp, branch);
    std::vector<BlockadePoint> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) {
        SubspaceBloch b;
        b.m = n + 1;
        b.Delta = delta[n + 1];
        b.U = std::sqrt(b.Delta * b.Delta + b.m * gp.epsilon * gp.epsilon);
        out.push_back({n, evolve(b, gp.epsilon, t).emit});
    }
    return out;
}

} // namespace focklaser::emission
