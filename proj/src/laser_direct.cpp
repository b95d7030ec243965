#include "focklaser/laser_direct.hpp"

#include "focklaser/emission.hpp"
#include "focklaser/spectrum.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>

namespace focklaser::laser_direct {

MultiLevelGain MultiLevelGain::from_gain(const GainParams& gp, double bath_ratio) {
    MultiLevelGain m;
    m.r = gp.r;
    m.gamma_a = gp.Gamma;
    m.gamma_b = gp.Gamma;
    m.gamma_c = bath_ratio * gp.Gamma;
    m.gamma_d = bath_ratio * gp.Gamma;
    return m;
}

void MultiLevelGain::validate() const {
    for (double v : {r, gamma_a, gamma_b, gamma_c, gamma_d}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("MultiLevelGain: rates must be non-negative and finite");
        }
    }
    if (!(gamma_a > 0.0) || !(gamma_b > 0.0)) {
        throw ValidationError("MultiLevelGain: lasing-level decay rates must be positive");
    }
    if (gamma_c < min_bath_ratio * gamma_a || gamma_d < min_bath_ratio * gamma_b) {
        throw ValidationError("MultiLevelGain: bath levels must decay at least " + std::to_string(min_bath_ratio) +
                              "x faster than the lasing levels");
    }
}

double MultiLevelGain::Gamma() const {
    if (gamma_a != gamma_b) {
        throw ValidationError("MultiLevelGain: the eliminated block needs gamma_a == gamma_b");
    }
    return gamma_a;
}

double MultiLevelGain::r_a() const {
    const double g = Gamma();
    return r > 0.0 ? r * g / (r + g) : 0.0;
}

CoherenceBlock coherence_block(double Gamma, double Delta, Complex V, double r_a) {
    if (!(Gamma > 0.0)) {
        throw ValidationError("coherence block: Gamma must be positive");
    }
    const Complex i(0.0, 1.0);
    const Complex Vc = std::conj(V);
    CoherenceBlock b;
    b.M << Gamma, -i * V, i * Vc, 0.0,
           -i * Vc, Gamma + i * Delta, 0.0, i * Vc,
           i * V, 0.0, Gamma - i * Delta, -i * V,
           0.0, i * V, -i * Vc, Gamma;
    b.rhs << r_a, 0.0, 0.0, 0.0;
    const Eigen::JacobiSVD<Eigen::Matrix4cd> svd(b.M);
    const auto& s = svd.singularValues();
    b.condition = s(3) > 0.0 ? s(0) / s(3) : std::numeric_limits<double>::infinity();
    return b;
}

double block_gain_closed(double Gamma, double Delta, double V2, double r_a) {
    if (!(Gamma > 0.0)) {
        throw ValidationError("block gain: Gamma must be positive");
    }
    return 2.0 * r_a * V2 / (Gamma * Gamma + 4.0 * V2 + Delta * Delta);
}

double block_gain_inverted(double Gamma, double Delta, Complex V, double r_a) {
    const CoherenceBlock b = coherence_block(Gamma, Delta, V, r_a);
    if (!std::isfinite(b.condition)) {
        throw NumericalError("block gain: singular coherence block");
    }
    const Eigen::Vector4cd x = b.M.partialPivLu().solve(b.rhs);
    // Net a -> b flux -i (V rho_ab - V* rho_ba); at steady state it equals Gamma rho_bb.
    const Complex i(0.0, 1.0);
    return (-i * (V * x(1) - std::conj(V) * x(2))).real();
}

std::vector<TransitionData> transitions(const RabiParams& p, const GainParams& gp, int n_max,
                                        const laser_rate::RateOptions& opts) {
    if (n_max < 1) {
        throw ValidationError("transitions: n_max must be >= 1");
    }
    std::vector<double> half;
    if (opts.weak_coupling) {
        half.assign(static_cast<std::size_t>(n_max) + 1, 0.5 * p.omega * gp.delta);
    } else {
        half = emission::detunings(n_max, p, gp, opts.branch);
    }
    std::vector<TransitionData> out(static_cast<std::size_t>(n_max) + 1);
    for (int n = 1; n <= n_max; ++n) {
        const double x = spectrum::matrix_element_x(n - 1, opts.branch, n, opts.branch, p);
        out[n].Delta = 2.0 * half[n];
        out[n].x2 = x * x;
        out[n].V2 = gp.epsilon * gp.epsilon * out[n].x2;
    }
    return out;
}

BlockGain block_gain_A(int n, const RabiParams& p, const GainParams& gp, const MultiLevelGain& mlg, double v_phase,
                       const laser_rate::RateOptions& opts) {
    if (n < 1) {
        throw ValidationError("block_gain_A: n must be >= 1");
    }
    mlg.validate();
    const TransitionData t = transitions(p, gp, n, opts)[n];
    const double gamma = mlg.Gamma();
    const Complex V = std::polar(std::sqrt(t.V2), v_phase);
    BlockGain out;
    out.closed = block_gain_closed(gamma, t.Delta, t.V2, mlg.r_a());
    out.inverted = block_gain_inverted(gamma, t.Delta, V, mlg.r_a());
    out.condition = coherence_block(gamma, t.Delta, V, mlg.r_a()).condition;
    const double scale = std::max(std::abs(out.closed), std::abs(out.inverted));
    if (scale > 0.0 && std::abs(out.closed - out.inverted) > 1e-10 * scale) {
        throw NumericalError("block_gain_A: closed form and explicit inversion disagree at n=" + std::to_string(n));
    }
    return out;
}

laser_rate::PhotonDistribution steady_state_direct(const RabiParams& p, const GainParams& gp,
                                                   const MultiLevelGain& mlg, const DirectOptions& opts) {
    p.validate();
    gp.validate(p);
    mlg.validate();
    const double gamma = mlg.Gamma();
    const double r_a = mlg.r_a();
    int n_max = opts.n_max;
    if (n_max <= 0) {
        GainParams equivalent = gp;
        equivalent.r = r_a;
        equivalent.Gamma = gamma;
        n_max = laser_rate::suggest_n_max(p, equivalent, opts.rate);
    }
    const auto trans = transitions(p, gp, n_max, opts.rate);
    std::vector<double> gain(static_cast<std::size_t>(n_max) + 1, 0.0);
    std::vector<double> loss(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int n = 1; n <= n_max; ++n) {
        const TransitionData& t = trans[n];
        if (opts.method == GainMethod::ClosedForm) {
            gain[n] = block_gain_closed(gamma, t.Delta, t.V2, r_a);
        } else {
            gain[n] = block_gain_inverted(gamma, t.Delta, std::polar(std::sqrt(t.V2), opts.v_phase), r_a);
        }
        // C_{n-1} = kappa |<n-1|a+a'|n>|^2
        loss[n] = gp.kappa * t.x2;
    }
    return laser_rate::steady_state_from_rates(gain, loss, opts.tail_tolerance, opts.balance_tolerance).dist;
}

LadderResult ladder_steady_state(const RabiParams& p, const GainParams& gp, const MultiLevelGain& mlg, int n_max,
                                 const laser_rate::RateOptions& opts) {
    p.validate();
    gp.validate(p);
    mlg.validate();
    if (n_max < 1) {
        throw ValidationError("ladder_steady_state: n_max must be >= 1");
    }
    if (!(gp.kappa > 0.0)) {
        throw ValidationError("ladder_steady_state: kappa must be positive");
    }
    // Unknowns per photon number n: Pg, Pa, Pb, Pc, Pd, Re c_n, Im c_n with c_n = rho_{a n, b n+1}.
    enum { G, A, B, C, D, U, W, kPer };
    const int N = n_max;
    const Eigen::Index size = static_cast<Eigen::Index>(kPer) * (N + 1);
    auto at = [](int n, int k) { return static_cast<Eigen::Index>(kPer) * n + k; };

    const auto trans = transitions(p, gp, N, opts);
    const double kappa = gp.kappa;
    const double gperp = 0.5 * (mlg.gamma_a + mlg.gamma_b);

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(size) * 8);
    auto add = [&](Eigen::Index row, Eigen::Index col, double v) {
        if (v != 0.0) {
            t.emplace_back(row, col, v);
        }
    };

    for (int n = 0; n <= N; ++n) {
        // Cavity loss on every emitter level.
        for (int k : {G, A, B, C, D}) {
            add(at(n, k), at(n, k), -kappa * n);
            if (n < N) {
                add(at(n, k), at(n + 1, k), kappa * (n + 1));
            }
        }
        add(at(n, G), at(n, G), -mlg.r);
        add(at(n, G), at(n, C), mlg.gamma_c);
        add(at(n, G), at(n, D), mlg.gamma_d);
        add(at(n, A), at(n, G), mlg.r);
        add(at(n, A), at(n, A), -mlg.gamma_a);
        add(at(n, B), at(n, B), -mlg.gamma_b);
        add(at(n, C), at(n, A), mlg.gamma_a);
        add(at(n, C), at(n, C), -mlg.gamma_c);
        add(at(n, D), at(n, B), mlg.gamma_b);
        add(at(n, D), at(n, D), -mlg.gamma_d);

        if (n == N) {
            add(at(n, U), at(n, U), 1.0);
            add(at(n, W), at(n, W), 1.0);
            continue;
        }
        // Coherence between |a, n> and |b, n+1>; V = V_{b n+1, a n}.
        const TransitionData& tr = trans[n + 1];
        const Complex V = std::polar(std::sqrt(tr.V2), 0.0);
        const double vr = V.real(), vi = V.imag();
        const double decay = gperp + 0.5 * kappa * (2.0 * n + 1.0);
        // d c = -(i Delta + decay) c - i V* (Pb(n+1) - Pa(n)) + kappa sqrt((n+1)(n+2)) c_{n+1}
        add(at(n, U), at(n, U), -decay);
        add(at(n, U), at(n, W), tr.Delta);
        add(at(n, W), at(n, U), -tr.Delta);
        add(at(n, W), at(n, W), -decay);
        add(at(n, U), at(n + 1, B), -vi);
        add(at(n, U), at(n, A), vi);
        add(at(n, W), at(n + 1, B), -vr);
        add(at(n, W), at(n, A), vr);
        if (n + 1 < N) {
            const double feed = kappa * std::sqrt((n + 1.0) * (n + 2.0));
            add(at(n, U), at(n + 1, U), feed);
            add(at(n, W), at(n + 1, W), feed);
        }
        // a -> b flux 2 Im(V c) = 2 (vr Im c + vi Re c).
        add(at(n, A), at(n, W), -2.0 * vr);
        add(at(n, A), at(n, U), -2.0 * vi);
        add(at(n + 1, B), at(n, W), 2.0 * vr);
        add(at(n + 1, B), at(n, U), 2.0 * vi);
    }

    Eigen::SparseMatrix<double> L(size, size);
    L.setFromTriplets(t.begin(), t.end());

    // Replace the Pg(0) balance, redundant by probability conservation, with the trace.
    Eigen::SparseMatrix<double> S = L;
    S.prune([&](Eigen::Index row, Eigen::Index, double) { return row != at(0, G); });
    std::vector<Eigen::Triplet<double>> trace;
    for (int n = 0; n <= N; ++n) {
        for (int k : {G, A, B, C, D}) {
            trace.emplace_back(at(0, G), at(n, k), 1.0);
        }
    }
    Eigen::SparseMatrix<double> T(size, size);
    T.setFromTriplets(trace.begin(), trace.end());
    S += T;
    S.makeCompressed();

    Vector<double> rhs = Vector<double>::Zero(size);
    rhs(at(0, G)) = 1.0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(S);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("ladder_steady_state: sparse LU factorization failed");
    }
    Vector<double> x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("ladder_steady_state: sparse solve failed");
    }
    x += lu.solve(rhs - S * x);

    LadderResult out;
    out.residual = (L * x).cwiseAbs().maxCoeff() / std::max(1e-300, mlg.r + mlg.gamma_c + mlg.gamma_d);
    out.Pg.resize(N + 1);
    out.Pa.resize(N + 1);
    out.Pb.resize(N + 1);
    out.Pc.resize(N + 1);
    out.Pd.resize(N + 1);
    for (int n = 0; n <= N; ++n) {
        out.Pg(n) = x(at(n, G));
        out.Pa(n) = x(at(n, A));
        out.Pb(n) = x(at(n, B));
        out.Pc(n) = x(at(n, C));
        out.Pd(n) = x(at(n, D));
    }
    out.dist = laser_rate::make_distribution(out.Pg + out.Pa + out.Pb + out.Pc + out.Pd);

    const Vector<double> ac = mlg.gamma_a * out.Pa - mlg.gamma_c * out.Pc;
    const Vector<double> bd = mlg.gamma_b * out.Pb - mlg.gamma_d * out.Pd;
    const double flux = std::max({1e-300, (mlg.gamma_a * out.Pa).cwiseAbs().maxCoeff(),
                                  (mlg.gamma_b * out.Pb).cwiseAbs().maxCoeff()});
    out.bookkeeping_ac = ac.cwiseAbs().maxCoeff() / flux;
    out.bookkeeping_bd = bd.cwiseAbs().maxCoeff() / flux;
    out.bookkeeping_total = std::max(std::abs(ac.sum()), std::abs(bd.sum())) / flux;
    return out;
}

} // namespace focklaser::laser_direct
