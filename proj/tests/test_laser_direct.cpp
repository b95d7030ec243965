#include "focklaser/laser_direct.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace focklaser;
using namespace focklaser::laser_direct;

namespace {

// Two lasing levels {a, b} with H = [[Delta, V*], [V, 0]], uniform decay Gamma
// and a constant feed r_a into a. Returns the steady population flux Gamma rho_bb.
double two_level_flux(double Gamma, double Delta, Complex V, double r_a) {
    Eigen::Matrix2cd h;
    h << Delta, std::conj(V), V, 0.0;
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    // Row-major vec: vec(H rho) = (H (x) I) vec, vec(rho H) = (I (x) H^T) vec.
    Eigen::Matrix4cd l = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k) {
                for (int m = 0; m < 2; ++m) {
                    l(2 * i + j, 2 * k + m) = Complex(0, -1) * (h(i, k) * id(j, m) - id(i, k) * h(m, j));
                }
            }
        }
    }
    l -= Gamma * Eigen::Matrix4cd::Identity();
    Eigen::Vector4cd src = Eigen::Vector4cd::Zero();
    src(0) = -r_a;
    const Eigen::Vector4cd rho = l.fullPivLu().solve(src);
    return Gamma * rho(3).real();
}

} // namespace

TEST_CASE("closed form against the explicit inversion and the two-level oracle") {
    for (double Gamma : {1e-4, 1e-3, 3e-2}) {
        for (double Delta : {0.0, 2e-4, -5e-3}) {
            for (double V : {1e-6, 3e-4, 1e-2}) {
                for (double phase : {0.0, 1.1, -2.5}) {
                    const double ra = 0.7 * Gamma;
                    const Complex v = std::polar(V, phase);
                    const double closed = block_gain_closed(Gamma, Delta, V * V, ra);
                    CHECK(block_gain_inverted(Gamma, Delta, v, ra) == doctest::Approx(closed).epsilon(1e-10));
                    CHECK(two_level_flux(Gamma, Delta, v, ra) == doctest::Approx(closed).epsilon(1e-9));
                }
            }
        }
    }
    CHECK(block_gain_closed(1e-3, 0.0, 0.0, 1e-3) == 0.0);
    CHECK_THROWS_AS(coherence_block(0.0, 0.0, Complex(1e-3, 0), 1.0), ValidationError);
}

TEST_CASE("saturable gain on the harmonic ladder") {
    GainParams gp;
    const auto mlg = MultiLevelGain::from_gain(gp);
    CHECK(mlg.r_a() == doctest::Approx(gp.r * gp.Gamma / (gp.r + gp.Gamma)));
    for (int n : {1, 10, 50}) {
        const BlockGain b = block_gain_A(n, RabiParams::resonant(18.0), gp, mlg);
        const double ref = 2.0 * mlg.r_a() * n * gp.epsilon * gp.epsilon /
                           (gp.Gamma * gp.Gamma + 4.0 * n * gp.epsilon * gp.epsilon);
        CHECK(b.closed == doctest::Approx(ref).epsilon(1e-12));
        CHECK(b.inverted == doctest::Approx(ref).epsilon(1e-10));
        CHECK(std::isfinite(b.condition));
    }
    // Past n_c the gain collapses just as R_n does.
    const double inside = block_gain_A(50, RabiParams::resonant(10.0), gp, mlg).closed;
    const double beyond = block_gain_A(110, RabiParams::resonant(10.0), gp, mlg).closed;
    CHECK(beyond < 1e-2 * inside);
}

TEST_CASE("direct steady state equals the rate model with r -> r_a") {
    for (double g : {0.0, 2.0, 10.0}) {
        for (double r : {1e-4, 1e-3, 1e-2}) {
            GainParams gp;
            gp.r = r;
            const auto mlg = MultiLevelGain::from_gain(gp);
            const auto direct = steady_state_direct(RabiParams::resonant(g), gp, mlg);
            GainParams eq = gp;
            eq.r = mlg.r_a();
            laser_rate::SteadyStateOptions so;
            so.n_max = direct.n_max();
            const auto rate = laser_rate::steady_state(RabiParams::resonant(g), eq, so);
            INFO("g=" << g << " r=" << r);
            CHECK(laser_rate::total_variation(direct, rate) < 1e-10);
        }
    }
}

TEST_CASE("lambda = 0.1 at g = 2 agrees with the rate model") {
    GainParams gp;
    const auto p = RabiParams::resonant(2.0, 0.1);
    const auto mlg = MultiLevelGain::from_gain(gp);
    DirectOptions d;
    d.method = GainMethod::Inversion;
    const auto direct = steady_state_direct(p, gp, mlg, d);
    GainParams eq = gp;
    eq.r = mlg.r_a();
    laser_rate::SteadyStateOptions so;
    so.n_max = direct.n_max();
    CHECK(laser_rate::total_variation(direct, laser_rate::steady_state(p, eq, so)) < 1e-10);
}

TEST_CASE("weak pump leaves the cavity near vacuum") {
    GainParams gp;
    gp.r = 1e-9;
    const auto d = steady_state_direct(RabiParams::resonant(5.0), gp, MultiLevelGain::from_gain(gp));
    CHECK(d.probs(0) > 0.99);
}

TEST_CASE("the phase of V does not matter") {
    GainParams gp;
    const auto mlg = MultiLevelGain::from_gain(gp);
    DirectOptions a, b;
    a.method = b.method = GainMethod::Inversion;
    b.v_phase = 0.9;
    const auto p = RabiParams::resonant(5.0);
    CHECK(laser_rate::total_variation(steady_state_direct(p, gp, mlg, a), steady_state_direct(p, gp, mlg, b)) < 1e-12);
}

TEST_CASE("validation of the gain medium") {
    GainParams gp;
    MultiLevelGain m = MultiLevelGain::from_gain(gp, 10.0);
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = MultiLevelGain::from_gain(gp);
    m.gamma_b *= 2.0;
    CHECK_THROWS_AS(m.r_a(), ValidationError);
}

TEST_CASE("five-level ladder converges to the eliminated model") {
    GainParams gp;
    gp.epsilon = 1e-4;
    gp.Gamma = 1e-3;
    gp.kappa = 1e-7;
    gp.r = 5e-3;
    const auto p = RabiParams::resonant(2.0);
    const auto eliminated = steady_state_direct(p, gp, MultiLevelGain::from_gain(gp, 1e6));
    const int n_max = eliminated.n_max();
    double prev = 1.0;
    for (double ratio : {1e2, 1e3, 1e4}) {
        const LadderResult lr = ladder_steady_state(p, gp, MultiLevelGain::from_gain(gp, ratio), n_max);
        const double tv = laser_rate::total_variation(lr.dist, eliminated);
        INFO("bath ratio " << ratio << " TV " << tv);
        CHECK(tv < prev);
        prev = tv;
        CHECK(lr.residual < 1e-10);
        CHECK(lr.bookkeeping_total < 1e-9);
        CHECK(lr.bookkeeping_ac < 1e-2);
        CHECK(lr.bookkeeping_bd < 1e-2);
    }
    // What remains is the cavity-induced dephasing the eliminated block leaves out.
    CHECK(prev < 2e-4);
}
