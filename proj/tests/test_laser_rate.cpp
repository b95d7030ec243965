#include "focklaser/laser_rate.hpp"
#include "focklaser/spectrum.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace focklaser;
using namespace focklaser::laser_rate;

namespace {

// Steady state from the birth-death products with D_n taken from a dense
// displacement matrix and everything in long double.
Vector<double> product_oracle(const RabiParams& p, const GainParams& gp, int n_max) {
    // D_n = 1 at g = 0, where n_max is too large for a dense matrix.
    const int dim = p.g == 0.0 ? 1 : n_max + static_cast<int>(8.0 * p.g * p.g + 40.0 * p.g) + 60;
    const Eigen::MatrixXd d = oracle::displacement_matrix(dim, 2.0 * p.g);
    // Log weights: far above threshold the raw products overflow even a long double.
    std::vector<long double> lw(static_cast<std::size_t>(n_max) + 1, 0.0L);
    for (int n = 1; n <= n_max; ++n) {
        const long double delta = p.g == 0.0 ? 0.0L : 0.25L * (d(n, n) - d(n - 1, n - 1));  // minus branch, resonant
        const long double e2 = static_cast<long double>(gp.epsilon) * gp.epsilon;
        const long double f = 4.0L * n * e2 + 4.0L * delta * delta;
        const long double rn = 2.0L * gp.r * e2 / (static_cast<long double>(gp.Gamma) * gp.Gamma + f);
        lw[n] = lw[n - 1] + std::log(rn / gp.kappa);
    }
    const long double top = *std::max_element(lw.begin(), lw.end());
    long double total = 0.0L;
    for (auto& x : lw) {
        x = std::exp(x - top);
        total += x;
    }
    Vector<double> out(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        out(n) = static_cast<double>(lw[n] / total);
    }
    return out;
}

GainParams defaults() { return GainParams{}; }

} // namespace

TEST_CASE("distribution statistics") {
    Vector<double> v(4);
    v << 1, 2, 3, 4;
    const PhotonDistribution d = make_distribution(v);
    CHECK(d.probs.sum() == doctest::Approx(1.0));
    CHECK(d.mean == doctest::Approx(2.0));
    CHECK(d.variance == doctest::Approx(1.0));
    CHECK(d.fano == doctest::Approx(0.5));
    CHECK(d.mode() == 3);
    Vector<double> bad(2);
    bad << 1, -0.5;
    CHECK_THROWS_AS(make_distribution(bad), NumericalError);
    Vector<double> a(2), b(3);
    a << 1, 0;
    b << 0, 0.5, 0.5;
    CHECK(total_variation(a, b) == doctest::Approx(1.0));
}

TEST_CASE("nonlinearity F") {
    GainParams gp = defaults();
    for (int n : {1, 10, 100}) {
        CHECK(nonlinearity_F(n, RabiParams::resonant(18.0), gp) ==
              doctest::Approx(4.0 * n * gp.epsilon * gp.epsilon).epsilon(1e-12));
    }
    CHECK(nonlinearity_F(1, RabiParams::resonant(0.0), gp) == doctest::Approx(4e-10).epsilon(1e-14));

    const Eigen::MatrixXd d = oracle::displacement_matrix(760, 20.0);
    const double dd = d(100, 100) - d(99, 99);
    const double ref = 4.0 * 100 * gp.epsilon * gp.epsilon + 0.25 * dd * dd;
    CHECK(nonlinearity_F(100, RabiParams::resonant(10.0), gp) == doctest::Approx(ref).epsilon(1e-8));
    CHECK_THROWS_AS(nonlinearity_F(0, RabiParams::resonant(1.0), gp), ValidationError);
}

TEST_CASE("gain and loss curves") {
    GainParams gp = defaults();
    gp.r = 0.0;
    const auto zero = gain_loss(RabiParams::resonant(10.0), gp, 50);
    for (int n = 1; n <= 50; ++n) {
        CHECK(zero.R[n] == 0.0);
        CHECK(zero.kappa_n[n] == doctest::Approx(gp.kappa * n));
    }
    gp = defaults();
    const auto c = gain_loss(RabiParams::resonant(10.0), gp, 200);
    CHECK(c.R[110] * 1e3 <= c.R[1]);
    for (int n = 1; n <= 200; ++n) {
        CHECK(c.R[n] > 0.0);
        CHECK(c.gain[n] == doctest::Approx(n * c.R[n]));
    }
    const auto m = gain_loss(RabiParams::resonant(2.0, 0.1), gp, 40, RateOptions{SpinBranch::Minus, LossModel::MatrixElement});
    for (int n = 1; n <= 40; ++n) {
        CHECK(m.kappa_n[n] == doctest::Approx(gp.kappa * n).epsilon(1e-12));
    }
    // Saturable gain in the weak-coupling reduction.
    RateOptions weak;
    weak.weak_coupling = true;
    const auto w = gain_loss(RabiParams::resonant(3.0), gp, 10, weak);
    const double ns = gp.Gamma * gp.Gamma / (4.0 * gp.epsilon * gp.epsilon);
    for (int n = 1; n <= 10; ++n) {
        CHECK(w.R[n] == doctest::Approx(w.R[1] * (1.0 + 1.0 / ns) / (1.0 + n / ns)).epsilon(1e-12));
    }
}

TEST_CASE("threshold") {
    GainParams gp = defaults();
    gp.kappa = 1.0 / 5e6;
    CHECK(threshold_pump(gp) == doctest::Approx(gp.Gamma).epsilon(1e-12));
    gp.r = 3e-3;
    CHECK(pump_parameter(gp) == doctest::Approx(3.0));
}

TEST_CASE("steady state against the product oracle") {
    for (double g : {0.0, 1.0, 3.0, 5.0}) {
        for (double r : {5e-5, 3e-4, 1e-2}) {
            GainParams gp = defaults();
            gp.kappa = 1e-7;
            gp.r = r;
            const auto p = RabiParams::resonant(g);
            SteadyStateOptions opts;
            const SteadyState ss = steady_state_full(p, gp, opts);
            const Vector<double> ref = product_oracle(p, gp, ss.dist.n_max());
            INFO("g=" << g << " r=" << r << " n_max=" << ss.dist.n_max());
            // Rounding in the double-precision products grows with their length.
            CHECK(total_variation(ss.dist.probs, ref) < std::max(1e-12, 1e-15 * ss.dist.n_max()));
        }
    }
}

TEST_CASE("thermal below threshold at g = 0") {
    GainParams gp;
    gp.epsilon = 1e-7;
    gp.Gamma = 1e-2;
    gp.kappa = 1e-8;
    gp.r = 0.5 * threshold_pump(gp);
    const auto d = steady_state(RabiParams::resonant(0.0), gp);
    double worst = 0.0;
    for (int n = 1; n <= d.n_max(); ++n) {
        worst = std::max(worst, std::abs(d.probs(n) / d.probs(n - 1) / 0.5 - 1.0));
    }
    CHECK(worst < 1e-6);
    CHECK(d.fano > 1.0);
    CHECK(classify(d, 0) == Regime::Thermal);
}

TEST_CASE("far above threshold at g = 0 the statistics approach Poisson") {
    GainParams gp = defaults();
    gp.r = 30.0 * threshold_pump(gp);
    const auto d = steady_state(RabiParams::resonant(0.0), gp);
    const double ns = gp.Gamma * gp.Gamma / (4.0 * gp.epsilon * gp.epsilon);
    CHECK(d.mean == doctest::Approx(29.0 * ns).epsilon(1e-2));
    // Scully-Lamb: Fano -> alpha / (alpha - 1) above threshold.
    CHECK(d.fano == doctest::Approx(30.0 / 29.0).epsilon(1e-2));
}

TEST_CASE("Fock-like state at g = 10") {
    const auto d = steady_state(RabiParams::resonant(10.0), defaults());
    CHECK(d.mean >= 90.0);
    CHECK(d.mean <= 110.0);
    CHECK(d.stddev() <= 2.0);
    CHECK(d.fano < 0.2);
}

TEST_CASE("tail and balance diagnostics") {
    SteadyStateOptions opts;
    opts.n_max = 40;
    CHECK_THROWS_AS(steady_state(RabiParams::resonant(10.0), defaults(), opts), NumericalError);
    GainParams gp = defaults();
    gp.kappa = 0.0;
    CHECK_THROWS_AS(steady_state(RabiParams::resonant(10.0), gp), ValidationError);
    const SteadyState ss = steady_state_full(RabiParams::resonant(10.0), defaults());
    CHECK(ss.balance_residual < 1e-12);
}

TEST_CASE("transient") {
    SUBCASE("t = 0 returns the input") {
        Vector<double> v = Vector<double>::Zero(10);
        v(3) = 1.0;
        const auto rho0 = make_distribution(v);
        const auto out = transient(rho0, RabiParams::resonant(5.0), defaults(), 0.0);
        CHECK(out.probs == rho0.probs);
    }
    SUBCASE("pure decay of |3>") {
        Vector<double> v = Vector<double>::Zero(4);
        v(3) = 1.0;
        GainParams gp = defaults();
        gp.r = 0.0;
        for (double kt : {0.1, 1.0, 3.0}) {
            const auto out = transient(make_distribution(v), RabiParams::resonant(0.0), gp, kt / gp.kappa);
            CHECK(out.mean == doctest::Approx(3.0 * std::exp(-kt)).epsilon(1e-8));
        }
    }
    SUBCASE("long times reach the steady state") {
        for (double g : {0.0, 2.0, 5.0}) {
            for (double alpha : {0.5, 3.0, 20.0}) {
                GainParams gp;
                gp.epsilon = 1e-4;
                gp.Gamma = 1e-3;
                gp.kappa = 1e-6;
                gp.r = alpha * threshold_pump(gp);
                const auto p = RabiParams::resonant(g);
                const auto ss = steady_state(p, gp);
                Vector<double> vac = Vector<double>::Zero(ss.n_max() + 1);
                vac(0) = 1.0;
                const auto late = transient(make_distribution(vac), p, gp, 400.0 / gp.kappa);
                INFO("g=" << g << " alpha=" << alpha);
                CHECK(total_variation(late, ss) < 1e-6);
            }
        }
    }
}

TEST_CASE("Fano factor falls with pump past threshold at g = 10") {
    std::vector<double> rs;
    for (int i = 0; i <= 12; ++i) {
        rs.push_back(1e-4 * std::pow(10.0, i / 6.0));
    }
    const auto sweep = pump_sweep(RabiParams::resonant(10.0), defaults(), rs);
    // Strong pumping pushes the tail against n_c, so the Fano factor bottoms out and creeps back up.
    for (std::size_t i = 1; i <= 6; ++i) {
        CHECK(sweep[i].fano < sweep[i - 1].fano);
    }
    for (std::size_t i = 6; i < sweep.size(); ++i) {
        CHECK(sweep[i].fano < 0.02);
    }
    CHECK(sweep.back().fano > sweep[7].fano);
}

TEST_CASE("sweeps are independent of the thread count") {
    std::vector<double> rs{1e-5, 1e-4, 1e-3, 1e-2};
    SweepOptions one, four;
    four.jobs = 4;
    const auto a = pump_sweep(RabiParams::resonant(5.0), defaults(), rs, one);
    const auto b = pump_sweep(RabiParams::resonant(5.0), defaults(), rs, four);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(a[i].dist.probs == b[i].dist.probs);
    }
    CHECK_THROWS_AS(pump_sweep(RabiParams::resonant(5.0), defaults(), {1e-3, 1e-4}), ValidationError);
}

TEST_CASE("regime classification examples") {
    const auto p = RabiParams::resonant(10.0);
    SUBCASE("far below threshold is thermal") {
        const auto m = regime_map(p, defaults(), {1e-6}, {1e-3});
        CHECK(m[0].regime == Regime::Thermal);
    }
    SUBCASE("uniform plateau near threshold") {
        GainParams gp = defaults();
        gp.Gamma = 3e-3;
        const double r = 0.998 * threshold_pump(gp);
        const auto m = regime_map(p, gp, {r}, {gp.Gamma});
        CHECK(m[0].regime == Regime::UniformCutoff);
    }
    SUBCASE("bimodal at large Gamma and pump") {
        GainParams gp;
        gp.epsilon = 1e-3;
        gp.kappa = 1e-5;
        gp.Gamma = 0.03;
        gp.r = 3.16 * threshold_pump(gp);
        const auto m = regime_map(RabiParams::resonant(5.0), gp, {gp.r}, {gp.Gamma});
        CHECK(m[0].regime == Regime::Bimodal);
        CHECK(count_modes(m[0].dist, 1e-3) >= 2);
    }
    SUBCASE("Fock-like at the headline point") {
        const auto m = regime_map(p, defaults(), {1e-2}, {1e-3});
        CHECK(m[0].regime == Regime::FockLike);
    }
}

TEST_CASE("scale invariance") {
    GainParams gp = defaults();
    gp.r = 4e-4;
    const auto base = steady_state(RabiParams::resonant(10.0), gp);
    GainParams slow = gp;
    slow.r *= 7.0;
    slow.kappa *= 7.0;
    CHECK(total_variation(base, steady_state(RabiParams::resonant(10.0), slow)) < 1e-12);

    RateOptions weak;
    weak.weak_coupling = true;
    SteadyStateOptions so;
    so.rate = weak;
    gp.r = 5.0 * threshold_pump(gp);
    const auto wbase = steady_state(RabiParams::resonant(0.0), gp, so);
    GainParams scaled = gp;
    scaled.Gamma *= 3.0;
    scaled.epsilon *= 3.0;
    CHECK(total_variation(wbase, steady_state(RabiParams::resonant(0.0), scaled, so)) < 1e-12);
}
