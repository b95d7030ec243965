// Randomized invariants, each over kCases draws from a fixed-seed generator.

#include "focklaser/emission.hpp"
#include "focklaser/exact.hpp"
#include "focklaser/laser_direct.hpp"
#include "focklaser/laser_rate.hpp"
#include "focklaser/liouvillian.hpp"
#include "focklaser/spectrum.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace focklaser;
using oracle::log_uniform;
using oracle::uniform;
using oracle::uniform_int;

namespace {

constexpr int kCases = 100;

SpinBranch random_branch() { return uniform_int(0, 1) ? SpinBranch::Plus : SpinBranch::Minus; }

// Rate-model parameters whose distribution stays below ~1e5 photons.
GainParams random_gain() {
    GainParams gp;
    gp.Gamma = log_uniform(1e-4, 1e-2);
    gp.epsilon = gp.Gamma * log_uniform(5e-3, 0.5);
    gp.kappa = log_uniform(1e-9, 1e-6);
    gp.r = laser_rate::threshold_pump(gp) * log_uniform(0.05, 30.0);
    return gp;
}

} // namespace

TEST_CASE("displacement diagonal against the matrix exponential") {
    for (int i = 0; i < kCases; ++i) {
        const double g = uniform(0.0, 3.0);
        const int n = uniform_int(0, 200);
        const int dim = n + static_cast<int>(8.0 * g * g + 40.0 * g) + 60;
        const Eigen::MatrixXd d = oracle::displacement_matrix(dim, 2.0 * g);
        INFO("g=" << g << " n=" << n);
        CHECK(std::abs(spectrum::displacement_diagonal(n, g) - d(n, n)) < 1e-8);
    }
}

TEST_CASE("branch energies are symmetric about n omega") {
    for (int i = 0; i < kCases; ++i) {
        const auto p = RabiParams::resonant(uniform(0.0, 15.0), uniform_int(0, 1) ? 0.0 : uniform(0.0, 0.5));
        const int n = uniform_int(0, 400);
        const double sum = spectrum::energy(n, SpinBranch::Plus, p) + spectrum::energy(n, SpinBranch::Minus, p);
        CHECK(std::abs(sum - 2.0 * n) <= 4e-16 * std::max(1, n));
    }
}

TEST_CASE("same-branch field elements are the bare ladder") {
    for (int i = 0; i < kCases; ++i) {
        const auto p = RabiParams::resonant(uniform(0.0, 15.0), uniform(0.0, 0.3));
        const int n = uniform_int(1, 300);
        const SpinBranch s = random_branch();
        const auto op = uniform_int(0, 1) ? spectrum::FieldOperator::APlusAdag : spectrum::FieldOperator::BPlusBdag;
        CHECK(spectrum::matrix_element_x(n - 1, s, n, s, p, op) == std::sqrt(static_cast<double>(n)));
        CHECK(spectrum::matrix_element_x(n + 1, s, n, s, p, op) == std::sqrt(n + 1.0));
    }
}

TEST_CASE("harmonic plateau below g^2 / 2") {
    for (int i = 0; i < kCases; ++i) {
        const double g = uniform(5.0, 15.0);
        const int top = static_cast<int>(g * g / 2.0);
        const auto gaps = spectrum::excitation_gaps(random_branch(), RabiParams::resonant(g), top + 1);
        double worst = 0.0;
        for (int n = 0; n <= top; ++n) {
            worst = std::max(worst, std::abs(gaps.levels[n].gap - 1.0));
        }
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("commutator of b = a + g sigma_x away from the truncation edge") {
    for (int i = 0; i < kCases; ++i) {
        const double g = uniform(0.0, 3.0);
        const exact::TruncatedBasis basis{exact::required_fock_dimension(g) + uniform_int(0, 20)};
        const Matrix<double> b = exact::field_b(basis, g).matrix;
        const Matrix<double> c = b * b.transpose() - b.transpose() * b;
        const int keep = basis.n_fock - basis.n_fock / 10;
        double worst = 0.0;
        for (int q = 0; q < 2; ++q) {
            for (int q2 = 0; q2 < 2; ++q2) {
                Matrix<double> blk = c.block(basis.index(q, 0), basis.index(q2, 0), keep, keep);
                if (q == q2) {
                    blk -= Matrix<double>::Identity(keep, keep);
                }
                worst = std::max(worst, blk.cwiseAbs().maxCoeff());
            }
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("emission and survival are complementary probabilities") {
    for (int i = 0; i < kCases; ++i) {
        const auto p = RabiParams::resonant(uniform(0.0, 12.0), uniform(0.0, 0.3));
        GainParams gp;
        gp.epsilon = log_uniform(1e-7, 1e-2);
        gp.delta = uniform(-0.05, 0.05);
        const int n = uniform_int(0, 300);
        const double t = log_uniform(1e-2, 1e2) / gp.epsilon;
        const SpinBranch s = random_branch();
        const double emit = emission::emission_probability(n, t, p, gp, s);
        const double survive = emission::survival_probability(n, t, p, gp, s);
        CHECK(emit >= 0.0);
        CHECK(emit <= 1.0);
        CHECK(emit + survive == 1.0);
        const emission::SubspaceBloch b = emission::subspace_bloch(n + 1, p, gp, s);
        CHECK(b.U >= std::abs(b.Delta));
        CHECK(b.U >= std::sqrt(n + 1.0) * gp.epsilon);
    }
}

TEST_CASE("emission is even in the detuning") {
    for (int i = 0; i < kCases; ++i) {
        GainParams gp;
        gp.epsilon = log_uniform(1e-6, 1e-3);
        gp.delta = uniform(-0.02, 0.02);
        emission::SubspaceBloch b = emission::subspace_bloch(uniform_int(1, 100), RabiParams::resonant(uniform(0.0, 8.0)), gp);
        const double t = log_uniform(1e-2, 1e2) / gp.epsilon;
        const double forward = emission::evolve(b, gp.epsilon, t).emit;
        b.Delta = -b.Delta;
        CHECK(emission::evolve(b, gp.epsilon, t).emit == forward);
    }
}

TEST_CASE("rate steady state: detailed balance, normalization and positivity") {
    for (int i = 0; i < kCases; ++i) {
        const auto p = RabiParams::resonant(uniform(0.0, 12.0));
        const GainParams gp = random_gain();
        const laser_rate::SteadyState ss = laser_rate::steady_state_full(p, gp);
        const auto& rho = ss.dist.probs;
        const auto c = laser_rate::gain_loss(p, gp, ss.dist.n_max());
        double flux = 0.0;
        double worst = 0.0;
        for (int n = 1; n <= ss.dist.n_max(); ++n) {
            const double up = c.gain[n] * rho(n - 1);
            const double down = c.kappa_n[n] * rho(n);
            flux = std::max({flux, up, down});
            worst = std::max(worst, std::abs(up - down));
        }
        INFO("g=" << p.g << " r=" << gp.r << " Gamma=" << gp.Gamma << " eps=" << gp.epsilon);
        CHECK(worst <= 1e-11 * flux);
        CHECK(std::abs(rho.sum() - 1.0) < 1e-12);
        CHECK(rho.minCoeff() >= 0.0);
        CHECK(ss.dist.variance >= 0.0);
    }
}

TEST_CASE("rate model is unchanged by rescalings that fix alpha and G") {
    for (int i = 0; i < kCases; ++i) {
        const auto p = RabiParams::resonant(uniform(0.0, 12.0));
        const GainParams gp = random_gain();
        GainParams scaled = gp;
        const double c = log_uniform(0.1, 10.0);
        scaled.r *= c;
        scaled.kappa *= c;
        const auto a = laser_rate::steady_state(p, gp);
        laser_rate::SteadyStateOptions so;
        so.n_max = a.n_max();
        CHECK(laser_rate::total_variation(a, laser_rate::steady_state(p, scaled, so)) < 1e-12);
    }
}

TEST_CASE("gain block: closed form equals explicit inversion") {
    for (int i = 0; i < kCases; ++i) {
        const double Gamma = log_uniform(1e-5, 1e-1);
        const double Delta = uniform(-1.0, 1.0) * log_uniform(1e-6, 1e-1);
        const double V = log_uniform(1e-7, 1e-1);
        const double ra = Gamma * log_uniform(1e-3, 1.0);
        const double closed = laser_direct::block_gain_closed(Gamma, Delta, V * V, ra);
        const double inverted = laser_direct::block_gain_inverted(Gamma, Delta, std::polar(V, uniform(-3.0, 3.0)), ra);
        CHECK(std::abs(closed - inverted) <= 1e-10 * closed);
    }
}

TEST_CASE("direct method equals the rate model with r -> r_a") {
    for (int i = 0; i < kCases; ++i) {
        const auto p = RabiParams::resonant(uniform(0.0, 12.0), uniform_int(0, 3) ? 0.0 : uniform(0.0, 0.2));
        GainParams gp = random_gain();
        const auto mlg = laser_direct::MultiLevelGain::from_gain(gp, log_uniform(1e2, 1e6));
        const auto direct = laser_direct::steady_state_direct(p, gp, mlg);
        gp.r = mlg.r_a();
        laser_rate::SteadyStateOptions so;
        so.n_max = direct.n_max();
        CHECK(laser_rate::total_variation(direct, laser_rate::steady_state(p, gp, so)) < 1e-10);
    }
}

TEST_CASE("transient conserves probability") {
    for (int i = 0; i < kCases; ++i) {
        const auto p = RabiParams::resonant(uniform(0.0, 8.0));
        GainParams gp;
        gp.epsilon = log_uniform(1e-5, 1e-3);
        gp.Gamma = log_uniform(1e-3, 1e-2);
        gp.kappa = log_uniform(1e-6, 1e-4);
        gp.r = laser_rate::threshold_pump(gp) * log_uniform(0.1, 10.0);
        Vector<double> v = Vector<double>::Zero(uniform_int(5, 60));
        v(uniform_int(0, static_cast<int>(v.size()) - 1)) = 1.0;
        const auto out = laser_rate::transient(laser_rate::make_distribution(v), p, gp, log_uniform(0.1, 10.0) / gp.kappa);
        CHECK(std::abs(out.probs.sum() - 1.0) < 1e-9);
        CHECK(out.probs.minCoeff() > -1e-12);
    }
}

TEST_CASE("Liouvillian preserves the trace and matches its dense form") {
    for (int i = 0; i < kCases; ++i) {
        liouvillian::LiouvillianOptions o;
        o.n_levels = uniform_int(2, 4);
        o.interaction = uniform_int(0, 1) ? liouvillian::Field::A : liouvillian::Field::B;
        o.jump = uniform_int(0, 1) ? liouvillian::Field::A : liouvillian::Field::B;
        o.rwa = uniform_int(0, 3) != 0;
        GainParams gp;
        gp.epsilon = log_uniform(1e-5, 5e-3);
        gp.Gamma = log_uniform(1e-4, 1e-2);
        gp.kappa = log_uniform(1e-8, 1e-3);
        gp.r = log_uniform(1e-4, 1e-1);
        const auto m = liouvillian::build_model(RabiParams::resonant(uniform(0.0, 2.5), uniform(0.0, 0.2)), gp, o);
        CHECK(m.trace_defect < 1e-12);
        Matrix<Complex> a = Matrix<Complex>::Random(m.dim(), m.dim());
        const Matrix<Complex> rho = a * a.adjoint() / (a * a.adjoint()).trace();
        const Matrix<Complex> d = liouvillian::apply(m, rho);
        CHECK(std::abs(d.trace()) < 1e-14);
        CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    }
}
