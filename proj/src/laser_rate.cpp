#include "focklaser/laser_rate.hpp"

#include "focklaser/emission.hpp"
#include "focklaser/spectrum.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <thread>

namespace focklaser::laser_rate {

int PhotonDistribution::mode() const {
    Eigen::Index idx = 0;
    probs.maxCoeff(&idx);
    return static_cast<int>(idx);
}

PhotonDistribution make_distribution(Vector<double> probs) {
    if (probs.size() == 0) {
        throw ValidationError("photon distribution: empty probability vector");
    }
    for (Eigen::Index n = 0; n < probs.size(); ++n) {
        const double v = probs(n);
        if (!std::isfinite(v)) {
            throw NumericalError("photon distribution: non-finite probability");
        }
        if (v < 0.0) {
            if (v < -1e-12) {
                throw NumericalError("photon distribution: negative probability " + std::to_string(v));
            }
            probs(n) = 0.0;
        }
    }
    const double total = probs.sum();
    if (!(total > 0.0)) {
        throw NumericalError("photon distribution: zero total probability");
    }
    PhotonDistribution d;
    d.probs = probs / total;
    const Vector<double> n = Vector<double>::LinSpaced(d.probs.size(), 0.0, static_cast<double>(d.probs.size() - 1));
    d.mean = d.probs.dot(n);
    d.variance = d.probs.dot((n.array() - d.mean).square().matrix());
    d.fano = d.mean > 0.0 ? d.variance / d.mean : 0.0;
    d.entropy = 0.0;
    for (Eigen::Index k = 0; k < d.probs.size(); ++k) {
        if (d.probs(k) > 0.0) {
            d.entropy -= d.probs(k) * std::log(d.probs(k));
        }
    }
    return d;
}

double total_variation(const Vector<double>& a, const Vector<double>& b) {
    const Eigen::Index n = std::max(a.size(), b.size());
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double x = k < a.size() ? a(k) : 0.0;
        const double y = k < b.size() ? b(k) : 0.0;
        sum += std::abs(x - y);
    }
    return 0.5 * sum;
}

double total_variation(const PhotonDistribution& a, const PhotonDistribution& b) {
    return total_variation(a.probs, b.probs);
}

namespace {

void check_inputs(const RabiParams& p, const GainParams& gp) {
    p.validate();
    gp.validate(p);
}

std::vector<double> half_detunings(int n_max, const RabiParams& p, const GainParams& gp, const RateOptions& opts) {
    if (opts.weak_coupling) {
        return std::vector<double>(static_cast<std::size_t>(n_max) + 1, 0.5 * p.omega * gp.delta);
    }
    return emission::detunings(n_max, p, gp, opts.branch);
}

double loss_coefficient(int n, const RabiParams& p, const GainParams& gp, const RateOptions& opts) {
    if (opts.loss == LossModel::Harmonic) {
        return gp.kappa * n;
    }
    const double x = spectrum::matrix_element_x(n - 1, opts.branch, n, opts.branch, p);
    return gp.kappa * x * x;
}

} // namespace

double nonlinearity_F(int n, const RabiParams& p, const GainParams& gp, const RateOptions& opts) {
    if (n < 1) {
        throw ValidationError("nonlinearity_F: n must be >= 1");
    }
    check_inputs(p, gp);
    const double delta = opts.weak_coupling ? 0.5 * p.omega * gp.delta : emission::detuning(n, p, gp, opts.branch);
    return 4.0 * n * gp.epsilon * gp.epsilon + 4.0 * delta * delta;
}

GainLossCurves gain_loss(const RabiParams& p, const GainParams& gp, int n_max, const RateOptions& opts) {
    if (n_max < 1) {
        throw ValidationError("gain_loss: n_max must be >= 1");
    }
    check_inputs(p, gp);
    const auto delta = half_detunings(n_max, p, gp, opts);
    const std::size_t size = static_cast<std::size_t>(n_max) + 1;
    GainLossCurves c;
    c.R.assign(size, 0.0);
    c.kappa_n.assign(size, 0.0);
    c.F.assign(size, 0.0);
    c.G.assign(size, 0.0);
    c.gain.assign(size, 0.0);
    const double g2 = gp.Gamma * gp.Gamma;
    const double e2 = gp.epsilon * gp.epsilon;
    for (int n = 1; n <= n_max; ++n) {
        c.F[n] = 4.0 * n * e2 + 4.0 * delta[n] * delta[n];
        const double denom = g2 + c.F[n];
        c.R[n] = denom > 0.0 ? 2.0 * gp.r * e2 / denom : 0.0;
        c.G[n] = g2 > 0.0 ? c.F[n] / g2 : std::numeric_limits<double>::infinity();
        c.kappa_n[n] = loss_coefficient(n, p, gp, opts);
        c.gain[n] = n * c.R[n];
    }
    return c;
}

double threshold_pump(const GainParams& gp) {
    if (!(gp.epsilon > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return gp.kappa * gp.Gamma * gp.Gamma / (2.0 * gp.epsilon * gp.epsilon);
}

double pump_parameter(const GainParams& gp) {
    return gp.r / threshold_pump(gp);
}

int propagation_cutoff(const GainLossCurves& curves) {
    for (int n = 1; n <= curves.n_max(); ++n) {
        if (curves.G[n] >= 1.0) {
            return n;
        }
    }
    return -1;
}

namespace {

std::string io_short(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

} // namespace

SteadyState steady_state_from_rates(const std::vector<double>& gain, const std::vector<double>& loss,
                                    double tail_tolerance, double balance_tolerance) {
    if (gain.size() != loss.size() || gain.size() < 2) {
        throw ValidationError("steady state: gain and loss arrays must match and cover n >= 1");
    }
    const auto size = static_cast<Eigen::Index>(gain.size());
    SteadyState out;
    out.log_weights.resize(size);
    out.log_weights(0) = 0.0;
    const double minus_inf = -std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 1; n < size; ++n) {
        const double a = gain[n];
        const double c = loss[n];
        if (!(a >= 0.0) || !(c >= 0.0) || !std::isfinite(a) || !std::isfinite(c)) {
            throw NumericalError("steady state: invalid rate at n=" + std::to_string(n));
        }
        if (a == 0.0 || out.log_weights(n - 1) == minus_inf) {
            out.log_weights(n) = minus_inf;
            continue;
        }
        if (c == 0.0) {
            throw ValidationError("steady state: loss rate vanishes at n=" + std::to_string(n) +
                                  " (kappa must be positive)");
        }
        out.log_weights(n) = out.log_weights(n - 1) + (std::log(a) - std::log(c));
    }
    const double top = out.log_weights.maxCoeff();
    double z = 0.0;
    for (Eigen::Index n = 0; n < size; ++n) {
        z += std::exp(out.log_weights(n) - top);
    }
    Vector<double> probs(size);
    for (Eigen::Index n = 0; n < size; ++n) {
        probs(n) = std::exp(out.log_weights(n) - top) / z;
    }
    out.dist = make_distribution(probs);

    const double tail = out.dist.probs(size - 1);
    if (tail > tail_tolerance) {
        throw NumericalError("steady state: probability " + io_short(tail) + " at n_max=" +
                             std::to_string(size - 1) + " exceeds the tail tolerance (increase n_max)");
    }

    // S_n = A_n rho_{n-1} - C_{n-1} rho_n, relative to the flux, on normal numbers.
    // exp(w - top) carries a relative rounding error of order eps (|w| + |top|).
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const auto& w = out.log_weights;
    double worst = 0.0;
    double excess = 0.0;
    const auto& rho = out.dist.probs;
    for (Eigen::Index n = 1; n < size; ++n) {
        const double up = gain[n] * rho(n - 1);
        const double down = loss[n] * rho(n);
        const double scale = up + down;
        if (scale < 1e-280 || rho(n) < std::numeric_limits<double>::min() ||
            rho(n - 1) < std::numeric_limits<double>::min()) {
            continue;
        }
        const double residual = std::abs(up - down) / scale;
        const double allowance = 8.0 * eps * (std::abs(w(n)) + std::abs(w(n - 1)) + 2.0 * std::abs(top) + 1.0);
        worst = std::max(worst, residual);
        excess = std::max(excess, residual - allowance);
    }
    out.balance_residual = worst;
    if (excess > balance_tolerance) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3g", worst);
        throw NumericalError(std::string("steady state: detailed-balance residual ") + buf);
    }
    return out;
}

namespace {

constexpr int kScanCeiling = 1 << 23;
constexpr double kScanDrop = 50.0;

// log(A_n / C_{n-1}) for n = 1..n_max.
std::vector<double> log_ratios(const RabiParams& p, const GainParams& gp, int n_max, const RateOptions& opts) {
    const auto delta = half_detunings(n_max, p, gp, opts);
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    const double g2 = gp.Gamma * gp.Gamma;
    const double e2 = gp.epsilon * gp.epsilon;
    for (int n = 1; n <= n_max; ++n) {
        const double f = 4.0 * n * e2 + 4.0 * delta[n] * delta[n];
        const double gain = n * 2.0 * gp.r * e2 / (g2 + f);
        const double loss = loss_coefficient(n, p, gp, opts);
        out[n] = gain > 0.0 ? std::log(gain) - std::log(loss) : -std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace

int suggest_n_max(const RabiParams& p, const GainParams& gp, const RateOptions& opts) {
    check_inputs(p, gp);
    if (!(gp.kappa > 0.0)) {
        throw ValidationError("steady state: kappa must be positive");
    }
    int floor_n = 20;
    if (!opts.weak_coupling && p.g >= spectrum::CriticalOptions{}.dsc_min_coupling) {
        spectrum::CriticalOptions copts;
        copts.branch = opts.branch;
        const int n_c = spectrum::critical_photon_number(p, copts);
        floor_n = std::max(floor_n, n_c + static_cast<int>(std::ceil(std::max(50.0, 10.0 * std::sqrt(n_c)))));
    }
    for (int limit = std::max(256, 2 * floor_n); limit <= kScanCeiling; limit *= 2) {
        const auto ratios = log_ratios(p, gp, limit, opts);
        double log_rho = 0.0;
        double best = 0.0;
        for (int n = 1; n <= limit; ++n) {
            log_rho += ratios[n];
            best = std::max(best, log_rho);
            if (n >= floor_n && log_rho < best - kScanDrop) {
                return n;
            }
        }
    }
    throw NumericalError("suggest_n_max: distribution does not decay below n=" + std::to_string(kScanCeiling));
}

SteadyState steady_state_full(const RabiParams& p, const GainParams& gp, const SteadyStateOptions& opts) {
    check_inputs(p, gp);
    if (!(gp.kappa > 0.0)) {
        throw ValidationError("steady state: kappa must be positive");
    }
    const int n_max = opts.n_max > 0 ? opts.n_max : suggest_n_max(p, gp, opts.rate);
    const GainLossCurves c = gain_loss(p, gp, n_max, opts.rate);
    std::vector<double> loss = c.kappa_n;
    return steady_state_from_rates(c.gain, loss, opts.tail_tolerance, opts.balance_tolerance);
}

PhotonDistribution steady_state(const RabiParams& p, const GainParams& gp, const SteadyStateOptions& opts) {
    return steady_state_full(p, gp, opts).dist;
}

PhotonDistribution transient(const PhotonDistribution& rho0, const RabiParams& p, const GainParams& gp,
                             double t_final, const TransientOptions& opts) {
    check_inputs(p, gp);
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
        throw ValidationError("transient: t_final must be non-negative and finite");
    }
    if (std::abs(rho0.probs.sum() - 1.0) > 1e-12) {
        throw ValidationError("transient: rho0 is not normalized");
    }
    const int n_max = std::max(opts.n_max, rho0.n_max());
    if (n_max < 1) {
        throw ValidationError("transient: n_max must be >= 1");
    }
    if (t_final == 0.0) {
        return rho0;
    }
    const GainLossCurves c = gain_loss(p, gp, n_max, opts.rate);
    const auto& a = c.gain;     // into n from n-1
    const auto& k = c.kappa_n;  // out of n to n-1

    using State = std::vector<double>;
    State x(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (Eigen::Index n = 0; n < rho0.probs.size(); ++n) {
        x[n] = rho0.probs(n);
    }
    auto rhs = [&](const State& rho, State& drho, double) {
        for (int n = 0; n <= n_max; ++n) {
            double v = 0.0;
            if (n >= 1) {
                v += a[n] * rho[n - 1] - k[n] * rho[n];
            }
            if (n < n_max) {
                v += k[n + 1] * rho[n + 1] - a[n + 1] * rho[n];
            }
            drho[n] = v;
        }
    };

    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol, ode::runge_kutta_dopri5<State>());
    double fastest = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        fastest = std::max(fastest, a[n] + k[n]);
    }
    const double dt0 = fastest > 0.0 ? std::min(t_final, 0.1 / fastest) : t_final;
    try {
        ode::integrate_adaptive(stepper, rhs, x, 0.0, t_final, dt0);
    } catch (const std::exception& e) {
        throw NumericalError(std::string("transient: integrator failed: ") + e.what());
    }

    double total = 0.0;
    for (double v : x) {
        total += v;
    }
    if (std::abs(total - 1.0) > opts.conservation_tolerance) {
        throw NumericalError("transient: probability drift " + std::to_string(total - 1.0));
    }
    return make_distribution(Eigen::Map<Vector<double>>(x.data(), static_cast<Eigen::Index>(x.size())));
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
    if (count == 0) {
        return;
    }
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<SweepPoint> pump_sweep(const RabiParams& p, const GainParams& gp, const std::vector<double>& r_values,
                                   const SweepOptions& opts) {
    for (std::size_t i = 0; i < r_values.size(); ++i) {
        if (!(r_values[i] > 0.0) || (i > 0 && !(r_values[i] > r_values[i - 1]))) {
            throw ValidationError("pump_sweep: r values must be positive and ascending");
        }
    }
    std::vector<SweepPoint> out(r_values.size());
    parallel_for(r_values.size(), opts.jobs, [&](std::size_t i) {
        GainParams local = gp;
        local.r = r_values[i];
        SweepPoint& pt = out[i];
        pt.r = local.r;
        pt.dist = steady_state(p, local, opts.steady);
        pt.mean = pt.dist.mean;
        pt.stddev = pt.dist.stddev();
        pt.fano = pt.dist.fano;
    });
    return out;
}

std::string to_string(Regime r) {
    switch (r) {
    case Regime::Thermal: return "thermal";
    case Regime::CoherentLike: return "coherent-like";
    case Regime::UniformCutoff: return "uniform-cutoff";
    case Regime::Bimodal: return "bimodal-tunneling";
    case Regime::FockLike: return "fock-like";
    }
    return "unknown";
}

int count_modes(const PhotonDistribution& d, double relative_height) {
    const auto& p = d.probs;
    const Eigen::Index size = p.size();
    const double floor = relative_height * p.maxCoeff();
    int modes = 0;
    for (Eigen::Index n = 0; n < size; ++n) {
        if (p(n) < floor) {
            continue;
        }
        const bool left = n == 0 || p(n) > p(n - 1);
        const bool right = n == size - 1 || p(n) >= p(n + 1);
        if (left && right) {
            ++modes;
        }
    }
    return modes;
}

bool is_uniform_cutoff(const PhotonDistribution& d, int n_c, const ClassifyOptions& opts) {
    const auto& p = d.probs;
    if (n_c - 5 < 4 || n_c + 5 > d.n_max()) {
        return false;
    }
    const auto plateau = p.segment(2, n_c - 5 - 2 + 1);
    const double lo = plateau.minCoeff();
    if (!(lo > 0.0) || plateau.maxCoeff() / lo >= opts.uniform_ratio) {
        return false;
    }
    return p(n_c + 5) / p(n_c - 5) < opts.cutoff_ratio;
}

Regime classify(const PhotonDistribution& d, int n_c, const ClassifyOptions& opts) {
    // Shape tests first: both a plateau and a vacuum-plus-n_c pair can have mode 0 and Fano > 1.
    if (n_c > 0 && is_uniform_cutoff(d, n_c, opts)) {
        return Regime::UniformCutoff;
    }
    if (count_modes(d, opts.modality_height) >= 2) {
        return Regime::Bimodal;
    }
    if (d.mode() == 0 && d.fano > 1.0) {
        return Regime::Thermal;
    }
    if (d.fano < opts.fock_fano) {
        return Regime::FockLike;
    }
    return Regime::CoherentLike;
}

std::vector<RegimePoint> regime_map(const RabiParams& p, const GainParams& gp, const std::vector<double>& r_values,
                                    const std::vector<double>& gamma_values, const SweepOptions& opts,
                                    const ClassifyOptions& copts) {
    std::vector<RegimePoint> out(r_values.size() * gamma_values.size());
    parallel_for(out.size(), opts.jobs, [&](std::size_t i) {
        GainParams local = gp;
        local.r = r_values[i % r_values.size()];
        local.Gamma = gamma_values[i / r_values.size()];
        RegimePoint& pt = out[i];
        pt.r = local.r;
        pt.Gamma = local.Gamma;
        pt.dist = steady_state(p, local, opts.steady);
        pt.n_c = propagation_cutoff(gain_loss(p, local, pt.dist.n_max(), opts.steady.rate));
        pt.regime = classify(pt.dist, pt.n_c, copts);
        pt.mean = pt.dist.mean;
        pt.fano = pt.dist.fano;
    });
    return out;
}

} // namespace focklaser::laser_rate
