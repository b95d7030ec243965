#include "focklaser/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace focklaser {

void RabiParams::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw ValidationError("RabiParams: omega must be positive and finite");
    }
    if (!(omega0 >= 0.0) || !std::isfinite(omega0)) {
        throw ValidationError("RabiParams: omega0 must be non-negative and finite");
    }
    if (!(g >= 0.0) || !std::isfinite(g)) {
        throw ValidationError("RabiParams: g must be non-negative and finite");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("RabiParams: lambda must be non-negative and finite");
    }
}

} // namespace focklaser

namespace focklaser::spectrum {

namespace {

constexpr double kRescaleAbove = 1e150;
constexpr double kRescaleBelow = 1e-150;

// Runs the Laguerre recurrence for x = 4 g^2 with exp(-x/2) folded into a log
// scale. Calls visit(k, SignedLog) for k = 0..n_max.
template <typename Visit>
void scaled_recurrence(int n_max, double g, const DiagonalOptions& opts, Visit&& visit) {
    if (n_max < 0) {
        throw ValidationError("displacement_diagonal: n must be non-negative");
    }
    if (!(g >= 0.0) || !std::isfinite(g)) {
        throw ValidationError("displacement_diagonal: g must be non-negative and finite");
    }
    const double x = 4.0 * g * g;
    const double eps = std::numeric_limits<double>::epsilon();
    if (x == 0.0) {  // L_k(0) = 1
        for (int k = 0; k <= n_max; ++k) {
            visit(k, SignedLog{1, 0.0});
        }
        return;
    }

    double log_scale = -0.5 * x;
    double prev = 0.0;  // L_{k-1} / exp(log_scale)
    double cur = 1.0;   // L_k / exp(log_scale)
    double worst = 0.0; // largest |term| seen, in D units, for the rounding estimate

    auto emit = [&](int k) {
        SignedLog out;
        if (cur == 0.0) {
            out.sign = 0;
            out.log_abs = -std::numeric_limits<double>::infinity();
        } else {
            out.sign = cur > 0.0 ? 1 : -1;
            out.log_abs = std::log(std::abs(cur)) + log_scale;
        }
        worst = std::max(worst, std::exp(std::min(out.log_abs, 700.0)));
        const double err = eps * static_cast<double>(k + 1) * worst;
        if (!(err <= opts.abs_tolerance)) {
            throw NumericalError("displacement_diagonal: rounding estimate " + std::to_string(err) +
                                 " exceeds tolerance at n=" + std::to_string(k));
        }
        visit(k, out);
    };

    emit(0);
    for (int k = 0; k < n_max; ++k) {
        const double t1 = (2.0 * k + 1.0 - x) * cur / (k + 1.0);
        const double t2 = static_cast<double>(k) * prev / (k + 1.0);
        const double next = t1 - t2;
        const double term_mag = std::max(std::abs(t1), std::abs(t2));
        if (term_mag > 0.0) {
            worst = std::max(worst, std::exp(std::min(std::log(term_mag) + log_scale, 700.0)));
        }
        prev = cur;
        cur = next;
        if (!std::isfinite(cur)) {
            throw NumericalError("displacement_diagonal: recurrence overflow at n=" + std::to_string(k + 1));
        }
        const double mag = std::max(std::abs(prev), std::abs(cur));
        if (mag > kRescaleAbove || (mag < kRescaleBelow && mag > 0.0)) {
            const double shift = std::log(mag);
            prev /= mag;
            cur /= mag;
            log_scale += shift;
        }
        emit(k + 1);
    }
}

} // namespace

double SignedLog::value() const noexcept {
    if (sign == 0) {
        return 0.0;
    }
    return sign * std::exp(log_abs);
}

double laguerre(int n, double x) {
    if (n < 0) {
        throw ValidationError("laguerre: n must be non-negative");
    }
    if (!std::isfinite(x)) {
        throw ValidationError("laguerre: x must be finite");
    }
    double prev = 1.0;
    if (n == 0) {
        return prev;
    }
    double cur = 1.0 - x;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        if (!std::isfinite(cur)) {
            throw NumericalError("laguerre: overflow at order " + std::to_string(k + 1));
        }
    }
    return cur;
}

SignedLog displacement_diagonal_log(int n, double g, const DiagonalOptions& opts) {
    SignedLog result;
    scaled_recurrence(n, g, opts, [&](int k, const SignedLog& v) {
        if (k == n) {
            result = v;
        }
    });
    return result;
}

double displacement_diagonal(int n, double g, const DiagonalOptions& opts) {
    return displacement_diagonal_log(n, g, opts).value();
}

std::vector<double> displacement_diagonals(int n_max, double g, const DiagonalOptions& opts) {
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
    scaled_recurrence(n_max, g, opts, [&](int k, const SignedLog& v) { out[k] = v.value(); });
    return out;
}

namespace {

double splitting_from_diagonal(double d, const RabiParams& p) {
    const double a = p.omega0 * d;
    if (p.lambda == 0.0) {
        return a;
    }
    const double s = (d < 0.0) ? -1.0 : 1.0;
    return s * std::hypot(a, p.lambda);
}

} // namespace

double splitting(int n, const RabiParams& p) {
    p.validate();
    return splitting_from_diagonal(displacement_diagonal(n, p.g), p);
}

double energy(int n, SpinBranch sigma, const RabiParams& p) {
    return n * p.omega + 0.5 * sign(sigma) * splitting(n, p);
}

SpectrumTable excitation_gaps(SpinBranch sigma, const RabiParams& p, int n_max) {
    p.validate();
    if (n_max < 1) {
        throw ValidationError("excitation_gaps: n_max must be >= 1");
    }
    const auto d = displacement_diagonals(n_max, p.g);
    SpectrumTable table;
    table.levels.reserve(static_cast<std::size_t>(n_max));
    const double s = sign(sigma);
    for (int n = 0; n < n_max; ++n) {
        const double sn = splitting_from_diagonal(d[n], p);
        const double sn1 = splitting_from_diagonal(d[n + 1], p);
        Level lv;
        lv.n = n;
        lv.sigma = sigma;
        lv.energy = n * p.omega + 0.5 * s * sn;
        // Computed from the splitting difference to avoid cancellation in E_{n+1} - E_n.
        lv.gap = p.omega + 0.5 * s * (sn1 - sn);
        table.levels.push_back(lv);
    }
    return table;
}

SpectrumTable spectrum_table(const RabiParams& p, int n_max) {
    SpectrumTable table = excitation_gaps(SpinBranch::Minus, p, n_max);
    const SpectrumTable plus = excitation_gaps(SpinBranch::Plus, p, n_max);
    table.levels.insert(table.levels.end(), plus.levels.begin(), plus.levels.end());
    return table;
}

int critical_photon_number(const RabiParams& p, const CriticalOptions& opts) {
    p.validate();
    if (!(p.g > 0.0)) {
        throw ValidationError("critical_photon_number: g must be positive");
    }
    int ceiling = opts.scan_ceiling;
    if (ceiling <= 0) {
        ceiling = std::max(1000, static_cast<int>(std::ceil(16.0 * p.g * p.g)));
    }
    const auto table = excitation_gaps(opts.branch, p, ceiling);
    for (const Level& lv : table.levels) {
        if (std::abs(lv.gap - p.omega) / p.omega > opts.threshold) {
            return lv.n;
        }
    }
    if (p.g < opts.dsc_min_coupling) {
        return 0;
    }
    throw NumericalError("critical_photon_number: no anharmonic gap below n=" + std::to_string(ceiling));
}

double mixing_angle(int n, const RabiParams& p) {
    p.validate();
    if (p.lambda == 0.0) {
        return std::numbers::pi / 2.0;
    }
    const double theta = std::atan2(p.omega0 * displacement_diagonal(n, p.g), p.lambda);
    return theta < 0.0 ? theta + std::numbers::pi : theta;
}

double matrix_element_x(int n_prime, SpinBranch sigma_prime, int n, SpinBranch sigma,
                        const RabiParams& p, FieldOperator op) {
    if (n < 0 || n_prime < 0) {
        throw ValidationError("matrix_element_x: indices must be non-negative");
    }
    double value = 0.0;
    if (sigma_prime == sigma) {
        if (n_prime == n - 1) {
            value += std::sqrt(static_cast<double>(n));
        } else if (n_prime == n + 1) {
            value += std::sqrt(n + 1.0);
        }
    }
    if (op == FieldOperator::BPlusBdag || n_prime != n) {
        return value;
    }
    const double theta = mixing_angle(n, p);
    if (sigma_prime == sigma) {
        // -2g cos(theta) on the + ladder, +2g cos(theta) on the - ladder; zero at lambda = 0.
        if (p.lambda != 0.0) {
            value += -2.0 * p.g * sign(sigma) * std::cos(theta);
        }
    } else {
        value += -2.0 * p.g * std::sin(theta);
    }
    return value;
}

} // namespace focklaser::spectrum
