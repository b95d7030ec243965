#pragma once

// Independent reference computations shared by the test binaries.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

namespace oracle {

// L_n(x) from the explicit series sum_k C(n,k) (-x)^k / k!.
inline long double laguerre_series(int n, long double x) {
    long double sum = 0.0L;
    long double binom = 1.0L;  // C(n, k)
    long double power = 1.0L;  // (-x)^k / k!
    for (int k = 0; k <= n; ++k) {
        sum += binom * power;
        binom = binom * (n - k) / (k + 1);
        power = power * (-x) / (k + 1);
    }
    return sum;
}

// <n| exp(z (a' - a)) |m> from a dense matrix exponential in Fock(0..dim-1).
inline Eigen::MatrixXd displacement_matrix(int dim, double z) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    const Eigen::MatrixXd gen = z * (a.transpose() - a);
    return gen.exp();
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 engine(20240607ULL);
    return engine;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }
inline double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
inline int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

} // namespace oracle
