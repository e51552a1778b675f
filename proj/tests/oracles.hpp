#pragma once

// Independent reference computations for the test suites. None of these
// call into the library's numerics.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline double density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

/// P(Z > x) by composite Simpson on [x, x + 40] with n panels.
inline double upper_tail(double x, int n = 20000)
{
    const double a = x;
    const double b = x + 40.0;
    const double h = (b - a) / n;
    double s = density(a) + density(b);
    for (int i = 1; i < n; ++i) {
        s += density(a + i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return s * h / 3.0;
}

/// x with upper_tail(x) = eps, by bisection.
inline double upper_quantile(double eps)
{
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        (upper_tail(mid) > eps ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct SampleStats {
    double mean = 0.0;
    double var = 0.0;
    double se_mean = 0.0;  ///< standard error of the mean
    double se_var = 0.0;   ///< standard error of the variance estimate
};

/// Monte Carlo moments of max(m + sigma Z, 0).
inline SampleStats positive_part_mc(double m, double sigma, int n, std::uint64_t seed)
{
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = std::max(m + sigma * z(eng), 0.0);
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    const double nn = n;
    SampleStats out;
    out.mean = s1 / nn;
    const double m2 = s2 / nn - out.mean * out.mean;
    out.var = m2 * nn / (nn - 1.0);
    out.se_mean = std::sqrt(m2 / nn);
    // Central fourth moment for the variance-of-variance.
    const double mu = out.mean;
    const double m4 = s4 / nn - 4 * mu * s3 / nn + 6 * mu * mu * s2 / nn - 3 * mu * mu * mu * mu;
    out.se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / nn);
    return out;
}

/// Erlang-A (no charging): birth-death chain on Q with c fixed servers.
struct ErlangA {
    std::vector<double> pi;
    double delay = 0.0;        ///< P(Q >= c)
    double abandonment = 0.0;  ///< θ E[(Q-c)+] / λ
    double mean_q = 0.0;
    double var_q = 0.0;
};

inline ErlangA erlang_a(double lambda, double mu, double theta, int c, int n_max)
{
    ErlangA out;
    out.pi.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    out.pi[0] = 1.0;
    for (int n = 0; n < n_max; ++n) {
        const double down = std::min(n + 1, c) * mu + std::max(n + 1 - c, 0) * theta;
        out.pi[n + 1] = out.pi[n] * lambda / down;
    }
    double total = 0.0;
    for (double v : out.pi) {
        total += v;
    }
    double excess = 0.0, m1 = 0.0, m2 = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        out.pi[n] /= total;
        if (n >= c) {
            out.delay += out.pi[n];
        }
        excess += std::max(n - c, 0) * out.pi[n];
        m1 += n * out.pi[n];
        m2 += double(n) * n * out.pi[n];
    }
    out.abandonment = theta * excess / lambda;
    out.mean_q = m1;
    out.var_q = m2 - m1 * m1;
    return out;
}

/// Solves J V + V Jᵀ + Σ = 0 through the Kronecker form (I⊗J + J⊗I) vec V = -vec Σ.
inline Eigen::Matrix2d lyapunov_kron(const Eigen::Matrix2d& j, const Eigen::Matrix2d& sigma)
{
    const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
    Eigen::Matrix4d a;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            a.block<2, 2>(2 * r, 2 * c) = id(r, c) * j + j(r, c) * id;
        }
    Eigen::Vector4d rhs;
    rhs << -sigma(0, 0), -sigma(1, 0), -sigma(0, 1), -sigma(1, 1);
    const Eigen::Vector4d v = a.fullPivLu().solve(rhs);
    Eigen::Matrix2d out;
    out << v(0), v(2), v(1), v(3);
    return out;
}

}  // namespace oracle
