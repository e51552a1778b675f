#pragma once

// Linear-noise (Ornstein-Uhlenbeck) description of fluctuations around the
// fluid fixed point: Jacobian J on the active face, diffusion matrix Sigma
// from the primitive event table, and the stationary covariance V solving
// J V + V J^T + Sigma = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluid.hpp"
#include "model.hpp"

namespace erlangs {

struct Matrix2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a21 = 0.0;
    double a22 = 0.0;

    [[nodiscard]] Matrix2 transposed() const noexcept { return {a11, a21, a12, a22}; }
    [[nodiscard]] double trace() const noexcept { return a11 + a22; }
    [[nodiscard]] double det() const noexcept { return a11 * a22 - a12 * a21; }
    [[nodiscard]] double max_abs() const noexcept
    {
        return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
    }

    friend Matrix2 operator*(const Matrix2& x, const Matrix2& y) noexcept
    {
        return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
                x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
    }
    friend Matrix2 operator+(const Matrix2& x, const Matrix2& y) noexcept
    {
        return {x.a11 + y.a11, x.a12 + y.a12, x.a21 + y.a21, x.a22 + y.a22};
    }
    friend Matrix2 operator-(const Matrix2& x, const Matrix2& y) noexcept
    {
        return {x.a11 - y.a11, x.a12 - y.a12, x.a21 - y.a21, x.a22 - y.a22};
    }
    friend bool operator==(const Matrix2&, const Matrix2&) = default;
};

/// One primitive transition: increment (dq, ds) and its rate at the fixed point.
struct EventChannel {
    const char* name;
    double dq;
    double ds;
    double rate;
};

class StabilityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Event increments and rates evaluated on the active face at fp.
[[nodiscard]] inline std::vector<EventChannel> event_table(const ModelParams& m, const FixedPoint& fp)
{
    const bool ul = fp.regime.uses_underloaded_forms();
    const double busy = ul ? fp.q_star : fp.s_star;
    std::vector<EventChannel> out{
        {"arrival", 1.0, 0.0, m.lambda},
        {"unmarked completion", -1.0, 0.0, (1.0 - m.p) * m.mu * busy},
        {"marked completion", -1.0, -1.0, m.p * m.mu * busy},
        {"return-from-charge", 0.0, 1.0, m.gamma * (m.c - fp.s_star)},
    };
    if (!ul) {
        out.push_back({"abandonment", -1.0, 0.0, m.theta * (fp.q_star - fp.s_star)});
    }
    return out;
}

/// Sigma = sum over events of rate * l l^T.
[[nodiscard]] inline Matrix2 assemble_sigma(const std::vector<EventChannel>& events) noexcept
{
    Matrix2 s;
    for (const auto& e : events) {
        s.a11 += e.rate * e.dq * e.dq;
        s.a12 += e.rate * e.dq * e.ds;
        s.a22 += e.rate * e.ds * e.ds;
    }
    s.a21 = s.a12;
    return s;
}

/// Simplified form [[2λ, pμx*], [pμx*, 2pμx*]], x* the busy-server count at fp.
[[nodiscard]] inline Matrix2 simplified_sigma(const ModelParams& m, const FixedPoint& fp) noexcept
{
    const double busy = fp.regime.uses_underloaded_forms() ? fp.q_star : fp.s_star;
    const double off = m.p * m.mu * busy;
    return {2.0 * m.lambda, off, off, 2.0 * off};
}

[[nodiscard]] inline Matrix2 jacobian(const ModelParams& m, const FixedPoint& fp) noexcept
{
    if (fp.regime.uses_underloaded_forms()) {
        return {-m.mu, 0.0, -m.p * m.mu, -m.gamma};
    }
    return {-m.theta, m.theta - m.mu, 0.0, -(m.gamma + m.p * m.mu)};
}

struct LinearNoise {
    Matrix2 j;
    Matrix2 sigma;
    bool critical = false;  ///< boundary case; UL matrices used, approximation least reliable
};

/// J and Sigma at fp. Sigma comes from the event table and must agree with
/// the simplified closed form; a mismatch is a programming error.
inline LinearNoise jacobian_sigma(const ModelParams& m, const FixedPoint& fp)
{
    LinearNoise out;
    out.j = jacobian(m, fp);
    out.sigma = assemble_sigma(event_table(m, fp));
    out.critical = fp.regime.tag == RegimeTag::Critical;
    const Matrix2 simple = simplified_sigma(m, fp);
    const double scale = std::max(simple.max_abs(), std::numeric_limits<double>::min());
    if ((out.sigma - simple).max_abs() > 1e-9 * scale) {
        throw std::logic_error("jacobian_sigma: event-table Sigma disagrees with simplified form");
    }
    return out;
}

/// J V + V J^T + Sigma for symmetric V.
[[nodiscard]] inline Matrix2 lyapunov_residual(const Matrix2& j, const Matrix2& v, const Matrix2& sigma) noexcept
{
    return j * v + v * j.transposed() + sigma;
}

/// Unique symmetric V with J V + V J^T + Sigma = 0 for Hurwitz J.
///
/// Written out on (v11, v12, v22):
///   2 a11 v11 + 2 a12 v12                  = -S11
///   a21 v11 + (a11 + a22) v12 + a12 v22    = -S12
///             2 a21 v12 + 2 a22 v22        = -S22
inline Matrix2 solve_lyapunov(const Matrix2& j, const Matrix2& sigma)
{
    if (!(j.trace() < 0.0 && j.det() > 0.0)) {
        throw StabilityError("solve_lyapunov: J is not Hurwitz (trace=" + std::to_string(j.trace()) +
                             ", det=" + std::to_string(j.det()) + ")");
    }
    std::array<std::array<double, 4>, 3> a{{
        {2.0 * j.a11, 2.0 * j.a12, 0.0, -sigma.a11},
        {j.a21, j.a11 + j.a22, j.a12, -0.5 * (sigma.a12 + sigma.a21)},
        {0.0, 2.0 * j.a21, 2.0 * j.a22, -sigma.a22},
    }};
    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < 3; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < 3; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) {
                piv = r;
            }
        }
        std::swap(a[col], a[piv]);
        if (a[col][col] == 0.0) {
            throw StabilityError("solve_lyapunov: singular Lyapunov operator");
        }
        for (std::size_t r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < 4; ++k) {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    std::array<double, 3> x{};
    for (std::size_t i = 3; i-- > 0;) {
        double acc = a[i][3];
        for (std::size_t k = i + 1; k < 3; ++k) {
            acc -= a[i][k] * x[k];
        }
        x[i] = acc / a[i][i];
    }
    return {x[0], x[1], x[1], x[2]};
}

/// Stationary second moments of the linear-noise approximation.
///
/// v_qq, v_ss, v_qs are the per-regime closures. In overload the closure
/// v_qq = λ/θ drops the covariance coupling; v_qq_coupled = (λ - (μ-θ) v_qs)/θ
/// is the exact Lyapunov value. `lyapunov` holds the generic 2x2 solution.
struct MomentSet {
    double v_qq = 0.0;
    double v_ss = 0.0;
    double v_qs = 0.0;
    double v_qq_coupled = 0.0;
    FixedPoint fixed_point;
    Regime regime;
    Matrix2 j;
    Matrix2 sigma;
    Matrix2 lyapunov;
    std::vector<std::string> diagnostics;
};

namespace detail {

inline bool close_rel(double a, double b, double rel, double scale) noexcept
{
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), scale});
}

}  // namespace detail

/// Closed-form stationary moments, cross-checked entrywise against the
/// generic Lyapunov solve (1e-9 relative).
inline MomentSet stationary_moments(const ModelParams& m)
{
    MomentSet out;
    out.fixed_point = fixed_point(m);
    out.regime = out.fixed_point.regime;
    const LinearNoise ln = jacobian_sigma(m, out.fixed_point);
    out.j = ln.j;
    out.sigma = ln.sigma;
    if (ln.critical) {
        out.diagnostics.emplace_back("critical regime: underloaded matrices used; diffusion approximation least reliable at the boundary");
    }

    if (out.regime.uses_underloaded_forms()) {
        out.v_qq = m.lambda / m.mu;
        out.v_ss = m.lambda * m.p / m.gamma;
        out.v_qs = 0.0;
        out.v_qq_coupled = out.v_qq;
    } else {
        const double drain = m.gamma + m.p * m.mu;
        out.v_qq = m.lambda / m.theta;
        out.v_ss = m.c * m.gamma * m.p * m.mu / (drain * drain);
        out.v_qs = out.v_ss * (m.gamma + m.theta + m.p * m.mu - m.mu) / (m.theta + drain);
        out.v_qq_coupled = (m.lambda - (m.mu - m.theta) * out.v_qs) / m.theta;
    }

    out.lyapunov = solve_lyapunov(out.j, out.sigma);
    const double scale = 1e-300 + out.lyapunov.max_abs() * 1e-6;
    const Matrix2& v = out.lyapunov;
    if (!detail::close_rel(v.a11, out.v_qq_coupled, 1e-9, scale) || !detail::close_rel(v.a22, out.v_ss, 1e-9, scale) ||
        !detail::close_rel(v.a12, out.v_qs, 1e-9, scale)) {
        throw std::logic_error("stationary_moments: closed forms disagree with the Lyapunov solution");
    }
    return out;
}

/// μ window in which overload coexists with negative Cov(Q,S).
struct CovSignThresholds {
    double mu_neg = std::numeric_limits<double>::infinity();
    double mu_ol = std::numeric_limits<double>::infinity();
    bool window_nonempty = false;
};

/// Cov(Q,S) < 0 in OL iff μ > (γ+θ)/(1-p); the system is OL iff μ < λγ/(γc-λp)
/// (for every μ when γc - λp <= 0).
[[nodiscard]] inline CovSignThresholds covariance_sign_thresholds(double lambda, double theta, double p, double gamma,
                                                                  double c) noexcept
{
    CovSignThresholds out;
    if (p < 1.0) {
        out.mu_neg = (gamma + theta) / (1.0 - p);
    }
    const double denom = gamma * c - lambda * p;
    if (denom > 0.0) {
        out.mu_ol = lambda * gamma / denom;
    }
    out.window_nonempty = out.mu_neg < out.mu_ol;
    return out;
}

}  // namespace erlangs
