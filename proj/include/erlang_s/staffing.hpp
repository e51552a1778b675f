#pragma once

// Staffing rules for delay-probability and abandonment-fraction targets.
//
// Delay targets use a normal model for Q - S around the fluid fixed point,
// either with S pinned at s* (deterministic servers) or with the regime's
// second-order closures (bivariate normal). Abandonment targets solve
// α(c) = ε for the overload closure by a bracketed Newton/bisection, with
// the fluid identity giving a lower bound and the starting bracket.
// The empirical rule searches integer c against replicated simulation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fluid.hpp"
#include "model.hpp"
#include "probability.hpp"
#include "root_finding.hpp"
#include "simulator.hpp"

namespace erlangs {

struct DelayTarget {
    double epsilon = 0.0;  ///< target P(Q >= S)
};

struct AbandonTarget {
    double epsilon = 0.0;  ///< target long-run abandonment fraction
};

enum class StaffingMethod { FluidDeterministic, BivariateNormal, AbandonImplicit, AbandonFluidBound, EmpiricalSim };

[[nodiscard]] inline std::string_view to_string(StaffingMethod m) noexcept
{
    switch (m) {
    case StaffingMethod::FluidDeterministic: return "fluid_deterministic";
    case StaffingMethod::BivariateNormal: return "bivariate_normal";
    case StaffingMethod::AbandonImplicit: return "abandon_implicit";
    case StaffingMethod::AbandonFluidBound: return "abandon_fluid_bound";
    case StaffingMethod::EmpiricalSim: return "empirical_sim";
    }
    return "?";
}

/// Which regime's formulas a delay solver should use.
enum class RegimeChoice { Auto, Underloaded, Overloaded };

struct StaffingDiagnostics {
    std::optional<double> predicted_at_ceil;   ///< predicted metric at c_int
    std::optional<double> predicted_at_floor;  ///< predicted metric at floor(c_real)
    bool regime_consistent = true;             ///< classify(c_real) agrees with regime_assumed
    int iterations = 0;
    std::optional<double> bracket_lo;
    std::optional<double> bracket_hi;
    std::optional<double> ci_half_width;  ///< empirical rule: CI of the estimate at c_int
    bool partial = false;                 ///< empirical rule ran out of budget
    std::vector<std::string> notes;
};

struct AlternativeAnswer {
    double c_real = 0.0;
    RegimeTag regime_assumed = RegimeTag::Underloaded;
    bool regime_consistent = false;
};

struct StaffingAnswer {
    double c_real = 0.0;
    std::int64_t c_int = 0;  ///< ceil(c_real)
    StaffingMethod method = StaffingMethod::FluidDeterministic;
    RegimeTag regime_assumed = RegimeTag::Underloaded;
    StaffingDiagnostics diagnostics;
    std::vector<AlternativeAnswer> alternatives;
};

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, double value) : std::runtime_error(what), value_(value) {}
    /// The offending quantity: discriminant, or α at the largest c tried.
    [[nodiscard]] double value() const noexcept { return value_; }

private:
    double value_;
};

class DegenerateVarianceError : public std::domain_error {
public:
    explicit DegenerateVarianceError(double variance)
        : std::domain_error("variance of Q - S is not positive: " + std::to_string(variance)), variance_(variance)
    {
    }
    [[nodiscard]] double variance() const noexcept { return variance_; }

private:
    double variance_;
};

class VarianceClosureError : public std::domain_error {
public:
    VarianceClosureError(double c, double u_a)
        : std::domain_error("overload variance closure lambda/theta + U_A c is not positive at c=" + std::to_string(c) +
                            " (U_A=" + std::to_string(u_a) + ")"),
          c_(c), u_a_(u_a)
    {
    }
    [[nodiscard]] double c() const noexcept { return c_; }
    [[nodiscard]] double u_a() const noexcept { return u_a_; }

private:
    double c_;
    double u_a_;
};

namespace detail {

inline double checked_epsilon(double eps, const char* who)
{
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::domain_error(std::string(who) + ": target must lie in (0,1)");
    }
    return eps;
}

inline std::int64_t ceil_servers(double c) { return static_cast<std::int64_t>(std::ceil(c - 1e-12)); }

inline void check_consistency(StaffingAnswer& a, const Rates& r)
{
    const RegimeTag actual = classify(with_servers(r, a.c_real)).tag;
    const bool want_ol = a.regime_assumed == RegimeTag::Overloaded;
    a.diagnostics.regime_consistent = want_ol ? actual == RegimeTag::Overloaded : actual != RegimeTag::Overloaded;
}

}  // namespace detail

/// Means and second-order closures of (Q, S) at a given c under one regime's
/// formulas, whether or not c actually lies in that regime.
struct ClosureMoments {
    double q_star = 0.0;
    double s_star = 0.0;
    double v_qq = 0.0;
    double v_ss = 0.0;
    double v_qs = 0.0;

    [[nodiscard]] double diff_variance() const noexcept { return v_qq + v_ss - 2.0 * v_qs; }
};

[[nodiscard]] inline ClosureMoments closure_moments(const Rates& r, double c, bool overloaded) noexcept
{
    ClosureMoments out;
    if (!overloaded) {
        out.q_star = r.lambda / r.mu;
        out.s_star = c - r.lambda * r.p / r.gamma;
        out.v_qq = r.lambda / r.mu;
        out.v_ss = r.lambda * r.p / r.gamma;
        out.v_qs = 0.0;
        return out;
    }
    const double k = kappa(r).value;
    const double drain = r.gamma + r.p * r.mu;
    out.s_star = k * c;
    out.q_star = r.lambda / r.theta + k * c * (1.0 - r.mu / r.theta);
    out.v_qq = r.lambda / r.theta;
    out.v_ss = c * r.gamma * r.p * r.mu / (drain * drain);
    out.v_qs = out.v_ss * (r.gamma + r.theta + r.p * r.mu - r.mu) / (r.theta + drain);
    return out;
}

/// Coefficient of c in the overload variance of Q - S:
/// σ²(c) = λ/θ + U_A c.
[[nodiscard]] inline double overload_variance_slope(const Rates& r) noexcept
{
    const double drain = r.gamma + r.p * r.mu;
    const double ratio = (r.gamma + r.theta + r.p * r.mu - r.mu) / (r.theta + drain);
    return r.gamma * r.p * r.mu / (drain * drain) * (1.0 - 2.0 * ratio);
}

/// P(Q >= S) = Phi_bar((s* - q*) / sqrt(v_qq + v_ss - 2 v_qs)).
[[nodiscard]] inline double delay_probability(double q_star, double s_star, double v_qq, double v_ss, double v_qs)
{
    const double var = v_qq + v_ss - 2.0 * v_qs;
    if (!(var > 0.0)) {
        throw DegenerateVarianceError(var);
    }
    return Phi_bar((s_star - q_star) / std::sqrt(var));
}

[[nodiscard]] inline double delay_probability(const ClosureMoments& cm)
{
    return delay_probability(cm.q_star, cm.s_star, cm.v_qq, cm.v_ss, cm.v_qs);
}

namespace detail {

/// Delay predicted with S pinned at s*: Phi_bar((s* - q*)/sqrt(q*)).
inline double deterministic_delay(const Rates& r, double c, bool overloaded)
{
    const ClosureMoments cm = closure_moments(r, c, overloaded);
    return delay_probability(cm.q_star, cm.s_star, cm.q_star, 0.0, 0.0);
}

inline std::optional<double> predicted_delay(const Rates& r, double c, bool deterministic)
{
    if (!(c > 0.0)) {
        return std::nullopt;
    }
    const bool ol = classify(with_servers(r, c)).tag == RegimeTag::Overloaded;
    try {
        return deterministic ? deterministic_delay(r, c, ol) : delay_probability(closure_moments(r, c, ol));
    } catch (const std::domain_error&) {
        return std::nullopt;
    }
}

inline void fill_delay_predictions(StaffingAnswer& a, const Rates& r, bool deterministic)
{
    a.c_int = ceil_servers(a.c_real);
    a.diagnostics.predicted_at_ceil = predicted_delay(r, static_cast<double>(a.c_int), deterministic);
    a.diagnostics.predicted_at_floor = predicted_delay(r, std::floor(a.c_real), deterministic);
}

/// Largest root of a x^2 - b x + k = 0 passing `accept`, else nullopt.
template <class Accept>
std::optional<double> pick_root(double a, double b, double k, double& disc_out, Accept&& accept)
{
    disc_out = b * b - 4.0 * a * k;
    if (disc_out < 0.0) {
        return std::nullopt;
    }
    const double sq = std::sqrt(disc_out);
    // Cancellation-free pair of roots.
    const double qv = 0.5 * (b + std::copysign(sq, b));
    double r1 = qv / a;
    double r2 = qv != 0.0 ? k / qv : r1;
    if (r2 > r1) {
        std::swap(r1, r2);
    }
    if (accept(r1)) {
        return r1;
    }
    if (accept(r2)) {
        return r2;
    }
    return std::nullopt;
}

inline bool sign_matches(double lhs, double z) noexcept
{
    const double tol = 1e-9 * (1.0 + std::abs(lhs));
    if (std::abs(z) < 1e-15) {
        return std::abs(lhs) <= tol;
    }
    return z > 0.0 ? lhs >= -tol : lhs <= tol;
}

inline double ul_deterministic(const Rates& r, double z)
{
    return r.lambda * r.p / r.gamma + r.lambda / r.mu + std::sqrt(r.lambda / r.mu) * z;
}

/// Solves s* = q* + z sqrt(q*) with the overload fluid point. In x = κc:
/// μ² x² - (2λμ - θ(μ-θ) z²) x + λ² - θλz² = 0, keeping the root with
/// sign(μx - λ) = sign(z).
inline double ol_deterministic(const Rates& r, double z)
{
    const double k = kappa(r).value;
    const double a = r.mu * r.mu;
    const double b = 2.0 * r.lambda * r.mu - r.theta * (r.mu - r.theta) * z * z;
    const double kk = r.lambda * r.lambda - r.theta * r.lambda * z * z;
    double disc = 0.0;
    auto accept = [&](double x) {
        const double q_star = r.lambda / r.theta + x * (1.0 - r.mu / r.theta);
        return x > 0.0 && q_star > 0.0 && sign_matches(r.mu * x - r.lambda, z);
    };
    const auto x = pick_root(a, b, kk, disc, accept);
    if (!x) {
        throw InfeasibleError("staff_delay_deterministic: no admissible overload root (discriminant " +
                                  std::to_string(disc) + ")",
                              disc);
    }
    return *x / k;
}

inline double ul_bivariate(const Rates& r, double z)
{
    const double load = r.lambda / r.mu + r.lambda * r.p / r.gamma;
    return load + z * std::sqrt(load);
}

/// (μκc - λ)/θ = z sqrt(λ/θ + U c), squared:
/// μ²κ² c² - (2μκλ + z²θ²U) c + λ² - z²θλ = 0.
inline double ol_bivariate(const Rates& r, double z)
{
    const double k = kappa(r).value;
    const double u = overload_variance_slope(r);
    const double a = r.mu * r.mu * k * k;
    const double b = 2.0 * r.mu * k * r.lambda + z * z * r.theta * r.theta * u;
    const double kk = r.lambda * r.lambda - z * z * r.theta * r.lambda;
    double disc = 0.0;
    auto accept = [&](double c) {
        return c > 0.0 && r.lambda / r.theta + u * c > 0.0 && sign_matches(r.mu * k * c - r.lambda, z);
    };
    const auto c = pick_root(a, b, kk, disc, accept);
    if (!c) {
        throw InfeasibleError("staff_delay_bivariate: no admissible overload root (discriminant " +
                                  std::to_string(disc) + ")",
                              disc);
    }
    if (!(closure_moments(r, *c, true).diff_variance() > 0.0)) {
        throw DegenerateVarianceError(closure_moments(r, *c, true).diff_variance());
    }
    return *c;
}

template <class UlSolve, class OlSolve>
StaffingAnswer staff_delay(const Rates& r, double eps, RegimeChoice choice, StaffingMethod method, UlSolve&& ul,
                           OlSolve&& ol)
{
    const double z = Phi_bar_inv(eps);
    StaffingAnswer a;
    a.method = method;

    auto solve_in = [&](bool overloaded) {
        StaffingAnswer s = a;
        s.regime_assumed = overloaded ? RegimeTag::Overloaded : RegimeTag::Underloaded;
        s.c_real = overloaded ? ol(r, z) : ul(r, z);
        if (!(s.c_real > 0.0)) {
            throw InfeasibleError("staffing: nonpositive server count", s.c_real);
        }
        check_consistency(s, r);
        return s;
    };

    StaffingAnswer out;
    if (choice == RegimeChoice::Underloaded) {
        out = solve_in(false);
    } else if (choice == RegimeChoice::Overloaded) {
        out = solve_in(true);
    } else {
        std::optional<StaffingAnswer> ul_ans;
        try {
            ul_ans = solve_in(false);
        } catch (const InfeasibleError&) {
        }
        if (ul_ans && ul_ans->diagnostics.regime_consistent) {
            out = *ul_ans;
        } else {
            std::optional<StaffingAnswer> ol_ans;
            std::string ol_error;
            try {
                ol_ans = solve_in(true);
            } catch (const std::exception& e) {
                ol_error = e.what();
            }
            if (ol_ans && ol_ans->diagnostics.regime_consistent) {
                out = *ol_ans;
            } else if (ul_ans) {
                out = *ul_ans;
                out.diagnostics.notes.emplace_back("neither regime's answer is self-consistent");
                if (ol_ans) {
                    out.alternatives.push_back({ol_ans->c_real, RegimeTag::Overloaded, false});
                } else {
                    out.diagnostics.notes.push_back("overload branch: " + ol_error);
                }
            } else if (ol_ans) {
                out = *ol_ans;
                out.diagnostics.notes.emplace_back("neither regime's answer is self-consistent");
            } else {
                throw InfeasibleError("staffing: no solution in either regime", 0.0);
            }
        }
    }
    if (!out.diagnostics.regime_consistent && out.diagnostics.notes.empty()) {
        out.diagnostics.notes.emplace_back("returned c lies outside the assumed regime");
    }
    return out;
}

}  // namespace detail

/// Square-root rule with S pinned at its fluid value.
inline StaffingAnswer staff_delay_deterministic(const Rates& rates, DelayTarget target,
                                                RegimeChoice choice = RegimeChoice::Auto)
{
    validate_rates(rates);
    const double eps = detail::checked_epsilon(target.epsilon, "staff_delay_deterministic");
    StaffingAnswer a = detail::staff_delay(rates, eps, choice, StaffingMethod::FluidDeterministic,
                                           detail::ul_deterministic, detail::ol_deterministic);
    detail::fill_delay_predictions(a, rates, true);
    return a;
}

/// Square-root rule with the joint-normal closures for Var(Q), Var(S), Cov(Q,S).
inline StaffingAnswer staff_delay_bivariate(const Rates& rates, DelayTarget target,
                                            RegimeChoice choice = RegimeChoice::Auto)
{
    validate_rates(rates);
    const double eps = detail::checked_epsilon(target.epsilon, "staff_delay_bivariate");
    StaffingAnswer a = detail::staff_delay(rates, eps, choice, StaffingMethod::BivariateNormal, detail::ul_bivariate,
                                           detail::ol_bivariate);
    detail::fill_delay_predictions(a, rates, false);
    return a;
}

/// Overload closure α(c) = (θ/λ) E[(m + σZ)+] with m(c) = λ/θ - μκc/θ and
/// σ²(c) = λ/θ + U_A c.
[[nodiscard]] inline double alpha_of_c(const Rates& r, double c)
{
    const double u = overload_variance_slope(r);
    const double var = r.lambda / r.theta + u * c;
    if (!(var > 0.0)) {
        throw VarianceClosureError(c, u);
    }
    const double m = (r.lambda - r.mu * kappa(r).value * c) / r.theta;
    return r.theta / r.lambda * expected_positive_part({m, std::sqrt(var)});
}

/// dα/dc = (θ/λ)[Φ(m/σ) m'(c) + φ(m/σ) σ'(c)].
[[nodiscard]] inline double alpha_of_c_derivative(const Rates& r, double c)
{
    const double u = overload_variance_slope(r);
    const double var = r.lambda / r.theta + u * c;
    if (!(var > 0.0)) {
        throw VarianceClosureError(c, u);
    }
    const double k = kappa(r).value;
    const double sigma = std::sqrt(var);
    const double m = (r.lambda - r.mu * k * c) / r.theta;
    const double a = m / sigma;
    return r.theta / r.lambda * (Phi(a) * (-r.mu * k / r.theta) + phi(a) * u / (2.0 * sigma));
}

/// c with λ(γ+pμ)(1-ε)/(γμ) servers: the fluid abandonment fraction equals ε.
inline StaffingAnswer staff_abandon_fluid_bound(const Rates& rates, AbandonTarget target)
{
    validate_rates(rates);
    const double eps = detail::checked_epsilon(target.epsilon, "staff_abandon_fluid_bound");
    StaffingAnswer a;
    a.method = StaffingMethod::AbandonFluidBound;
    a.regime_assumed = RegimeTag::Overloaded;
    a.c_real = rates.lambda * (rates.gamma + rates.p * rates.mu) * (1.0 - eps) / (rates.gamma * rates.mu);
    a.c_int = detail::ceil_servers(a.c_real);
    detail::check_consistency(a, rates);
    auto fluid_alpha = [&](double c) {
        return std::max(0.0, 1.0 - rates.gamma * rates.mu * c / (rates.lambda * (rates.gamma + rates.p * rates.mu)));
    };
    a.diagnostics.predicted_at_ceil = fluid_alpha(static_cast<double>(a.c_int));
    a.diagnostics.predicted_at_floor = fluid_alpha(std::floor(a.c_real));
    return a;
}

struct AbandonSolverOptions {
    double c_max = 1e9;
    double tolerance = 1e-8;  ///< on |α(c) - ε|
};

/// Unique root of α(c) = ε. The bracket starts at the fluid bound, where
/// α >= ε, and doubles upward until α < ε.
inline StaffingAnswer staff_abandon_implicit(const Rates& rates, AbandonTarget target,
                                             const AbandonSolverOptions& opt = {})
{
    validate_rates(rates);
    const double eps = detail::checked_epsilon(target.epsilon, "staff_abandon_implicit");
    const double u = overload_variance_slope(rates);
    // Beyond this c the variance closure is not positive.
    const double c_var_limit = u < 0.0 ? -(rates.lambda / rates.theta) / u : opt.c_max;

    double lo = staff_abandon_fluid_bound(rates, target).c_real;
    double hi = lo;
    int expansions = 0;
    for (;;) {
        double next = 2.0 * hi;
        if (next >= c_var_limit) {
            next = 0.5 * (hi + c_var_limit);
        }
        if (next > opt.c_max || next - hi < 1e-9 * c_var_limit) {
            const double probe = std::min(opt.c_max, hi);
            throw InfeasibleError("staff_abandon_implicit: bracket expansion failed; alpha(" + std::to_string(probe) +
                                      ") = " + std::to_string(alpha_of_c(rates, probe)),
                                  alpha_of_c(rates, probe));
        }
        hi = next;
        ++expansions;
        if (alpha_of_c(rates, hi) < eps) {
            break;
        }
        lo = hi;
    }

    // When σ is negligible next to m, α at the fluid bound equals ε up to
    // rounding and can land a hair below it.
    const double f_lo = alpha_of_c(rates, lo) - eps;
    const RootResult root =
        f_lo <= opt.tolerance
            ? RootResult{lo, f_lo, lo, lo, 0, true}
            : newton_bisect([&](double c) { return alpha_of_c(rates, c) - eps; },
                            [&](double c) { return alpha_of_c_derivative(rates, c); }, lo, hi, opt.tolerance);
    StaffingAnswer a;
    a.method = StaffingMethod::AbandonImplicit;
    a.regime_assumed = RegimeTag::Overloaded;
    a.c_real = root.x;
    a.c_int = detail::ceil_servers(a.c_real);
    a.diagnostics.iterations = root.iterations + expansions;
    a.diagnostics.bracket_lo = root.lo;
    a.diagnostics.bracket_hi = root.hi;
    a.diagnostics.predicted_at_ceil = alpha_of_c(rates, static_cast<double>(a.c_int));
    if (std::floor(a.c_real) > 0.0) {
        a.diagnostics.predicted_at_floor = alpha_of_c(rates, std::floor(a.c_real));
    }
    detail::check_consistency(a, rates);
    if (!a.diagnostics.regime_consistent) {
        a.diagnostics.notes.emplace_back(
            "root lies in the underloaded region: abandonment does not bind there (fluid abandonment is zero); "
            "overload closure extrapolated, delay staffing is the active constraint");
    }
    if (!root.converged) {
        a.diagnostics.notes.emplace_back("root finder hit its iteration cap");
    }
    return a;
}

struct ExcessMoments {
    double mean_excess = 0.0;  ///< E[(Q-S)+]
    double var_excess = 0.0;   ///< Var((Q-S)+)
    double mean_idle = 0.0;    ///< E[(S-Q)+]
    double var_idle = 0.0;     ///< Var((S-Q)+)
};

/// Positive-part moments of D = Q - S and of -D under the joint-normal model.
inline ExcessMoments excess_moments(double q_star, double s_star, double v_qq, double v_ss, double v_qs)
{
    const double var = v_qq + v_ss - 2.0 * v_qs;
    if (!(var > 0.0)) {
        throw DegenerateVarianceError(var);
    }
    const double sigma = std::sqrt(var);
    const double m = q_star - s_star;
    const PositivePartMoments ex = positive_part_moments({m, sigma});
    const PositivePartMoments id = positive_part_moments({-m, sigma});
    return {ex.mean, ex.variance, id.mean, id.variance};
}

enum class EmpiricalMetric { Delay, Abandonment };

[[nodiscard]] inline std::string_view to_string(EmpiricalMetric m) noexcept
{
    return m == EmpiricalMetric::Delay ? "delay" : "abandonment";
}

struct SimBudget {
    std::uint64_t customers = 100000;  ///< per replication
    std::size_t replications = 10;
    std::uint64_t seed = 1;
    double warmup = 0.2;
    unsigned jobs = 1;
    std::int64_t c_start = 0;  ///< 0: start from the analytic recommendation
    int max_evaluations = 64;
    std::int64_t c_max = 1000000;
};

struct EmpiricalPoint {
    std::int64_t c = 0;
    MetricSummary estimate;
};

/// Smallest integer c whose replicated point estimate of the metric is <= ε.
/// Exponential bracketing from a starting guess, then integer bisection;
/// every candidate reuses the same seed (common random numbers).
inline StaffingAnswer staff_empirical(const Rates& rates, EmpiricalMetric metric, double epsilon,
                                      const SimBudget& budget = {}, std::vector<EmpiricalPoint>* trace = nullptr)
{
    validate_rates(rates);
    const double eps = detail::checked_epsilon(epsilon, "staff_empirical");

    std::map<std::int64_t, MetricSummary> cache;
    int evaluations = 0;
    struct BudgetExhausted {};
    auto estimate = [&](std::int64_t c) -> const MetricSummary& {
        if (auto it = cache.find(c); it != cache.end()) {
            return it->second;
        }
        if (evaluations >= budget.max_evaluations || c > budget.c_max) {
            throw BudgetExhausted{};
        }
        ++evaluations;
        SimConfig cfg;
        cfg.params = with_servers(rates, static_cast<double>(c));
        cfg.stop = StopRule::after_customers(budget.customers);
        cfg.warmup = budget.warmup;
        cfg.seed = budget.seed;
        const ReplicationSummary s = replicate(cfg, budget.replications, budget.jobs);
        const MetricSummary& v = metric == EmpiricalMetric::Delay ? s.delay_probability : s.abandonment_fraction;
        if (trace) {
            trace->push_back({c, v});
        }
        return cache.emplace(c, v).first->second;
    };
    auto ok = [&](std::int64_t c) { return estimate(c).mean <= eps; };

    std::int64_t guess = budget.c_start;
    if (guess <= 0) {
        try {
            guess = metric == EmpiricalMetric::Delay
                        ? staff_delay_bivariate(rates, {eps}).c_int
                        : detail::ceil_servers(staff_abandon_fluid_bound(rates, {eps}).c_real);
        } catch (const std::exception&) {
            guess = detail::ceil_servers(effective_load(rates));
        }
    }
    guess = std::clamp<std::int64_t>(guess, 1, budget.c_max);

    // lo: largest known-infeasible (0 stands for "below 1"), hi: smallest known-feasible.
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    StaffingAnswer a;
    a.method = StaffingMethod::EmpiricalSim;
    a.regime_assumed = classify(with_servers(rates, static_cast<double>(guess))).tag;
    try {
        if (ok(guess)) {
            hi = guess;
            std::int64_t stride = 1;
            for (;;) {
                const std::int64_t cand = hi - stride;
                if (cand < 1) {
                    break;
                }
                if (!ok(cand)) {
                    lo = cand;
                    break;
                }
                hi = cand;
                stride *= 2;
            }
        } else {
            lo = guess;
            std::int64_t stride = 1;
            for (;;) {
                const std::int64_t cand = std::min(lo + stride, budget.c_max);
                if (cand == lo) {
                    throw BudgetExhausted{};
                }
                if (ok(cand)) {
                    hi = cand;
                    break;
                }
                lo = cand;
                stride *= 2;
            }
        }
        while (hi - lo > 1) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            if (ok(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    } catch (const BudgetExhausted&) {
        a.diagnostics.partial = true;
        a.diagnostics.notes.emplace_back("simulation budget exhausted before the search closed");
    }

    a.diagnostics.iterations = evaluations;
    a.diagnostics.bracket_lo = static_cast<double>(lo);
    if (hi > 0) {
        a.diagnostics.bracket_hi = static_cast<double>(hi);
        a.c_real = static_cast<double>(hi);
        a.c_int = hi;
        const MetricSummary& at = cache.at(hi);
        a.diagnostics.predicted_at_ceil = at.mean;
        a.diagnostics.ci_half_width = at.half_width;
        if (auto it = cache.find(hi - 1); it != cache.end()) {
            a.diagnostics.predicted_at_floor = it->second.mean;
        }
    } else {
        a.c_real = static_cast<double>(lo + 1);
        a.c_int = lo + 1;
    }
    a.regime_assumed = classify(with_servers(rates, a.c_real)).tag;
    return a;
}

}  // namespace erlangs
