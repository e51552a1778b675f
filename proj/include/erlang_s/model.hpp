#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace erlangs {

/// Primitive rates of the queue without the server count. Staffing solvers
/// treat c as the unknown and work from this.
struct Rates {
    double lambda = 0.0;  ///< arrival rate
    double mu = 0.0;      ///< service rate per busy server
    double theta = 0.0;   ///< abandonment rate per waiting customer
    double p = 0.0;       ///< probability a completing server leaves to charge
    double gamma = 0.0;   ///< charge-completion rate per charging server
};

/// The six model primitives. c is real-valued for analytics; the simulator
/// requires it to be a positive integer.
struct ModelParams {
    double lambda = 0.0;
    double mu = 0.0;
    double theta = 0.0;
    double p = 0.0;
    double gamma = 0.0;
    double c = 0.0;

    [[nodiscard]] Rates rates() const { return {lambda, mu, theta, p, gamma}; }
};

[[nodiscard]] inline ModelParams with_servers(const Rates& r, double c)
{
    return {r.lambda, r.mu, r.theta, r.p, r.gamma, c};
}

struct FieldViolation {
    std::string field;
    std::string constraint;
    double value = 0.0;
};

class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(std::vector<FieldViolation> violations)
        : std::invalid_argument(format(violations)), violations_(std::move(violations))
    {
    }

    [[nodiscard]] const std::vector<FieldViolation>& violations() const noexcept { return violations_; }

private:
    static std::string format(const std::vector<FieldViolation>& vs)
    {
        std::string out = "invalid model parameters:";
        for (const auto& v : vs) {
            out += " " + v.field + " (" + v.constraint + ", got " + std::to_string(v.value) + ");";
        }
        return out;
    }

    std::vector<FieldViolation> violations_;
};

namespace detail {

inline void require_positive(std::vector<FieldViolation>& out, std::string_view name, double v)
{
    if (!std::isfinite(v) || !(v > 0.0)) {
        out.push_back({std::string(name), "must be finite and > 0", v});
    }
}

inline std::vector<FieldViolation> rate_violations(const Rates& r)
{
    std::vector<FieldViolation> out;
    require_positive(out, "lambda", r.lambda);
    require_positive(out, "mu", r.mu);
    require_positive(out, "theta", r.theta);
    if (!std::isfinite(r.p) || r.p < 0.0 || r.p > 1.0) {
        out.push_back({"p", "must lie in [0,1]", r.p});
    }
    require_positive(out, "gamma", r.gamma);
    if (out.empty()) {
        if (!std::isfinite(r.lambda / r.mu)) {
            out.push_back({"lambda/mu", "offered load must be finite", r.lambda / r.mu});
        }
        if (!std::isfinite(r.lambda * r.p / r.gamma)) {
            out.push_back({"lambda*p/gamma", "charging load must be finite", r.lambda * r.p / r.gamma});
        }
    }
    return out;
}

}  // namespace detail

/// Checks every field and reports all violations at once.
inline Rates validate_rates(const Rates& r)
{
    auto vs = detail::rate_violations(r);
    if (!vs.empty()) {
        throw ParameterError(std::move(vs));
    }
    return r;
}

inline ModelParams validate(double lambda, double mu, double theta, double p, double gamma, double c)
{
    auto vs = detail::rate_violations({lambda, mu, theta, p, gamma});
    detail::require_positive(vs, "c", c);
    if (!vs.empty()) {
        throw ParameterError(std::move(vs));
    }
    return {lambda, mu, theta, p, gamma, c};
}

inline ModelParams validate(const ModelParams& m)
{
    return validate(m.lambda, m.mu, m.theta, m.p, m.gamma, m.c);
}

enum class RegimeTag { Underloaded, Overloaded, Critical };

struct Regime {
    RegimeTag tag = RegimeTag::Underloaded;
    double load_margin = 0.0;  ///< c - (λ/μ + λp/γ), in servers

    /// Critical is treated as underloaded by every closed form.
    [[nodiscard]] bool uses_underloaded_forms() const noexcept { return tag != RegimeTag::Overloaded; }
};

[[nodiscard]] inline std::string_view to_string(RegimeTag t) noexcept
{
    switch (t) {
    case RegimeTag::Underloaded: return "UL";
    case RegimeTag::Overloaded: return "OL";
    case RegimeTag::Critical: return "critical";
    }
    return "?";
}

/// Effective demand in servers: busy servers plus servers away charging.
[[nodiscard]] inline double effective_load(const Rates& r) noexcept
{
    return r.lambda / r.mu + r.lambda * r.p / r.gamma;
}

[[nodiscard]] inline Regime classify(const ModelParams& m) noexcept
{
    const double margin = m.c - effective_load(m.rates());
    RegimeTag tag = RegimeTag::Critical;
    if (margin > 0.0) {
        tag = RegimeTag::Underloaded;
    } else if (margin < 0.0) {
        tag = RegimeTag::Overloaded;
    }
    return {tag, margin};
}

/// Long-run fraction of servers available in overload, γ/(γ+pμ).
struct Kappa {
    double value = 1.0;
};

[[nodiscard]] inline Kappa kappa(const Rates& r) noexcept
{
    return {r.gamma / (r.gamma + r.p * r.mu)};
}

[[nodiscard]] inline Kappa kappa(const ModelParams& m) noexcept { return kappa(m.rates()); }

}  // namespace erlangs
