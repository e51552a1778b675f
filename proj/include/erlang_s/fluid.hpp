#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace erlangs {

/// Fluid-scale content: q customers in system, s available servers.
struct FluidState {
    double q = 0.0;
    double s = 0.0;
};

struct Drift {
    double dq = 0.0;
    double ds = 0.0;
};

/// Steady state of the fluid ODE. The critical regime carries the
/// underloaded closed forms.
struct FixedPoint {
    double q_star = 0.0;
    double s_star = 0.0;
    Regime regime;
};

struct FluidTrajectory {
    std::vector<double> times;
    std::vector<FluidState> states;
    ModelParams params;
};

class FluidIntegrationError : public std::runtime_error {
public:
    explicit FluidIntegrationError(double t)
        : std::runtime_error("fluid integration produced a non-finite state at t=" + std::to_string(t)), time_(t)
    {
    }

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

[[nodiscard]] inline Drift drift(const FluidState& x, const ModelParams& m) noexcept
{
    const double busy = std::min(x.q, x.s);
    const double waiting = std::max(x.q - x.s, 0.0);
    return {m.lambda - m.mu * busy - m.theta * waiting, m.gamma * (m.c - x.s) - m.p * m.mu * busy};
}

[[nodiscard]] inline FixedPoint fixed_point(const ModelParams& m) noexcept
{
    const Regime regime = classify(m);
    if (regime.uses_underloaded_forms()) {
        return {m.lambda / m.mu, m.c - m.lambda * m.p / m.gamma, regime};
    }
    const double s_star = kappa(m).value * m.c;
    const double q_star = (m.lambda - m.mu * s_star) / m.theta + s_star;
    return {q_star, s_star, regime};
}

/// 0.01 over the fastest rate in the drift.
[[nodiscard]] inline double default_step(const ModelParams& m) noexcept
{
    return 0.01 / std::max({m.mu, m.gamma, m.theta});
}

/// Classical fixed-step RK4 on a uniform grid from 0 to horizon. The step is
/// shrunk slightly if needed so the grid lands exactly on the horizon. The
/// kink at q = s is stepped through without event location.
inline FluidTrajectory integrate(const ModelParams& m, FluidState init, double horizon, double step)
{
    if (!(step > 0.0) || !(horizon >= step)) {
        throw std::invalid_argument("integrate: need step > 0 and horizon >= step");
    }
    const auto n = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
    const double h = horizon / static_cast<double>(n);

    FluidTrajectory out;
    out.params = m;
    out.times.reserve(n + 1);
    out.states.reserve(n + 1);
    out.times.push_back(0.0);
    out.states.push_back(init);

    auto shifted = [](FluidState x, Drift d, double scale) { return FluidState{x.q + scale * d.dq, x.s + scale * d.ds}; };

    FluidState x = init;
    for (std::size_t i = 1; i <= n; ++i) {
        const Drift k1 = drift(x, m);
        const Drift k2 = drift(shifted(x, k1, 0.5 * h), m);
        const Drift k3 = drift(shifted(x, k2, 0.5 * h), m);
        const Drift k4 = drift(shifted(x, k3, h), m);
        x.q += h / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
        x.s += h / 6.0 * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds);
        const double t = static_cast<double>(i) * h;
        if (!std::isfinite(x.q) || !std::isfinite(x.s)) {
            throw FluidIntegrationError(t);
        }
        out.times.push_back(t);
        out.states.push_back(x);
    }
    return out;
}

}  // namespace erlangs
