#pragma once

// Self-check suite: closed-form moments against the generic Lyapunov solve,
// fluid fixed points, and the simulator against the truncated-CTMC oracle.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctmc_oracle.hpp"
#include "diffusion.hpp"
#include "fluid.hpp"
#include "probability.hpp"
#include "rng.hpp"
#include "simulator.hpp"

namespace erlangs {

/// Uniform draw of rates with c placed strictly inside the requested regime
/// (Critical is not drawn).
inline ModelParams random_params(Rng& rng, RegimeTag regime)
{
    auto unif = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    ModelParams m;
    m.lambda = unif(5.0, 200.0);
    m.mu = unif(0.2, 10.0);
    m.theta = unif(0.2, 5.0);
    m.p = unif(0.05, 0.95);
    m.gamma = unif(0.05, 10.0);
    const double load = effective_load(m.rates());
    m.c = regime == RegimeTag::Overloaded ? load * unif(0.3, 0.95) : load * unif(1.05, 2.0);
    return m;
}

using SigmaBuilder = std::function<Matrix2(const ModelParams&, const FixedPoint&)>;

/// Σ assembled from the primitive event table.
inline Matrix2 event_table_sigma(const ModelParams& m, const FixedPoint& fp)
{
    return assemble_sigma(event_table(m, fp));
}

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationOptions {
    int draws = 1000;  ///< random draws per regime for the Lyapunov check
    std::uint64_t seed = 1;
    std::uint64_t customers = 50000;
    std::size_t replications = 20;
    unsigned jobs = 1;
    double q_max_factor = 40.0;  ///< oracle truncation q_max = factor * (λ/θ + c)
    SigmaBuilder sigma = event_table_sigma;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    [[nodiscard]] bool passed() const noexcept
    {
        for (const auto& c : checks) {
            if (!c.passed) {
                return false;
            }
        }
        return true;
    }
};

/// Worst relative error of the closed forms against the Lyapunov solution
/// with Σ from `sigma`, over random draws of one regime.
struct LyapunovSweep {
    double worst_rel = 0.0;
    double worst_residual = 0.0;  ///< ‖JV + VJᵀ + Σ‖ / ‖Σ‖, max norm
    int draws = 0;
};

inline LyapunovSweep lyapunov_sweep(RegimeTag regime, int draws, std::uint64_t seed, const SigmaBuilder& sigma)
{
    Rng rng(stream_seed(seed, regime == RegimeTag::Overloaded ? 1 : 0));
    LyapunovSweep out;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); };
    for (int i = 0; i < draws; ++i) {
        const ModelParams m = random_params(rng, regime);
        const FixedPoint fp = fixed_point(m);
        const Matrix2 j = jacobian(m, fp);
        const Matrix2 s = sigma(m, fp);
        const Matrix2 v = solve_lyapunov(j, s);
        const double scale = v.max_abs();
        double v_qq = 0.0;
        double v_ss = 0.0;
        double v_qs = 0.0;
        if (regime == RegimeTag::Overloaded) {
            const double drain = m.gamma + m.p * m.mu;
            v_ss = m.c * m.gamma * m.p * m.mu / (drain * drain);
            v_qs = v_ss * (m.gamma + m.theta + m.p * m.mu - m.mu) / (m.theta + drain);
            v_qq = (m.lambda - (m.mu - m.theta) * v_qs) / m.theta;
        } else {
            v_qq = m.lambda / m.mu;
            v_ss = m.lambda * m.p / m.gamma;
        }
        // Cov can vanish; measure it against the matrix scale.
        out.worst_rel = std::max({out.worst_rel, rel(v.a11, v_qq), rel(v.a22, v_ss),
                                  std::abs(v.a12 - v_qs) / std::max(scale, 1e-300)});
        out.worst_residual =
            std::max(out.worst_residual, lyapunov_residual(j, v, s).max_abs() / std::max(s.max_abs(), 1e-300));
        ++out.draws;
    }
    return out;
}

struct OracleComparison {
    ModelParams params;
    StationaryMetrics exact;
    ReplicationSummary sim;
    double z_delay = 0.0;    ///< |sim - exact| / SE
    double z_abandon = 0.0;
};

inline OracleComparison compare_with_oracle(const ModelParams& m, const ValidationOptions& opt)
{
    OracleComparison out;
    out.params = m;
    const auto q_max = static_cast<std::int64_t>(std::ceil(opt.q_max_factor * (m.lambda / m.theta + m.c)));
    out.exact = stationary_oracle(m, q_max);
    SimConfig cfg;
    cfg.params = m;
    cfg.stop = StopRule::after_customers(opt.customers);
    cfg.seed = opt.seed;
    out.sim = replicate(cfg, opt.replications, opt.jobs);
    const double root_r = std::sqrt(static_cast<double>(opt.replications));
    auto z = [&](const MetricSummary& s, double exact) {
        const double se = s.std.value_or(0.0) / root_r;
        return se > 0.0 ? std::abs(s.mean - exact) / se : (s.mean == exact ? 0.0 : INFINITY);
    };
    out.z_delay = z(out.sim.delay_probability, out.exact.delay_probability);
    out.z_abandon = z(out.sim.abandonment_fraction, out.exact.abandonment_fraction);
    return out;
}

/// Small configurations the dense oracle handles comfortably.
inline std::vector<ModelParams> oracle_configs()
{
    return {{2.0, 1.0, 1.0, 0.5, 1.0, 2.0}, {3.0, 1.0, 0.5, 0.3, 0.5, 4.0}, {4.0, 2.0, 1.5, 0.2, 2.0, 3.0}};
}

inline ValidationReport run_validation(const ValidationOptions& opt = {})
{
    ValidationReport rep;
    auto add = [&](std::string name, bool ok, std::string detail) {
        rep.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return std::string(buf);
    };

    for (RegimeTag regime : {RegimeTag::Underloaded, RegimeTag::Overloaded}) {
        const std::string tag(to_string(regime));
        try {
            const LyapunovSweep s = lyapunov_sweep(regime, opt.draws, opt.seed, opt.sigma);
            add("lyapunov_closed_form_" + tag, s.worst_rel <= 1e-9,
                std::to_string(s.draws) + " draws, worst relative error " + num(s.worst_rel));
            add("lyapunov_residual_" + tag, s.worst_residual < 1e-10,
                "worst residual / |Sigma| " + num(s.worst_residual));
        } catch (const std::exception& e) {
            add("lyapunov_closed_form_" + tag, false, e.what());
        }
    }

    struct FpCase {
        ModelParams m;
        double q, s;
        RegimeTag tag;
    };
    const FpCase cases[] = {{{100, 5, 1, 0.1, 0.5, 100}, 20.0, 80.0, RegimeTag::Underloaded},
                            {{100, 1, 1, 0.5, 1, 100}, 100.0, 200.0 / 3.0, RegimeTag::Overloaded},
                            {{100, 1, 1, 0.5, 1, 150}, 100.0, 100.0, RegimeTag::Critical}};
    bool fp_ok = true;
    std::string fp_detail;
    for (const auto& c : cases) {
        const FixedPoint fp = fixed_point(c.m);
        const bool ok = std::abs(fp.q_star - c.q) <= 1e-9 * c.q && std::abs(fp.s_star - c.s) <= 1e-9 * c.s &&
                        fp.regime.tag == c.tag;
        fp_ok = fp_ok && ok;
        fp_detail += "(" + num(fp.q_star) + ", " + num(fp.s_star) + ", " + std::string(to_string(fp.regime.tag)) + ") ";
    }
    add("fluid_fixed_points", fp_ok, fp_detail);

    bool inv_ok = true;
    for (double eps : {1e-6, 1e-3, 0.01, 0.05, 0.5, 0.9}) {
        inv_ok = inv_ok && std::abs(Phi_bar(Phi_bar_inv(eps)) - eps) <= 1e-9 * std::max(eps, 1e-3);
    }
    add("normal_quantile_roundtrip", inv_ok, "six-point grid");

    for (const ModelParams& m : oracle_configs()) {
        const std::string name = "ctmc_oracle_l" + num(m.lambda) + "_c" + num(m.c);
        try {
            const OracleComparison cmp = compare_with_oracle(m, opt);
            add(name, cmp.z_delay <= 3.0 && cmp.z_abandon <= 3.0,
                "delay " + num(cmp.sim.delay_probability.mean) + " vs " + num(cmp.exact.delay_probability) + " (" +
                    num(cmp.z_delay) + " SE), abandonment " + num(cmp.sim.abandonment_fraction.mean) + " vs " +
                    num(cmp.exact.abandonment_fraction) + " (" + num(cmp.z_abandon) + " SE)");
            add(name + "_conservation",
                cmp.sim.counts_conserved && cmp.sim.servers_conserved && cmp.sim.max_flow_imbalance <= 0.01,
                "max flow imbalance " + num(cmp.sim.max_flow_imbalance));
        } catch (const std::exception& e) {
            add(name, false, e.what());
        }
    }
    return rep;
}

}  // namespace erlangs
