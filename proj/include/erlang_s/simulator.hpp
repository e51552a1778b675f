#pragma once

// Exact event-driven simulation of the (Q, S) Markov chain.
//
// Direct method: one exponential holding time at the total rate, then a
// categorical draw of the event. A service completion sends the server to
// charge with a separate Bernoulli(p) draw. All clocks are exponential, so
// this is exact and O(1) per event.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace erlangs {

struct SimState {
    std::int64_t q = 0;  ///< customers in system
    std::int64_t s = 0;  ///< available (not charging) servers
    double clock = 0.0;
};

enum class EventTag : std::uint8_t {
    Arrival,
    Completion,          ///< server stays available
    CompletionToCharge,  ///< server leaves to charge
    Abandonment,
    ChargeReturn,
};

[[nodiscard]] inline std::string_view to_string(EventTag t) noexcept
{
    switch (t) {
    case EventTag::Arrival: return "arrival";
    case EventTag::Completion: return "completion";
    case EventTag::CompletionToCharge: return "completion_charge";
    case EventTag::Abandonment: return "abandonment";
    case EventTag::ChargeReturn: return "charge_return";
    }
    return "?";
}

struct StepOutcome {
    SimState next;
    EventTag tag = EventTag::Arrival;
    double holding_time = 0.0;
};

namespace detail {

inline std::int64_t integer_servers(double c)
{
    if (!(c >= 1.0) || c != std::floor(c) || c > 1e9) {
        throw std::invalid_argument("simulator: c must be a positive integer, got " + std::to_string(c));
    }
    return static_cast<std::int64_t>(c);
}

struct Rates4 {
    double arrival, service, abandon, charge_return, total;
};

inline Rates4 event_rates(const ModelParams& m, std::int64_t c, std::int64_t q, std::int64_t s) noexcept
{
    const auto busy = static_cast<double>(std::min(q, s));
    const auto waiting = static_cast<double>(std::max<std::int64_t>(q - s, 0));
    Rates4 r{m.lambda, m.mu * busy, m.theta * waiting, m.gamma * static_cast<double>(c - s), 0.0};
    r.total = r.arrival + r.service + r.abandon + r.charge_return;
    return r;
}

inline StepOutcome advance(const SimState& x, const ModelParams& m, std::int64_t c, Rng& rng) noexcept
{
    const Rates4 r = event_rates(m, c, x.q, x.s);
    StepOutcome out;
    out.holding_time = rng.exponential(r.total);
    out.next = x;
    out.next.clock = x.clock + out.holding_time;
    // Cumulative selection; if rounding leaves u past the last boundary the
    // last channel with a positive rate is taken.
    const double u = rng.uniform() * r.total;
    const double c1 = r.arrival;
    const double c2 = c1 + r.service;
    const double c3 = c2 + r.abandon;
    int channel = 0;
    if (u < c1) {
        channel = 0;
    } else if (u < c2) {
        channel = 1;
    } else if (u < c3) {
        channel = 2;
    } else if (r.charge_return > 0.0) {
        channel = 3;
    } else {
        channel = r.abandon > 0.0 ? 2 : (r.service > 0.0 ? 1 : 0);
    }
    switch (channel) {
    case 0:
        out.tag = EventTag::Arrival;
        ++out.next.q;
        break;
    case 1:
        --out.next.q;
        if (rng.bernoulli(m.p)) {
            out.tag = EventTag::CompletionToCharge;
            --out.next.s;
        } else {
            out.tag = EventTag::Completion;
        }
        break;
    case 2:
        out.tag = EventTag::Abandonment;
        --out.next.q;
        break;
    default:
        out.tag = EventTag::ChargeReturn;
        ++out.next.s;
        break;
    }
    return out;
}

}  // namespace detail

/// One transition of the chain from `state`.
inline StepOutcome step(const SimState& state, const ModelParams& m, Rng& rng)
{
    const std::int64_t c = detail::integer_servers(m.c);
    if (state.q < 0 || state.s < 0 || state.s > c) {
        throw std::invalid_argument("step: state outside q >= 0, 0 <= s <= c");
    }
    return detail::advance(state, m, c, rng);
}

struct StopRule {
    enum class Kind { Customers, Horizon };
    Kind kind = Kind::Customers;
    std::uint64_t customers = 0;
    double horizon = 0.0;

    static StopRule after_customers(std::uint64_t n) { return {Kind::Customers, n, 0.0}; }
    static StopRule until(double t) { return {Kind::Horizon, 0, t}; }
};

struct SimConfig {
    ModelParams params;
    StopRule stop = StopRule::after_customers(10000);
    double warmup = 0.2;  ///< fraction of customers (or of the horizon) excluded from statistics
    std::uint64_t seed = 0;
    std::uint64_t replication_index = 0;
    bool record_arrivals = false;  ///< keep the pre-arrival (q, s) of every arrival
    bool record_events = false;    ///< keep the full event log
    double grid_dt = 0.0;          ///< > 0: sample the path on t = 0, dt, 2dt, ...
    std::optional<SimState> initial;  ///< defaults to (0, c): empty system, every server available
};

inline void validate_config(const SimConfig& cfg)
{
    validate(cfg.params);
    detail::integer_servers(cfg.params.c);
    if (cfg.stop.kind == StopRule::Kind::Customers ? cfg.stop.customers < 1 : !(cfg.stop.horizon > 0.0)) {
        throw std::invalid_argument("SimConfig: need customers >= 1 or horizon > 0");
    }
    if (!(cfg.warmup >= 0.0 && cfg.warmup <= 0.9)) {
        throw std::invalid_argument("SimConfig: warmup must lie in [0, 0.9]");
    }
    if (cfg.grid_dt < 0.0 || !std::isfinite(cfg.grid_dt)) {
        throw std::invalid_argument("SimConfig: grid_dt must be >= 0");
    }
    if (cfg.initial) {
        const auto c = static_cast<std::int64_t>(cfg.params.c);
        if (cfg.initial->q < 0 || cfg.initial->s < 0 || cfg.initial->s > c) {
            throw std::invalid_argument("SimConfig: initial state outside q >= 0, 0 <= s <= c");
        }
    }
}

struct EventCounts {
    std::uint64_t arrivals = 0;
    std::uint64_t completions = 0;  ///< all service completions, charging or not
    std::uint64_t abandonments = 0;
    std::uint64_t charge_returns = 0;
    std::uint64_t charge_departures = 0;

    void record(EventTag t) noexcept
    {
        switch (t) {
        case EventTag::Arrival: ++arrivals; break;
        case EventTag::Completion: ++completions; break;
        case EventTag::CompletionToCharge:
            ++completions;
            ++charge_departures;
            break;
        case EventTag::Abandonment: ++abandonments; break;
        case EventTag::ChargeReturn: ++charge_returns; break;
        }
    }
};

/// Time integrals of Q, S, their products and of the excess (Q-S)+ and idle
/// (S-Q)+ capacity. Additive, so runs can be pooled.
struct RawMoments {
    double time = 0.0;
    double q = 0.0, s = 0.0, qq = 0.0, ss = 0.0, qs = 0.0;
    double excess = 0.0, excess2 = 0.0, idle = 0.0, idle2 = 0.0;

    void add(std::int64_t qi, std::int64_t si, double dt) noexcept
    {
        const auto qd = static_cast<double>(qi);
        const auto sd = static_cast<double>(si);
        const double e = std::max(qd - sd, 0.0);
        const double i = std::max(sd - qd, 0.0);
        time += dt;
        q += qd * dt;
        s += sd * dt;
        qq += qd * qd * dt;
        ss += sd * sd * dt;
        qs += qd * sd * dt;
        excess += e * dt;
        excess2 += e * e * dt;
        idle += i * dt;
        idle2 += i * i * dt;
    }

    RawMoments& operator+=(const RawMoments& o) noexcept
    {
        time += o.time;
        q += o.q;
        s += o.s;
        qq += o.qq;
        ss += o.ss;
        qs += o.qs;
        excess += o.excess;
        excess2 += o.excess2;
        idle += o.idle;
        idle2 += o.idle2;
        return *this;
    }
};

struct TimeAverages {
    double mean_q = 0.0, mean_s = 0.0;
    double var_q = 0.0, var_s = 0.0, cov_qs = 0.0;
    double mean_excess = 0.0, var_excess = 0.0;
    double mean_idle = 0.0, var_idle = 0.0;
};

[[nodiscard]] inline TimeAverages averages(const RawMoments& r) noexcept
{
    TimeAverages a;
    if (r.time <= 0.0) {
        return a;
    }
    const double inv = 1.0 / r.time;
    a.mean_q = r.q * inv;
    a.mean_s = r.s * inv;
    a.var_q = r.qq * inv - a.mean_q * a.mean_q;
    a.var_s = r.ss * inv - a.mean_s * a.mean_s;
    a.cov_qs = r.qs * inv - a.mean_q * a.mean_s;
    a.mean_excess = r.excess * inv;
    a.var_excess = r.excess2 * inv - a.mean_excess * a.mean_excess;
    a.mean_idle = r.idle * inv;
    a.var_idle = r.idle2 * inv - a.mean_idle * a.mean_idle;
    return a;
}

struct TrajectoryPoint {
    double t = 0.0;
    double q = 0.0;
    double s = 0.0;
};

struct EventRecord {
    double t = 0.0;
    EventTag tag = EventTag::Arrival;
    std::int64_t q = 0;  ///< state after the event
    std::int64_t s = 0;
};

struct EventLog {
    SimState initial;
    std::vector<EventRecord> events;
    double end_time = 0.0;
};

struct ArrivalSnapshot {
    double t = 0.0;
    std::int64_t q = 0;  ///< seen by the arrival, before it joins
    std::int64_t s = 0;
};

struct SimResult {
    std::uint64_t seed = 0;
    std::uint64_t replication_index = 0;
    EventCounts counts;         ///< whole run
    EventCounts window_counts;  ///< post-warmup
    std::uint64_t delay_events = 0;  ///< post-warmup arrivals that found q >= s
    RawMoments window_moments;
    TimeAverages time_averages;
    double abandonment_fraction = 0.0;
    double delay_probability = 0.0;
    double warmup_end = 0.0;
    double end_time = 0.0;
    SimState initial;
    SimState final_state;
    bool servers_conserved = true;  ///< s + charging == c after every event
    std::vector<ArrivalSnapshot> arrivals;
    std::vector<TrajectoryPoint> trajectory;
    std::optional<EventLog> event_log;

    [[nodiscard]] bool counts_conserved() const noexcept
    {
        return static_cast<std::int64_t>(counts.arrivals) - static_cast<std::int64_t>(counts.completions) -
                   static_cast<std::int64_t>(counts.abandonments) ==
               final_state.q - initial.q;
    }

    /// charge departures - returns = growth of the charging pool
    [[nodiscard]] bool charging_conserved() const noexcept
    {
        return static_cast<std::int64_t>(counts.charge_departures) - static_cast<std::int64_t>(counts.charge_returns) ==
               initial.s - final_state.s;
    }

    /// |arrival rate - (completion rate + abandonment rate)| / λ over the window.
    [[nodiscard]] double flow_imbalance(double lambda) const noexcept
    {
        const double t = end_time - warmup_end;
        if (t <= 0.0) {
            return 0.0;
        }
        const double in = static_cast<double>(window_counts.arrivals);
        const double out = static_cast<double>(window_counts.completions + window_counts.abandonments);
        return std::abs(in - out) / t / lambda;
    }
};

/// One replication. Deterministic in (seed, replication_index, config).
inline SimResult run(const SimConfig& cfg)
{
    validate_config(cfg);
    const ModelParams& m = cfg.params;
    const std::int64_t c = detail::integer_servers(m.c);

    SimResult res;
    res.seed = cfg.seed;
    res.replication_index = cfg.replication_index;
    res.initial = cfg.initial.value_or(SimState{0, c, 0.0});
    res.initial.clock = 0.0;
    Rng rng(stream_seed(cfg.seed, cfg.replication_index));

    const bool by_customers = cfg.stop.kind == StopRule::Kind::Customers;
    const auto warmup_customers =
        by_customers ? static_cast<std::uint64_t>(std::floor(cfg.warmup * static_cast<double>(cfg.stop.customers))) : 0;
    bool in_window = by_customers ? warmup_customers == 0 : cfg.warmup == 0.0;
    const double warmup_time = by_customers ? 0.0 : cfg.warmup * cfg.stop.horizon;

    if (cfg.record_events) {
        res.event_log = EventLog{res.initial, {}, 0.0};
    }

    SimState x = res.initial;
    std::int64_t charging = c - x.s;
    double next_grid = 0.0;
    std::uint64_t grid_index = 0;

    auto emit_grid_until = [&](double t_end, bool inclusive) {
        if (cfg.grid_dt <= 0.0) {
            return;
        }
        while (inclusive ? next_grid <= t_end : next_grid < t_end) {
            res.trajectory.push_back({next_grid, static_cast<double>(x.q), static_cast<double>(x.s)});
            next_grid = static_cast<double>(++grid_index) * cfg.grid_dt;
        }
    };

    for (;;) {
        StepOutcome o = detail::advance(x, m, c, rng);
        double t_next = o.next.clock;
        const bool past_horizon = !by_customers && t_next >= cfg.stop.horizon;
        if (past_horizon) {
            t_next = cfg.stop.horizon;
        }

        // The current state holds on [x.clock, t_next).
        emit_grid_until(t_next, false);
        if (in_window) {
            res.window_moments.add(x.q, x.s, t_next - x.clock);
        } else if (!by_customers && t_next > warmup_time) {
            res.window_moments.add(x.q, x.s, t_next - warmup_time);
            in_window = true;
            res.warmup_end = warmup_time;
        }
        if (past_horizon) {
            x.clock = t_next;
            break;
        }

        if (o.tag == EventTag::Arrival) {
            if (cfg.record_arrivals) {
                res.arrivals.push_back({t_next, x.q, x.s});
            }
            if (in_window && x.q >= x.s) {
                ++res.delay_events;
            }
        }
        res.counts.record(o.tag);
        if (in_window) {
            res.window_counts.record(o.tag);
        }
        if (o.tag == EventTag::CompletionToCharge) {
            ++charging;
        } else if (o.tag == EventTag::ChargeReturn) {
            --charging;
        }
        x = o.next;
        if (x.s + charging != c) {
            res.servers_conserved = false;
        }
        if (res.event_log) {
            res.event_log->events.push_back({x.clock, o.tag, x.q, x.s});
        }

        if (by_customers && o.tag == EventTag::Arrival) {
            if (!in_window && res.counts.arrivals == warmup_customers) {
                in_window = true;
                res.warmup_end = x.clock;
            }
            if (res.counts.arrivals >= cfg.stop.customers) {
                break;
            }
        }
    }

    res.end_time = x.clock;
    emit_grid_until(res.end_time, true);
    res.final_state = x;
    if (res.event_log) {
        res.event_log->end_time = res.end_time;
    }
    res.time_averages = averages(res.window_moments);
    if (res.window_counts.arrivals > 0) {
        const auto a = static_cast<double>(res.window_counts.arrivals);
        res.abandonment_fraction = static_cast<double>(res.window_counts.abandonments) / a;
        res.delay_probability = static_cast<double>(res.delay_events) / a;
    }
    return res;
}

/// Piecewise-constant (right-continuous) sampling of a logged path at
/// t = 0, dt, 2dt, ... up to the log's end time.
inline std::vector<TrajectoryPoint> resample(const EventLog& log, double dt)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("resample: dt must be > 0");
    }
    std::vector<TrajectoryPoint> out;
    std::int64_t q = log.initial.q;
    std::int64_t s = log.initial.s;
    std::size_t next_event = 0;
    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (t > log.end_time) {
            break;
        }
        while (next_event < log.events.size() && log.events[next_event].t <= t) {
            q = log.events[next_event].q;
            s = log.events[next_event].s;
            ++next_event;
        }
        out.push_back({t, static_cast<double>(q), static_cast<double>(s)});
    }
    return out;
}

struct RollingMoment {
    double t = 0.0;
    double var_q = 0.0;
    double var_s = 0.0;
    double cov_qs = 0.0;
};

/// Expanding-window sample moments of a regularly sampled path, starting at
/// index `first`.
inline std::vector<RollingMoment> rolling_moments(const std::vector<TrajectoryPoint>& series, std::size_t first = 0)
{
    std::vector<RollingMoment> out;
    double n = 0.0, mq = 0.0, ms = 0.0, m2q = 0.0, m2s = 0.0, cqs = 0.0;
    for (std::size_t i = first; i < series.size(); ++i) {
        const auto& pt = series[i];
        n += 1.0;
        const double dq = pt.q - mq;
        const double ds = pt.s - ms;
        mq += dq / n;
        ms += ds / n;
        m2q += dq * (pt.q - mq);
        m2s += ds * (pt.s - ms);
        cqs += dq * (pt.s - ms);
        out.push_back({pt.t, m2q / n, m2s / n, cqs / n});
    }
    return out;
}

struct MetricSummary {
    double mean = 0.0;
    std::optional<double> std;         ///< sample std across replications, R >= 2
    std::optional<double> half_width;  ///< 1.96 std / sqrt(R)
};

[[nodiscard]] inline MetricSummary summarize(const std::vector<double>& xs)
{
    MetricSummary out;
    if (xs.empty()) {
        return out;
    }
    double sum = 0.0;
    for (double v : xs) {
        sum += v;
    }
    const auto n = static_cast<double>(xs.size());
    out.mean = sum / n;
    if (xs.size() >= 2) {
        double ss = 0.0;
        for (double v : xs) {
            ss += (v - out.mean) * (v - out.mean);
        }
        out.std = std::sqrt(ss / (n - 1.0));
        out.half_width = 1.96 * *out.std / std::sqrt(n);
    }
    return out;
}

struct ReplicationSummary {
    std::uint64_t seed = 0;
    std::size_t replications = 0;
    MetricSummary mean_q, mean_s, var_q, var_s, cov_qs;
    MetricSummary mean_excess, var_excess, mean_idle, var_idle;
    MetricSummary delay_probability, abandonment_fraction;
    TimeAverages pooled;  ///< moments of all post-warmup time pooled across runs
    EventCounts counts;   ///< summed over runs
    bool counts_conserved = true;
    bool servers_conserved = true;
    double max_flow_imbalance = 0.0;
    std::vector<TrajectoryPoint> mean_trajectory;  ///< pointwise mean of the sampled paths

    template <class F>
    void for_each_metric(F&& f) const
    {
        f("mean_q", mean_q);
        f("mean_s", mean_s);
        f("var_q", var_q);
        f("var_s", var_s);
        f("cov_qs", cov_qs);
        f("mean_excess", mean_excess);
        f("var_excess", var_excess);
        f("mean_idle", mean_idle);
        f("var_idle", var_idle);
        f("delay_probability", delay_probability);
        f("abandonment_fraction", abandonment_fraction);
    }
};

/// Runs `jobs` workers over indices 0..count-1; results land at their index.
template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& body)
{
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                if (failed.load()) {
                    return;
                }
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

/// Aggregates finished replications in index order.
inline ReplicationSummary aggregate(const std::vector<SimResult>& runs, double lambda)
{
    ReplicationSummary out;
    out.replications = runs.size();
    if (!runs.empty()) {
        out.seed = runs.front().seed;
    }
    std::vector<double> col(runs.size());
    auto fill = [&](MetricSummary& dst, auto proj) {
        for (std::size_t i = 0; i < runs.size(); ++i) {
            col[i] = proj(runs[i]);
        }
        dst = summarize(col);
    };
    fill(out.mean_q, [](const SimResult& r) { return r.time_averages.mean_q; });
    fill(out.mean_s, [](const SimResult& r) { return r.time_averages.mean_s; });
    fill(out.var_q, [](const SimResult& r) { return r.time_averages.var_q; });
    fill(out.var_s, [](const SimResult& r) { return r.time_averages.var_s; });
    fill(out.cov_qs, [](const SimResult& r) { return r.time_averages.cov_qs; });
    fill(out.mean_excess, [](const SimResult& r) { return r.time_averages.mean_excess; });
    fill(out.var_excess, [](const SimResult& r) { return r.time_averages.var_excess; });
    fill(out.mean_idle, [](const SimResult& r) { return r.time_averages.mean_idle; });
    fill(out.var_idle, [](const SimResult& r) { return r.time_averages.var_idle; });
    fill(out.delay_probability, [](const SimResult& r) { return r.delay_probability; });
    fill(out.abandonment_fraction, [](const SimResult& r) { return r.abandonment_fraction; });

    RawMoments pooled;
    for (const auto& r : runs) {
        pooled += r.window_moments;
        out.counts.arrivals += r.counts.arrivals;
        out.counts.completions += r.counts.completions;
        out.counts.abandonments += r.counts.abandonments;
        out.counts.charge_returns += r.counts.charge_returns;
        out.counts.charge_departures += r.counts.charge_departures;
        out.counts_conserved = out.counts_conserved && r.counts_conserved() && r.charging_conserved();
        out.servers_conserved = out.servers_conserved && r.servers_conserved;
        out.max_flow_imbalance = std::max(out.max_flow_imbalance, r.flow_imbalance(lambda));
    }
    out.pooled = averages(pooled);

    // Paths may differ in length under a customer-count stop; average over
    // the common prefix.
    if (!runs.empty() && !runs.front().trajectory.empty()) {
        std::size_t len = runs.front().trajectory.size();
        for (const auto& r : runs) {
            len = std::min(len, r.trajectory.size());
        }
        out.mean_trajectory.resize(len);
        for (std::size_t k = 0; k < len; ++k) {
            TrajectoryPoint acc{runs.front().trajectory[k].t, 0.0, 0.0};
            for (const auto& r : runs) {
                acc.q += r.trajectory[k].q;
                acc.s += r.trajectory[k].s;
            }
            acc.q /= static_cast<double>(runs.size());
            acc.s /= static_cast<double>(runs.size());
            out.mean_trajectory[k] = acc;
        }
    }
    return out;
}

/// R independent replications (indices 0..R-1) on up to `jobs` threads.
/// The summary does not depend on `jobs` or completion order.
inline ReplicationSummary replicate(const SimConfig& base, std::size_t replications, unsigned jobs = 1,
                                    std::vector<SimResult>* keep_runs = nullptr)
{
    if (replications < 1) {
        throw std::invalid_argument("replicate: need at least one replication");
    }
    validate_config(base);
    std::vector<SimResult> runs(replications);
    parallel_for(replications, jobs, [&](std::size_t i) {
        SimConfig cfg = base;
        cfg.replication_index = i;
        runs[i] = run(cfg);
    });
    ReplicationSummary out = aggregate(runs, base.params.lambda);
    out.seed = base.seed;
    if (keep_runs) {
        *keep_runs = std::move(runs);
    }
    return out;
}

}  // namespace erlangs
