#pragma once

// Command-line front end. Everything except main() lives here so the tests
// can drive the commands in-process.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "erlang_s/diffusion.hpp"
#include "erlang_s/fluid.hpp"
#include "erlang_s/model.hpp"
#include "erlang_s/simulator.hpp"
#include "erlang_s/staffing.hpp"
#include "erlang_s/tables.hpp"
#include "erlang_s/validation.hpp"

namespace erlangs::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kValidationFailed = 1, kUsage = 2, kIo = 3 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------- output

/// Relative paths resolve against $ERLANGS_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output(const std::string& path)
{
    std::filesystem::path p(path);
    if (p.is_relative()) {
        if (const char* dir = std::getenv("ERLANGS_OUTPUT_DIR"); dir && *dir) {
            return std::filesystem::path(dir) / p;
        }
    }
    return p;
}

/// Writes to a sibling temp file, then renames over the target.
inline void write_atomic(const std::filesystem::path& target, const std::string& content)
{
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        f << content;
        f.flush();
        if (!f) {
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename onto " + target.string());
    }
}

/// Empty path: stdout.
inline void emit(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty()) {
        out << content;
        return;
    }
    write_atomic(resolve_output(path), content);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- json

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

inline json matrix_json(const Matrix2& m) { return json::array({{m.a11, m.a12}, {m.a21, m.a22}}); }

inline json params_json(const ModelParams& m)
{
    return {{"lambda", m.lambda}, {"mu", m.mu}, {"theta", m.theta}, {"p", m.p}, {"gamma", m.gamma}, {"c", m.c}};
}

inline json rates_json(const Rates& r)
{
    return {{"lambda", r.lambda}, {"mu", r.mu}, {"theta", r.theta}, {"p", r.p}, {"gamma", r.gamma}};
}

inline json fixed_point_json(const FixedPoint& fp)
{
    return {{"q_star", fp.q_star},
            {"s_star", fp.s_star},
            {"regime", std::string(to_string(fp.regime.tag))},
            {"load_margin", fp.regime.load_margin}};
}

inline json moments_json(const ModelParams& m, const MomentSet& ms)
{
    json j = {{"params", params_json(m)}};
    j.update(fixed_point_json(ms.fixed_point));
    j["J"] = matrix_json(ms.j);
    j["Sigma"] = matrix_json(ms.sigma);
    j["v_qq"] = ms.v_qq;
    j["v_ss"] = ms.v_ss;
    j["v_qs"] = ms.v_qs;
    j["v_qq_coupled"] = ms.v_qq_coupled;
    j["V_lyapunov"] = matrix_json(ms.lyapunov);
    try {
        j["delay_probability"] = delay_probability(ms.fixed_point.q_star, ms.fixed_point.s_star, ms.v_qq, ms.v_ss,
                                                   ms.v_qs);
        const ExcessMoments ex =
            excess_moments(ms.fixed_point.q_star, ms.fixed_point.s_star, ms.v_qq, ms.v_ss, ms.v_qs);
        j["excess"] = {{"mean_excess", ex.mean_excess},
                       {"var_excess", ex.var_excess},
                       {"mean_idle", ex.mean_idle},
                       {"var_idle", ex.var_idle}};
    } catch (const std::domain_error& e) {
        j["delay_probability"] = nullptr;
        j["excess"] = nullptr;
        j["diagnostics_excess"] = e.what();
    }
    j["diagnostics"] = ms.diagnostics;
    return j;
}

inline json answer_json(const StaffingAnswer& a)
{
    const auto& d = a.diagnostics;
    json alts = json::array();
    for (const auto& alt : a.alternatives) {
        alts.push_back({{"c_real", alt.c_real},
                        {"regime", std::string(to_string(alt.regime_assumed))},
                        {"regime_consistent", alt.regime_consistent}});
    }
    return {{"method", std::string(to_string(a.method))},
            {"c_real", a.c_real},
            {"c_int", a.c_int},
            {"regime", std::string(to_string(a.regime_assumed))},
            {"diagnostics",
             {{"predicted_at_ceil", optional_json(d.predicted_at_ceil)},
              {"predicted_at_floor", optional_json(d.predicted_at_floor)},
              {"regime_consistent", d.regime_consistent},
              {"iterations", d.iterations},
              {"bracket", json::array({optional_json(d.bracket_lo), optional_json(d.bracket_hi)})},
              {"ci_half_width", optional_json(d.ci_half_width)},
              {"partial", d.partial},
              {"notes", d.notes}}},
            {"alternatives", alts}};
}

inline json metric_json(const MetricSummary& s)
{
    json j = {{"mean", s.mean}};
    if (s.std) {
        j["std"] = *s.std;
        j["half_width"] = *s.half_width;
    }
    return j;
}

inline json summary_json(const SimConfig& cfg, std::size_t reps, const ReplicationSummary& s)
{
    json metrics = json::object();
    s.for_each_metric([&](const char* name, const MetricSummary& m) { metrics[name] = metric_json(m); });
    const TimeAverages& p = s.pooled;
    json stop = cfg.stop.kind == StopRule::Kind::Customers ? json{{"customers", cfg.stop.customers}}
                                                           : json{{"horizon", cfg.stop.horizon}};
    return {{"seed", cfg.seed},
            {"replications", reps},
            {"params", params_json(cfg.params)},
            {"stop", stop},
            {"warmup", cfg.warmup},
            {"metrics", metrics},
            {"pooled",
             {{"mean_q", p.mean_q},
              {"mean_s", p.mean_s},
              {"var_q", p.var_q},
              {"var_s", p.var_s},
              {"cov_qs", p.cov_qs},
              {"mean_excess", p.mean_excess},
              {"var_excess", p.var_excess},
              {"mean_idle", p.mean_idle},
              {"var_idle", p.var_idle}}},
            {"counts",
             {{"arrivals", s.counts.arrivals},
              {"completions", s.counts.completions},
              {"abandonments", s.counts.abandonments},
              {"charge_departures", s.counts.charge_departures},
              {"charge_returns", s.counts.charge_returns}}},
            {"conservation",
             {{"counts_conserved", s.counts_conserved},
              {"servers_conserved", s.servers_conserved},
              {"max_flow_imbalance", s.max_flow_imbalance}}},
            {"fluid", fixed_point_json(fixed_point(cfg.params))}};
}

inline json violations_json(const ParameterError& e)
{
    json v = json::array();
    for (const auto& f : e.violations()) {
        v.push_back({{"field", f.field}, {"constraint", f.constraint}, {"value", number_or_null(f.value)}});
    }
    return {{"error", "invalid parameters"}, {"violations", v}};
}

// ---------------------------------------------------------------- commands

inline json cmd_fixed_point(const ModelParams& m)
{
    validate(m);
    return fixed_point_json(fixed_point(m));
}

inline json cmd_moments(const ModelParams& m)
{
    validate(m);
    return moments_json(m, stationary_moments(m));
}

inline json cmd_thresholds(double lambda, double theta, double p, double gamma, double c)
{
    validate(lambda, 1.0, theta, p, gamma, c);
    const CovSignThresholds t = covariance_sign_thresholds(lambda, theta, p, gamma, c);
    return {{"mu_neg", number_or_null(t.mu_neg)},
            {"mu_ol", number_or_null(t.mu_ol)},
            {"window_nonempty", t.window_nonempty}};
}

struct FluidOptions {
    std::optional<double> q0;
    std::optional<double> s0;  ///< defaults to c
    std::optional<double> horizon;  ///< defaults to 50 / min(μ, θ, γ)
    std::optional<double> step;
    std::size_t every = 1;
};

inline std::string cmd_fluid(const ModelParams& m, const FluidOptions& o)
{
    validate(m);
    const double horizon = o.horizon.value_or(50.0 / std::min({m.mu, m.theta, m.gamma}));
    const FluidTrajectory tr =
        integrate(m, {o.q0.value_or(0.0), o.s0.value_or(m.c)}, horizon, o.step.value_or(default_step(m)));
    std::string csv = "t,q,s\n";
    const std::size_t every = std::max<std::size_t>(o.every, 1);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (i % every != 0 && i + 1 != tr.times.size()) {
            continue;
        }
        csv += format_number(tr.times[i]) + ',' + format_number(tr.states[i].q) + ',' +
               format_number(tr.states[i].s) + '\n';
    }
    return csv;
}

struct SimulateOptions {
    std::uint64_t customers = 10000;
    std::optional<double> until;
    std::size_t reps = 1;
    std::uint64_t seed = 0;
    double warmup = 0.2;
    unsigned jobs = 1;
    double grid_dt = 0.0;
    std::optional<std::int64_t> initial_q;
    std::optional<std::int64_t> initial_s;
    std::string trajectory_csv;
    std::string events_csv;
    std::string out;
};

inline SimConfig simulate_config(const ModelParams& m, const SimulateOptions& o)
{
    SimConfig cfg;
    cfg.params = m;
    cfg.stop = o.until ? StopRule::until(*o.until) : StopRule::after_customers(o.customers);
    cfg.warmup = o.warmup;
    cfg.seed = o.seed;
    cfg.grid_dt = o.grid_dt;
    if (o.initial_q || o.initial_s) {
        cfg.initial = SimState{o.initial_q.value_or(0), o.initial_s.value_or(static_cast<std::int64_t>(m.c)), 0.0};
    }
    return cfg;
}

inline int cmd_simulate(const ModelParams& m, const SimulateOptions& o, std::ostream& out)
{
    validate(m);
    if (!o.trajectory_csv.empty() && !(o.grid_dt > 0.0)) {
        throw UsageError("--trajectory-csv needs --grid-dt > 0");
    }
    if (o.reps < 1) {
        throw UsageError("--reps must be >= 1");
    }
    const SimConfig cfg = simulate_config(m, o);
    try {
        validate_config(cfg);
    } catch (const ParameterError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const ReplicationSummary s = replicate(cfg, o.reps, o.jobs);

    if (!o.trajectory_csv.empty()) {
        std::string csv = "t,q,s\n";
        for (const auto& pt : s.mean_trajectory) {
            csv += format_number(pt.t) + ',' + format_number(pt.q) + ',' + format_number(pt.s) + '\n';
        }
        emit(o.trajectory_csv, csv, out);
    }
    if (!o.events_csv.empty()) {
        SimConfig first = cfg;
        first.record_events = true;
        first.replication_index = 0;
        const SimResult r = run(first);
        std::string csv = "t,event,q,s\n";
        csv += "0,initial," + std::to_string(r.event_log->initial.q) + ',' + std::to_string(r.event_log->initial.s) +
               '\n';
        for (const auto& ev : r.event_log->events) {
            csv += format_number(ev.t) + ',' + std::string(to_string(ev.tag)) + ',' + std::to_string(ev.q) + ',' +
                   std::to_string(ev.s) + '\n';
        }
        emit(o.events_csv, csv, out);
    }
    emit(o.out, dump(summary_json(cfg, o.reps, s)), out);
    return kOk;
}

struct StaffOptions {
    std::string metric;  ///< delay | abandonment
    double epsilon = 0.0;
    std::string method;  ///< deterministic | bivariate | implicit | fluid-bound | empirical | all
    std::string regime = "auto";
    double c_max = 1e9;
    SimBudget budget;
};

inline RegimeChoice parse_regime(const std::string& s)
{
    if (s == "auto") {
        return RegimeChoice::Auto;
    }
    if (s == "ul" || s == "UL") {
        return RegimeChoice::Underloaded;
    }
    if (s == "ol" || s == "OL") {
        return RegimeChoice::Overloaded;
    }
    throw UsageError("--regime must be auto, ul or ol");
}

inline json cmd_staff(const Rates& r, const StaffOptions& o)
{
    validate_rates(r);
    const bool delay = o.metric == "delay";
    if (!delay && o.metric != "abandonment") {
        throw UsageError("--metric must be delay or abandonment");
    }
    if (!(o.epsilon > 0.0 && o.epsilon < 1.0)) {
        throw UsageError("--epsilon must lie in (0,1)");
    }
    const RegimeChoice regime = parse_regime(o.regime);
    std::vector<std::string> methods;
    const std::string method = o.method.empty() ? (delay ? "bivariate" : "implicit") : o.method;
    if (method == "all") {
        methods = delay ? std::vector<std::string>{"deterministic", "bivariate"}
                        : std::vector<std::string>{"fluid-bound", "implicit"};
    } else {
        methods = {method};
    }

    json results = json::array();
    for (const std::string& name : methods) {
        json entry;
        try {
            if (name == "deterministic" || name == "bivariate") {
                if (!delay) {
                    throw UsageError("method " + name + " needs --metric delay");
                }
                entry = answer_json(name == "deterministic" ? staff_delay_deterministic(r, {o.epsilon}, regime)
                                                            : staff_delay_bivariate(r, {o.epsilon}, regime));
            } else if (name == "implicit" || name == "fluid-bound") {
                if (delay) {
                    throw UsageError("method " + name + " needs --metric abandonment");
                }
                AbandonSolverOptions so;
                so.c_max = o.c_max;
                entry = answer_json(name == "implicit" ? staff_abandon_implicit(r, {o.epsilon}, so)
                                                       : staff_abandon_fluid_bound(r, {o.epsilon}));
            } else if (name == "empirical") {
                entry = answer_json(staff_empirical(r, delay ? EmpiricalMetric::Delay : EmpiricalMetric::Abandonment,
                                                    o.epsilon, o.budget));
                entry["simulation"] = {{"customers", o.budget.customers},
                                       {"replications", o.budget.replications},
                                       {"seed", o.budget.seed}};
            } else {
                throw UsageError("unknown --method " + name);
            }
            entry["status"] = "ok";
        } catch (const UsageError&) {
            throw;
        } catch (const InfeasibleError& e) {
            entry = {{"method", name}, {"status", "infeasible"}, {"message", e.what()}, {"value", e.value()}};
        } catch (const std::domain_error& e) {
            entry = {{"method", name}, {"status", "degenerate"}, {"message", e.what()}};
        }
        results.push_back(entry);
    }
    json j = {{"rates", rates_json(r)}, {"metric", o.metric}, {"epsilon", o.epsilon}};
    if (results.size() == 1) {
        j["result"] = results.front();
    } else {
        j["results"] = results;
    }
    return j;
}

struct TableCliOptions {
    std::string kind;  ///< delay | abandonment
    SweepGrid grid;
    bool grid_given = false;
    std::size_t cap = 10000;
    std::optional<int> digits;
    TableOptions table;
};

inline std::string cmd_table(const TableCliOptions& o, std::ostream& err)
{
    if (o.kind != "delay" && o.kind != "abandonment") {
        throw UsageError("--kind must be delay or abandonment");
    }
    const TableKind kind = o.kind == "delay" ? TableKind::Delay : TableKind::Abandonment;
    std::vector<TableRowSpec> specs;
    if (o.grid_given) {
        if (const auto empty = o.grid.empty_dimensions(); !empty.empty()) {
            throw UsageError("empty sweep grid for " + empty.front());
        }
        err << "table: " << o.grid.size() << " grid rows (cap " << o.cap << ")\n";
        try {
            specs = o.grid.expand(o.cap);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    } else {
        specs = kind == TableKind::Delay ? reference_delay_rows() : reference_abandon_rows();
        err << "table: " << specs.size() << " preset rows\n";
    }
    std::ostringstream os;
    write_table_csv(os, build_table(kind, specs, o.table), o.digits);
    return os.str();
}

inline json validation_json(const ValidationReport& rep)
{
    json checks = json::array();
    for (const auto& c : rep.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    return {{"passed", rep.passed()}, {"checks", checks}};
}

/// Σ with the covariance sign flipped: a deliberate transcription fault for
/// checking that the gate catches it.
inline Matrix2 faulty_sigma(const ModelParams& m, const FixedPoint& fp)
{
    Matrix2 s = event_table_sigma(m, fp);
    s.a12 = -s.a12;
    s.a21 = -s.a21;
    return s;
}

// ---------------------------------------------------------------- driver

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Erlang-S* queue: fluid and diffusion analytics, simulation and staffing", "erlangs"};
    app.set_config("--config", "", "TOML/INI file with option values; command-line flags win");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    // Model primitives are global so a config file can set them at top level.
    ModelParams m;
    auto* o_lambda = app.add_option("--lambda", m.lambda, "arrival rate");
    auto* o_mu = app.add_option("--mu", m.mu, "service rate");
    auto* o_theta = app.add_option("--theta", m.theta, "abandonment rate");
    auto* o_p = app.add_option("--p", m.p, "charging probability per completion");
    auto* o_gamma = app.add_option("--gamma", m.gamma, "charge-completion rate");
    auto* o_c = app.add_option("--c", m.c, "number of servers");
    std::string out_path;
    app.add_option("--out", out_path, "output file (default stdout; relative to $ERLANGS_OUTPUT_DIR if set)");

    auto* fp_cmd = app.add_subcommand("fixed-point", "fluid fixed point and regime");
    auto* mom_cmd = app.add_subcommand("moments", "stationary diffusion moments");
    auto* thr_cmd = app.add_subcommand("thresholds", "covariance-sign thresholds on mu");

    FluidOptions fo;
    auto* fl_cmd = app.add_subcommand("fluid", "RK4 fluid trajectory as CSV t,q,s");
    fl_cmd->add_option("--q0", fo.q0, "initial queue (default 0)");
    fl_cmd->add_option("--s0", fo.s0, "initial available servers (default c)");
    fl_cmd->add_option("--horizon", fo.horizon, "end time (default 50/min(mu,theta,gamma))");
    fl_cmd->add_option("--step", fo.step, "RK4 step");
    fl_cmd->add_option("--every", fo.every, "write every k-th point");

    SimulateOptions so;
    auto* sim_cmd = app.add_subcommand("simulate", "replicated event-driven simulation");
    sim_cmd->add_option("--customers", so.customers, "arrivals per replication");
    sim_cmd->add_option("--until", so.until, "stop at this time instead of a customer count");
    sim_cmd->add_option("--reps", so.reps, "replications");
    sim_cmd->add_option("--seed", so.seed, "base seed");
    sim_cmd->add_option("--warmup", so.warmup, "fraction discarded as warmup")->check(CLI::Range(0.0, 0.9));
    sim_cmd->add_option("--jobs", so.jobs, "worker threads");
    sim_cmd->add_option("--grid-dt", so.grid_dt, "sampling step for trajectories");
    sim_cmd->add_option("--initial-q", so.initial_q, "initial queue length");
    sim_cmd->add_option("--initial-s", so.initial_s, "initial available servers");
    sim_cmd->add_option("--trajectory-csv", so.trajectory_csv, "mean sampled trajectory (needs --grid-dt)");
    sim_cmd->add_option("--events-csv", so.events_csv, "event log of replication 0");

    StaffOptions st;
    auto add_budget = [](CLI::App* cmd, SimBudget& b) {
        cmd->add_option("--customers", b.customers, "arrivals per replication (empirical)");
        cmd->add_option("--reps", b.replications, "replications per candidate (empirical)");
        cmd->add_option("--seed", b.seed, "base seed (empirical)");
        cmd->add_option("--warmup", b.warmup, "warmup fraction (empirical)")->check(CLI::Range(0.0, 0.9));
        cmd->add_option("--max-evals", b.max_evaluations, "candidate budget (empirical)");
        cmd->add_option("--c-start", b.c_start, "starting candidate (empirical; default analytic)");
    };
    auto* staff_cmd = app.add_subcommand("staff", "staffing recommendation for a delay or abandonment target");
    staff_cmd->add_option("--metric", st.metric, "delay | abandonment")->required();
    staff_cmd->add_option("--epsilon", st.epsilon, "target in (0,1)")->required();
    staff_cmd->add_option("--method", st.method, "deterministic | bivariate | implicit | fluid-bound | empirical | all");
    staff_cmd->add_option("--regime", st.regime, "auto | ul | ol (delay methods)");
    staff_cmd->add_option("--c-max", st.c_max, "bracket limit for the implicit solver");
    staff_cmd->add_option("--jobs", st.budget.jobs, "worker threads (empirical)");
    add_budget(staff_cmd, st.budget);

    TableCliOptions to;
    auto* tab_cmd = app.add_subcommand("table", "staffing comparison table as CSV");
    tab_cmd->add_option("--kind", to.kind, "delay | abandonment")->required();
    auto* g_l = tab_cmd->add_option("--lambdas", to.grid.lambda, "grid values")->delimiter(',');
    auto* g_m = tab_cmd->add_option("--mus", to.grid.mu, "grid values")->delimiter(',');
    auto* g_t = tab_cmd->add_option("--thetas", to.grid.theta, "grid values")->delimiter(',');
    auto* g_p = tab_cmd->add_option("--ps", to.grid.p, "grid values")->delimiter(',');
    auto* g_g = tab_cmd->add_option("--gammas", to.grid.gamma, "grid values")->delimiter(',');
    auto* g_e = tab_cmd->add_option("--epsilons", to.grid.epsilon, "grid values")->delimiter(',');
    tab_cmd->add_option("--cap", to.cap, "refuse grids with more rows than this");
    tab_cmd->add_option("--jobs", to.table.jobs, "rows evaluated concurrently");
    tab_cmd->add_flag("--with-sim", to.table.with_sim, "also search c_sim by simulation (slow)");
    tab_cmd->add_option("--digits", to.digits, "fixed decimals instead of shortest round-trip")
        ->check(CLI::Range(0, 17));
    add_budget(tab_cmd, to.table.budget);

    ValidationOptions vo;
    bool inject_fault = false;
    auto* val_cmd = app.add_subcommand("validate", "self-check suite; exit 1 on any failure");
    val_cmd->add_option("--draws", vo.draws, "random draws per regime");
    val_cmd->add_option("--customers", vo.customers, "arrivals per oracle replication");
    val_cmd->add_option("--reps", vo.replications, "oracle replications");
    val_cmd->add_option("--seed", vo.seed, "base seed");
    val_cmd->add_option("--jobs", vo.jobs, "worker threads");
    val_cmd->add_flag("--inject-sigma-fault", inject_fault, "flip the sign of Sigma_12 (the gate must fail)");

    for (CLI::App* sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    auto require = [&](std::initializer_list<CLI::Option*> opts) {
        for (CLI::Option* o : opts) {
            if (o->count() == 0) {
                throw UsageError("missing required option " + o->get_name() + "\n" + app.help());
            }
        }
    };

    try {
        if (fp_cmd->parsed()) {
            require({o_lambda, o_mu, o_theta, o_p, o_gamma, o_c});
            emit(out_path, dump(cmd_fixed_point(m)), out);
        } else if (mom_cmd->parsed()) {
            require({o_lambda, o_mu, o_theta, o_p, o_gamma, o_c});
            emit(out_path, dump(cmd_moments(m)), out);
        } else if (thr_cmd->parsed()) {
            require({o_lambda, o_theta, o_p, o_gamma, o_c});
            emit(out_path, dump(cmd_thresholds(m.lambda, m.theta, m.p, m.gamma, m.c)), out);
        } else if (fl_cmd->parsed()) {
            require({o_lambda, o_mu, o_theta, o_p, o_gamma, o_c});
            emit(out_path, cmd_fluid(m, fo), out);
        } else if (sim_cmd->parsed()) {
            require({o_lambda, o_mu, o_theta, o_p, o_gamma, o_c});
            so.out = out_path;
            return cmd_simulate(m, so, out);
        } else if (staff_cmd->parsed()) {
            require({o_lambda, o_mu, o_theta, o_p, o_gamma});
            emit(out_path, dump(cmd_staff(m.rates(), st)), out);
        } else if (tab_cmd->parsed()) {
            for (CLI::Option* g : {g_l, g_m, g_t, g_p, g_g, g_e}) {
                to.grid_given = to.grid_given || g->count() > 0;
            }
            emit(out_path, cmd_table(to, err), out);
        } else if (val_cmd->parsed()) {
            if (inject_fault) {
                vo.sigma = faulty_sigma;
            }
            const ValidationReport rep = run_validation(vo);
            emit(out_path, dump(validation_json(rep)), out);
            return rep.passed() ? kOk : kValidationFailed;
        }
    } catch (const ParameterError& e) {
        err << dump(violations_json(e));
        return kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kOk;
}

}  // namespace erlangs::cli
