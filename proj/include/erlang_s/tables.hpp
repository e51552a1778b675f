#pragma once

// Staffing comparison tables: one row per (rates, ε), with the fluid and
// diffusion recommendations and, optionally, the simulated minimum.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "staffing.hpp"

namespace erlangs {

enum class TableKind { Delay, Abandonment };

[[nodiscard]] inline std::string_view to_string(TableKind k) noexcept
{
    return k == TableKind::Delay ? "delay" : "abandonment";
}

struct TableRowSpec {
    Rates rates;
    double epsilon = 0.0;
};

struct TableRow {
    TableRowSpec spec;
    std::optional<double> c_sim;
    std::optional<double> c_fluid;
    std::optional<double> pct_fluid;  ///< 100 c_fluid / c_sim
    std::optional<double> c_diff;
    std::optional<double> pct_diff;
    std::string status = "ok";
};

/// Preset rows for the delay comparison.
inline std::vector<TableRowSpec> reference_delay_rows()
{
    std::vector<TableRowSpec> rows;
    for (double lambda : {80.0, 100.0, 120.0}) {
        rows.push_back({{lambda, 1.0, 1.0, 0.1, 0.5}, 0.01});
        rows.push_back({{lambda, 1.0, 1.0, 0.5, 0.1}, 0.05});
        rows.push_back({{lambda, 10.0, 1.0, 0.5, 0.5}, 0.10});
    }
    return rows;
}

/// Preset rows for the abandonment comparison.
inline std::vector<TableRowSpec> reference_abandon_rows()
{
    std::vector<TableRowSpec> rows;
    const Rates sets[] = {{80.0, 1.0, 1.0, 0.5, 10.0}, {100.0, 0.5, 1.0, 0.5, 0.5}, {120.0, 1.0, 1.0, 0.5, 0.1}};
    for (const Rates& r : sets) {
        for (double eps : {0.01, 0.05, 0.10}) {
            rows.push_back({r, eps});
        }
    }
    return rows;
}

struct SweepGrid {
    std::vector<double> lambda, mu, theta, p, gamma, epsilon;

    [[nodiscard]] std::size_t size() const noexcept
    {
        return lambda.size() * mu.size() * theta.size() * p.size() * gamma.size() * epsilon.size();
    }

    /// Names of empty dimensions.
    [[nodiscard]] std::vector<std::string> empty_dimensions() const
    {
        std::vector<std::string> out;
        const std::pair<const char*, const std::vector<double>*> dims[] = {
            {"lambda", &lambda}, {"mu", &mu}, {"theta", &theta}, {"p", &p}, {"gamma", &gamma}, {"epsilon", &epsilon}};
        for (const auto& [name, v] : dims) {
            if (v->empty()) {
                out.emplace_back(name);
            }
        }
        return out;
    }

    /// Cartesian product, λ outermost and ε innermost.
    [[nodiscard]] std::vector<TableRowSpec> expand(std::size_t cap) const
    {
        if (!empty_dimensions().empty()) {
            throw std::invalid_argument("sweep grid has an empty dimension: " + empty_dimensions().front());
        }
        if (size() > cap) {
            throw std::invalid_argument("sweep grid has " + std::to_string(size()) + " rows, above the cap of " +
                                        std::to_string(cap));
        }
        std::vector<TableRowSpec> rows;
        rows.reserve(size());
        for (double l : lambda)
            for (double m : mu)
                for (double t : theta)
                    for (double pp : p)
                        for (double g : gamma)
                            for (double e : epsilon) {
                                rows.push_back({{l, m, t, pp, g}, e});
                            }
        return rows;
    }
};

struct TableOptions {
    bool with_sim = false;
    SimBudget budget;  ///< per-row simulation budget; budget.jobs is ignored
    unsigned jobs = 1;  ///< rows evaluated concurrently
};

namespace detail {

inline void append_status(std::string& status, const std::string& what)
{
    status = status == "ok" ? what : status + "; " + what;
}

template <class F>
std::optional<double> table_cell(std::string& status, const char* column, F&& solve)
{
    try {
        const StaffingAnswer a = solve();
        if (!a.diagnostics.regime_consistent) {
            append_status(status, std::string(column) + ": regime mismatch");
        }
        if (a.diagnostics.partial) {
            append_status(status, std::string(column) + ": budget exhausted");
        }
        return a.c_real;
    } catch (const std::exception& e) {
        append_status(status, std::string(column) + ": " + e.what());
        return std::nullopt;
    }
}

}  // namespace detail

inline TableRow evaluate_row(TableKind kind, const TableRowSpec& spec, const TableOptions& opt)
{
    TableRow row;
    row.spec = spec;
    const Rates& r = spec.rates;
    if (kind == TableKind::Delay) {
        row.c_fluid = detail::table_cell(row.status, "c_fluid",
                                         [&] { return staff_delay_deterministic(r, {spec.epsilon}); });
        row.c_diff = detail::table_cell(row.status, "c_diff", [&] { return staff_delay_bivariate(r, {spec.epsilon}); });
    } else {
        row.c_fluid = detail::table_cell(row.status, "c_fluid",
                                         [&] { return staff_abandon_fluid_bound(r, {spec.epsilon}); });
        row.c_diff = detail::table_cell(row.status, "c_diff", [&] { return staff_abandon_implicit(r, {spec.epsilon}); });
    }
    if (opt.with_sim) {
        SimBudget b = opt.budget;
        b.jobs = 1;
        const EmpiricalMetric metric = kind == TableKind::Delay ? EmpiricalMetric::Delay : EmpiricalMetric::Abandonment;
        row.c_sim = detail::table_cell(row.status, "c_sim", [&] { return staff_empirical(r, metric, spec.epsilon, b); });
    }
    if (row.c_sim && *row.c_sim > 0.0) {
        if (row.c_fluid) {
            row.pct_fluid = 100.0 * *row.c_fluid / *row.c_sim;
        }
        if (row.c_diff) {
            row.pct_diff = 100.0 * *row.c_diff / *row.c_sim;
        }
    }
    return row;
}

/// Rows come back in input order whatever `jobs` is.
inline std::vector<TableRow> build_table(TableKind kind, const std::vector<TableRowSpec>& specs,
                                         const TableOptions& opt = {})
{
    std::vector<TableRow> rows(specs.size());
    parallel_for(specs.size(), opt.jobs, [&](std::size_t i) { rows[i] = evaluate_row(kind, specs[i], opt); });
    return rows;
}

/// Shortest decimal that round-trips, or fixed with `digits` decimals.
inline std::string format_number(double v, std::optional<int> digits = std::nullopt)
{
    char buf[64];
    if (digits) {
        const int n = std::snprintf(buf, sizeof buf, "%.*f", *digits, v);
        return std::string(buf, static_cast<std::size_t>(n));
    }
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows, std::optional<int> digits = std::nullopt)
{
    os << "lambda,mu,theta,p,gamma,epsilon,c_sim,c_fluid,pct_fluid,c_diff,pct_diff,status\n";
    auto cell = [&](const std::optional<double>& v) { return v ? format_number(*v, digits) : std::string(); };
    for (const TableRow& row : rows) {
        const Rates& r = row.spec.rates;
        std::string status = row.status;
        for (char& ch : status) {
            if (ch == ',' || ch == '\n' || ch == '"') {
                ch = ' ';
            }
        }
        os << format_number(r.lambda) << ',' << format_number(r.mu) << ',' << format_number(r.theta) << ','
           << format_number(r.p) << ',' << format_number(r.gamma) << ',' << format_number(row.spec.epsilon) << ','
           << cell(row.c_sim) << ',' << cell(row.c_fluid) << ',' << cell(row.pct_fluid) << ',' << cell(row.c_diff)
           << ',' << cell(row.pct_diff) << ',' << status << '\n';
    }
}

}  // namespace erlangs
