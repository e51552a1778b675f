#pragma once

// Brute-force stationary distribution of the (Q, S) chain on the truncated
// lattice {0..q_max} x {0..c}. Used to check the simulator and the
// approximations on small systems.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"
#include "simulator.hpp"

namespace erlangs {

class TruncationError : public std::runtime_error {
public:
    TruncationError(double tail_mass, std::int64_t q_max)
        : std::runtime_error("stationary_oracle: tail mass " + std::to_string(tail_mass) + " at q_max=" +
                             std::to_string(q_max) + " exceeds threshold; widen q_max"),
          tail_mass_(tail_mass)
    {
    }

    [[nodiscard]] double tail_mass() const noexcept { return tail_mass_; }

private:
    double tail_mass_;
};

struct StationaryMetrics {
    std::int64_t q_max = 0;
    std::int64_t c = 0;
    std::vector<double> pi;  ///< indexed by q * (c + 1) + s
    double tail_mass = 0.0;  ///< P(Q = q_max)
    double delay_probability = 0.0;  ///< P(Q >= S), what an arrival sees (PASTA)
    double abandonment_fraction = 0.0;  ///< θ E[(Q-S)+] / λ
    TimeAverages moments;

    [[nodiscard]] double prob(std::int64_t q, std::int64_t s) const
    {
        return pi.at(static_cast<std::size_t>(q * (c + 1) + s));
    }
};

/// Solves pi G = 0, sum(pi) = 1 by dense LU. Arrivals at q_max are blocked.
inline StationaryMetrics stationary_oracle(const ModelParams& m, std::int64_t q_max, double tail_threshold = 1e-8)
{
    validate(m);
    const std::int64_t c = detail::integer_servers(m.c);
    if (q_max < 1) {
        throw std::invalid_argument("stationary_oracle: q_max must be >= 1");
    }
    const std::int64_t width = c + 1;
    const auto n = static_cast<Eigen::Index>((q_max + 1) * width);
    if (n > 20000) {
        throw std::invalid_argument("stationary_oracle: state space too large for a dense solve");
    }
    auto idx = [width](std::int64_t q, std::int64_t s) { return static_cast<Eigen::Index>(q * width + s); };

    // Transposed generator: row = destination, column = source.
    Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(n, n);
    auto add = [&](std::int64_t q, std::int64_t s, std::int64_t q2, std::int64_t s2, double rate) {
        if (rate <= 0.0) {
            return;
        }
        gt(idx(q2, s2), idx(q, s)) += rate;
        gt(idx(q, s), idx(q, s)) -= rate;
    };
    for (std::int64_t q = 0; q <= q_max; ++q) {
        for (std::int64_t s = 0; s <= c; ++s) {
            const auto busy = static_cast<double>(std::min(q, s));
            const auto waiting = static_cast<double>(std::max<std::int64_t>(q - s, 0));
            if (q < q_max) {
                add(q, s, q + 1, s, m.lambda);
            }
            if (q > 0) {
                add(q, s, q - 1, s, (1.0 - m.p) * m.mu * busy);
                if (s > 0) {
                    add(q, s, q - 1, s - 1, m.p * m.mu * busy);
                }
                add(q, s, q - 1, s, m.theta * waiting);
            }
            if (s < c) {
                add(q, s, q, s + 1, m.gamma * static_cast<double>(c - s));
            }
        }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    gt.row(0).setOnes();
    rhs(0) = 1.0;
    const Eigen::VectorXd x = gt.partialPivLu().solve(rhs);

    StationaryMetrics out;
    out.q_max = q_max;
    out.c = c;
    out.pi.assign(x.data(), x.data() + n);
    RawMoments acc;
    double delay = 0.0;
    for (std::int64_t q = 0; q <= q_max; ++q) {
        for (std::int64_t s = 0; s <= c; ++s) {
            const double w = std::max(0.0, out.prob(q, s));
            acc.add(q, s, w);
            if (q >= s) {
                delay += w;
            }
            if (q == q_max) {
                out.tail_mass += w;
            }
        }
    }
    if (out.tail_mass > tail_threshold) {
        throw TruncationError(out.tail_mass, q_max);
    }
    out.moments = averages(acc);
    out.delay_probability = delay / acc.time;
    out.abandonment_fraction = m.theta * out.moments.mean_excess / m.lambda;
    return out;
}

}  // namespace erlangs
