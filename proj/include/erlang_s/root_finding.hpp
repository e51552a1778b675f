#pragma once

#include <cmath>
#include <stdexcept>

namespace erlangs {

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    double lo = 0.0;  ///< final bracket
    double hi = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Safeguarded Newton on a bracket [lo, hi] with f(lo) and f(hi) of opposite
/// sign. A Newton step that leaves the current bracket (or a zero derivative)
/// falls back to bisection, so the iterate never escapes the bracket.
/// Stops when |f(x)| <= ftol or the bracket shrinks below xtol.
template <class F, class DF>
RootResult newton_bisect(F&& f, DF&& df, double lo, double hi, double ftol, double xtol = 0.0, int max_iter = 200)
{
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) {
        return {lo, flo, lo, lo, 0, true};
    }
    if (fhi == 0.0) {
        return {hi, fhi, hi, hi, 0, true};
    }
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw std::invalid_argument("newton_bisect: root not bracketed");
    }
    const bool increasing = flo < 0.0;
    double x = 0.5 * (lo + hi);
    RootResult out;
    for (int it = 1; it <= max_iter; ++it) {
        const double fx = f(x);
        out = {x, fx, lo, hi, it, false};
        if (std::abs(fx) <= ftol) {
            out.converged = true;
            return out;
        }
        if ((fx < 0.0) == increasing) {
            lo = x;
        } else {
            hi = x;
        }
        out.lo = lo;
        out.hi = hi;
        if (hi - lo <= xtol) {
            out.converged = xtol > 0.0;
            return out;
        }
        const double d = df(x);
        double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        x = next;
    }
    return out;
}

}  // namespace erlangs
