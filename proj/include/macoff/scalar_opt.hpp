#pragma once
// One-dimensional bracketed minimization and a coordinate-descent driver.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "macoff/model.hpp"

namespace macoff {

enum class Shape { Convex, Quasiconvex };

struct BracketedProblem {
    std::function<double(double)> objective;
    double lower = 0;
    double upper = 0;
    Shape shape = Shape::Quasiconvex;
};

struct ScalarMin {
    double argmin = 0;
    double value = kInf;
};

inline double default_x_tol(double lo, double hi) { return 1e-12 * (hi - lo + 1); }

namespace detail {

// Keep the better candidate; on ties prefer the smaller argument.
inline void take_better(ScalarMin& best, double x, double fx) {
    if (fx < best.value || (fx == best.value && x < best.argmin)) best = {x, fx};
}

template <class F>
ScalarMin golden(F& f, double a, double b, double tol, ScalarMin best) {
    const double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 400 && b - a > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    take_better(best, c, fc);
    take_better(best, d, fd);
    double m = 0.5 * (a + b);
    take_better(best, m, f(m));
    return best;
}

// Sign of a finite-difference slope; one-sided near the bracket ends.
template <class F>
double slope(F& f, double x, double lo, double hi) {
    double h = std::max(1e-7, 1e-7 * std::abs(x));
    double xl = std::max(lo, x - h), xr = std::min(hi, x + h);
    if (xr <= xl) return 0;
    return (f(xr) - f(xl)) / (xr - xl);
}

template <class F>
ScalarMin derivative_bisection(F& f, double a, double b, double tol, ScalarMin best) {
    double lo = a, hi = b;
    if (slope(f, lo, a, b) >= 0) return best;  // endpoint already a candidate
    if (slope(f, hi, a, b) <= 0) return best;
    for (int it = 0; it < 300 && hi - lo > tol; ++it) {
        double m = 0.5 * (lo + hi);
        double g = slope(f, m, a, b);
        if (g > 0)
            hi = m;
        else if (g < 0)
            lo = m;
        else {
            lo = hi = m;
        }
    }
    double m = 0.5 * (lo + hi);
    take_better(best, m, f(m));
    return best;
}

}  // namespace detail

template <class F>
ScalarMin minimize_scalar(F&& f, double lower, double upper, Shape shape,
                          std::optional<double> x_tol = std::nullopt) {
    if (!(lower <= upper)) throw EmptyInterval("minimize_scalar: lower > upper");
    double tol = x_tol.value_or(default_x_tol(lower, upper));
    ScalarMin best{lower, f(lower)};
    if (upper == lower) return best;
    detail::take_better(best, upper, f(upper));
    return shape == Shape::Convex ? detail::derivative_bisection(f, lower, upper, tol, best)
                                  : detail::golden(f, lower, upper, tol, best);
}

inline ScalarMin minimize_scalar(const BracketedProblem& p,
                                 std::optional<double> x_tol = std::nullopt) {
    return minimize_scalar(p.objective, p.lower, p.upper, p.shape, x_tol);
}

struct DescentOptions {
    double rel_tol = 1e-9;
    int max_iters = 500;
    Shape shape = Shape::Quasiconvex;
    // Line search along each sweep's net displacement; speeds up zig-zagging
    // in coupled coordinates and never increases the objective.
    bool extrapolate = true;
};

struct DescentReport {
    int iterations = 0;
    double final_objective = kInf;
    std::vector<double> minimizer;
    bool converged = false;
    std::vector<double> objective_trace;
};

class DescentError : public Error {
public:
    DescentError(const std::string& what, std::vector<double> trace)
        : Error(what), trace(std::move(trace)) {}
    std::vector<double> trace;
};

using BoundFn = std::function<std::pair<double, double>(std::span<const double>, std::size_t)>;

namespace detail {

// Shrink [lo,hi] to where g is finite, given g(x0) finite. Assumes the
// finite set along the line is an interval.
template <class G>
std::pair<double, double> finite_span(G& g, double lo, double hi, double x0) {
    auto edge = [&](double bad, double good) {
        if (std::isfinite(g(bad))) return bad;
        for (int it = 0; it < 200 && std::abs(bad - good) > 1e-15 * (std::abs(good) + 1e-300) &&
                         std::abs(bad - good) > 0;
             ++it) {
            double m = 0.5 * (bad + good);
            if (m == bad || m == good) break;
            if (std::isfinite(g(m)))
                good = m;
            else
                bad = m;
        }
        // Stay a hair inside a bisected edge so iterates survive rounding
        // when re-expressed in other coordinates.
        double dist = std::abs(x0 - good);
        double off = std::min(dist, std::max(1e-9 * dist, 1e-12 * std::max(std::abs(good), std::abs(x0))));
        return good + (x0 > good ? off : -off);
    };
    return {lo < x0 ? edge(lo, x0) : x0, hi > x0 ? edge(hi, x0) : x0};
}

}  // namespace detail

template <class F>
DescentReport coordinate_descent(F&& objective, const BoundFn& bounds, std::vector<double> x,
                                 const DescentOptions& opt = {}) {
    const std::size_t n = x.size();
    double fx = objective(std::span<const double>(x));
    if (!std::isfinite(fx)) throw EmptyInterval("coordinate_descent: infeasible initial point");
    for (std::size_t i = 0; i < n; ++i) {
        auto [lo, hi] = bounds(x, i);
        if (!(lo <= hi)) throw EmptyInterval("coordinate_descent: empty coordinate interval");
    }

    DescentReport rep;
    std::vector<double> y(n);
    for (int sweep = 1; sweep <= opt.max_iters; ++sweep) {
        const double f_start = fx;
        const std::vector<double> x_start = x;
        for (std::size_t i = 0; i < n; ++i) {
            auto [lo, hi] = bounds(x, i);
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
            y = x;
            auto g = [&](double t) {
                y[i] = t;
                return objective(std::span<const double>(y));
            };
            auto [a, b] = detail::finite_span(g, lo, hi, x[i]);
            ScalarMin m = minimize_scalar(g, a, b, opt.shape);
            if (m.value < fx) {
                x[i] = m.argmin;
                fx = m.value;
            }
        }
        if (opt.extrapolate && n > 1) {
            std::vector<double> d(n);
            bool moved = false;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] = x[i] - x_start[i];
                moved = moved || d[i] != 0;
            }
            if (moved) {
                auto g = [&](double t) {
                    for (std::size_t i = 0; i < n; ++i) y[i] = x_start[i] + t * d[i];
                    for (std::size_t i = 0; i < n; ++i) {
                        auto [lo, hi] = bounds(y, i);
                        if (y[i] < lo || y[i] > hi) return kInf;
                    }
                    return objective(std::span<const double>(y));
                };
                double t_hi = 2;
                while (t_hi < 1e6 && std::isfinite(g(t_hi))) t_hi *= 4;
                auto [a, b] = detail::finite_span(g, 1.0, t_hi, 1.0);
                ScalarMin m = minimize_scalar(g, a, b, Shape::Quasiconvex, 1e-12 * (b - a + 1));
                if (m.value < fx) {
                    for (std::size_t i = 0; i < n; ++i) x[i] = x_start[i] + m.argmin * d[i];
                    fx = objective(std::span<const double>(x));
                }
            }
        }
        if (fx > f_start + 1e-12 * std::abs(f_start))
            throw DescentError("coordinate_descent: objective increased", rep.objective_trace);
        rep.objective_trace.push_back(fx);
        rep.iterations = sweep;
        if (f_start - fx <= opt.rel_tol * std::abs(f_start)) {
            rep.converged = true;
            break;
        }
    }
    rep.final_objective = fx;
    rep.minimizer = std::move(x);
    return rep;
}

struct NewtonReport {
    std::vector<double> minimizer;
    double final_objective = kInf;
    int iterations = 0;
};

// Damped Newton refinement from a feasible point with finite-difference
// derivatives: central stencils inside, one-sided ones against a bound or
// the edge of the finite region. Coordinates pinned at a bound with the
// gradient pointing out, or with no usable stencil, are held fixed for the
// step. Only decreases are accepted, so the result is never worse.
template <class F>
NewtonReport newton_polish(F&& objective, const std::vector<std::pair<double, double>>& box,
                           std::vector<double> x, int max_iters = 40) {
    const std::size_t n = x.size();
    auto f = [&](const std::vector<double>& v) { return objective(std::span<const double>(v)); };
    NewtonReport rep;
    double fx = f(x);
    if (!std::isfinite(fx)) throw EmptyInterval("newton_polish: infeasible initial point");
    std::vector<double> y(n);
    auto at = [&](std::size_t i, double di, std::size_t j = 0, double dj = 0) {
        y = x;
        y[i] += di;
        if (dj != 0) y[j] += dj;
        for (std::size_t k = 0; k < n; ++k)
            if (y[k] < box[k].first || y[k] > box[k].second) return kInf;
        return f(y);
    };
    for (int it = 0; it < max_iters; ++it) {
        std::vector<double> h(n), g(n), hd(n), sgn(n);
        std::vector<std::size_t> freev;
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = 1e-5 * std::max(1e-3, std::abs(x[i]));
            const double fp = at(i, h[i]), fm = at(i, -h[i]);
            if (std::isfinite(fp) && std::isfinite(fm)) {
                g[i] = (fp - fm) / (2 * h[i]);
                hd[i] = (fp - 2 * fx + fm) / (h[i] * h[i]);
                sgn[i] = 1;
            } else {
                const double s = std::isfinite(fp) ? 1.0 : -1.0;
                const double f1 = s > 0 ? fp : fm, f2 = at(i, 2 * s * h[i]);
                if (!std::isfinite(f1) || !std::isfinite(f2)) continue;
                g[i] = s * (-3 * fx + 4 * f1 - f2) / (2 * h[i]);
                hd[i] = (fx - 2 * f1 + f2) / (h[i] * h[i]);
                sgn[i] = s;
                // blocked side: the descent direction must point inward
                if (-g[i] * s <= 0) continue;
            }
            freev.push_back(i);
        }
        const std::size_t m = freev.size();
        if (m == 0) break;
        Eigen::VectorXd gv(m);
        Eigen::MatrixXd H(m, m);
        bool ok = true;
        for (std::size_t a = 0; a < m && ok; ++a) {
            const std::size_t i = freev[a];
            gv(a) = g[i];
            H(a, a) = hd[i];
            for (std::size_t b = 0; b < a && ok; ++b) {
                const std::size_t j = freev[b];
                const double di = sgn[i] * h[i], dj = sgn[j] * h[j];
                const double fij = at(i, di, j, dj), fi = at(i, di), fj = at(j, dj);
                ok = std::isfinite(fij) && std::isfinite(fi) && std::isfinite(fj);
                H(a, b) = H(b, a) = (fij - fi - fj + fx) / (di * dj);
            }
        }
        if (!ok) break;
        // Levenberg shift until the model is convex.
        double shift = 0;
        Eigen::LDLT<Eigen::MatrixXd> ldlt;
        const double scale = std::max(1e-300, H.diagonal().cwiseAbs().maxCoeff());
        for (int tries = 0; tries < 40; ++tries) {
            ldlt.compute(H + shift * Eigen::MatrixXd::Identity(m, m));
            if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0).all()) break;
            shift = shift == 0 ? 1e-8 * scale : shift * 10;
        }
        const Eigen::VectorXd d = -ldlt.solve(gv);
        double t = 1;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            y = x;
            for (std::size_t a = 0; a < m; ++a) {
                const std::size_t i = freev[a];
                y[i] = std::clamp(x[i] + t * d(a), box[i].first, box[i].second);
            }
            const double fy = f(y);
            if (fy < fx) {
                moved = true;
                const double gain = fx - fy;
                x = y;
                fx = fy;
                rep.iterations = it + 1;
                if (gain <= 1e-15 * std::abs(fx)) it = max_iters;
                break;
            }
        }
        if (!moved) break;
    }
    rep.minimizer = std::move(x);
    rep.final_objective = fx;
    return rep;
}

}  // namespace macoff
