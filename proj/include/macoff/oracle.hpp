#pragma once
// Brute-force reference solvers. Deliberately shares nothing with the
// analytic solvers except the plain data types: every constraint and power
// formula below is re-derived from the rate-region and latency definitions.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "macoff/model.hpp"

namespace macoff {

struct GridSpec {
    std::vector<int> points;  // one entry per variable, or a single entry for all
    int passes = 3;           // refinement passes after the initial grid
    double shrink = 0.1;

    int points_for(std::size_t var) const {
        if (points.empty()) return 0;
        return points.size() == 1 ? points[0] : points.at(var);
    }
    void validate(std::size_t nvars) const {
        for (std::size_t i = 0; i < nvars; ++i)
            if (points_for(i) < 16) throw InvalidParameter("grid resolution must be >= 16");
        if (!(shrink > 0 && shrink < 1)) throw InvalidParameter("grid shrink must be in (0,1)");
        if (passes < 0) throw InvalidParameter("grid passes must be >= 0");
    }
    static GridSpec defaults(std::size_t nvars) {
        GridSpec g;
        g.points = {nvars <= 2 ? 400 : nvars == 3 ? 120 : 16};
        if (nvars >= 4) g.passes = 4, g.shrink = 0.15;  // two parametrizations, each zoomed
        return g;
    }
};

namespace oracle_detail {

struct Probe {
    double violation = kInf;  // 0 means feasible
    double energy = kInf;
};

inline bool better(const Probe& a, const Probe& b) {
    if (a.violation != b.violation) return a.violation < b.violation;
    return a.energy < b.energy;
}

struct GridResult {
    Probe best;
    std::vector<double> u;
};

// Exhaustive search over the unit cube; refinement re-centres a smaller box
// on the incumbent (least violation first, then least energy).
template <class F>
GridResult grid_search(std::size_t n, const GridSpec& g, F&& f) {
    g.validate(n);
    std::vector<double> lo(n, 0.0), hi(n, 1.0), u(n);
    GridResult res;
    std::vector<int> idx(n);
    for (int pass = 0; pass <= g.passes; ++pass) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            for (std::size_t i = 0; i < n; ++i) {
                int N = g.points_for(i);
                u[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (N - 1);
            }
            Probe p = f(u);
            if (res.u.empty() || better(p, res.best)) {
                res.best = p;
                res.u = u;
            }
            std::size_t k = 0;
            while (k < n && ++idx[k] == g.points_for(k)) idx[k++] = 0;
            if (k == n) break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double w = (hi[i] - lo[i]) * g.shrink;
            double a = std::max(0.0, res.u[i] - w / 2), b = std::min(1.0, res.u[i] + w / 2);
            if (a == 0.0) b = std::min(1.0, w);
            if (b == 1.0) a = std::max(0.0, 1.0 - w);
            lo[i] = a;
            hi[i] = b;
        }
    }
    return res;
}

inline double g_pow(double R, double alpha) { return (std::pow(2.0, R) - 1.0) / alpha; }
inline double capacity(double alpha, double P) { return std::log(1.0 + alpha * P) / std::log(2.0); }

// Cheapest powers for a slot-1 rate pair inside the multiple-access region:
// a tiny LP in received powers x = a1*P11, y = a2*P21, solved by vertex
// enumeration. Returns violation > 0 when no budget-respecting pair exists.
struct PowerPair {
    double violation = 0;
    double P11 = 0, P21 = 0;
};

inline PowerPair mac_powers(double R11, double R21, double a1, double a2, double Pb1, double Pb2) {
    const double c1 = std::pow(2.0, R11) - 1, c2 = std::pow(2.0, R21) - 1;
    const double c3 = std::pow(2.0, R11 + R21) - 1;
    const double X = a1 * Pb1, Y = a2 * Pb2;
    PowerPair out;
    double v = std::max(0.0, c1 - X) + std::max(0.0, c2 - Y) + std::max(0.0, c3 - X - Y);
    if (v > 1e-9 * (1 + c3)) {
        out.violation = v / (1 + c3);
        return out;
    }
    // Lines: x=c1, x=X, y=c2, y=Y, x+y=c3.
    std::vector<std::pair<double, double>> pts;
    for (double x : {c1, X}) {
        for (double y : {c2, Y}) pts.push_back({x, y});
        pts.push_back({x, c3 - x});
    }
    for (double y : {c2, Y}) pts.push_back({c3 - y, y});
    double best = kInf;
    const double slack = 1e-9 * (1 + c3);
    for (auto [x, y] : pts) {
        if (x < c1 - slack || y < c2 - slack || x + y < c3 - slack) continue;
        if (x > X + slack || y > Y + slack || x < -slack || y < -slack) continue;
        double cost = x / a1 + y / a2;
        if (cost < best) {
            best = cost;
            out.P11 = std::clamp(x, 0.0, X) / a1;
            out.P21 = std::clamp(y, 0.0, Y) / a2;
        }
    }
    if (!std::isfinite(best)) out.violation = 1e-9;
    return out;
}

// Slot-1 powers when the pair must be decodable with the given receiver.
// order 1: user 2 decoded first (sees user 1 as noise), then user 1 clean.
inline PowerPair decoder_powers(Scheme scheme, int order, double R11, double R21, double a1,
                                double a2) {
    const double c1 = std::pow(2.0, R11) - 1, c2 = std::pow(2.0, R21) - 1;
    PowerPair out;
    if (scheme == Scheme::ID) {
        // a1 P11 = c1 (1 + a2 P21), a2 P21 = c2 (1 + a1 P11)
        double det = 1 - c1 * c2;
        if (det <= 0) {
            out.violation = 1 + (c1 * c2 - 1);
            return out;
        }
        double x = c1 * (1 + c2) / det, y = c2 * (1 + c1) / det;
        out.P11 = x / a1;
        out.P21 = y / a2;
        return out;
    }
    if (order == 1) {
        out.P11 = c1 / a1;
        out.P21 = c2 * (1 + c1) / a2;
    } else {
        out.P21 = c2 / a2;
        out.P11 = c1 * (1 + c2) / a1;
    }
    return out;
}

inline double excess(double value, double limit) {
    return std::max(0.0, value / limit - 1.0 - 1e-9);
}

struct Setup {
    double B1, B2, a1, a2, Pb1, Pb2, Ts;
    double W1, W2;  // binary: uplink windows in channel uses; partial: seconds
    double M1 = 0, M2 = 0, d1 = 0, d2 = 0, Lt1 = 1, Lt2 = 1;
};

inline Setup make_setup(const Scenario& sc, Mode mode) {
    Setup s{};
    s.B1 = sc.user(0).bits;
    s.B2 = sc.user(1).bits;
    s.a1 = sc.link(0).gain / sc.noise();
    s.a2 = sc.link(1).gain / sc.noise();
    s.Pb1 = sc.link(0).power_budget;
    s.Pb2 = sc.link(1).power_budget;
    s.Ts = sc.symbol_interval();
    const auto& u1 = sc.user(0);
    const auto& u2 = sc.user(1);
    if (mode == Mode::Binary) {
        s.W1 = (u1.latency - u1.exec_time - u1.downlink_time) / s.Ts;
        s.W2 = (u2.latency - u2.exec_time - u2.downlink_time) / s.Ts;
    } else {
        s.W1 = u1.latency - u1.downlink_time;
        s.W2 = u2.latency - u2.downlink_time;
        s.Lt1 = u1.latency;
        s.Lt2 = u2.latency;
        if (u1.local_model) {
            s.M1 = u1.local_model->chip_constant;
            s.d1 = u1.local_model->per_bit_cloud_time;
        }
        if (u2.local_model) {
            s.M2 = u2.local_model->chip_constant;
            s.d2 = u2.local_model->per_bit_cloud_time;
        }
    }
    return s;
}

inline double dvs(double M, double bits, double L) { return M * bits * bits * bits / (L * L); }

inline Solution wrap(const Probe& p, const Allocation& al, std::array<double, 2> tx,
                     std::array<double, 2> loc, Scheme sch, Mode m, double Ts) {
    if (!(p.violation == 0) || !std::isfinite(p.energy))
        return Solution::infeasible(sch, m, Ts, "oracle/infeasible");
    Solution s;
    s.feasible = true;
    s.scheme = sch;
    s.mode = m;
    s.symbol_interval = Ts;
    s.case_trace = "oracle";
    s.allocation = al;
    s.transmit_energy = tx;
    s.local_energy = loc;
    return s;
}

// ------------------------------------------------------------- binary

// Slot-1 rates carried by a power pair under a decoder.
// order 1: user 2 decoded first (sees user 1 as noise), then user 1 clean.
inline std::pair<double, double> decoder_rates(Scheme scheme, int order, double P11, double P21,
                                               double a1, double a2) {
    const double x = a1 * P11, y = a2 * P21;
    if (scheme == Scheme::ID) return {capacity(1.0, x / (1 + y)), capacity(1.0, y / (1 + x))};
    if (order == 1) return {capacity(1.0, x), capacity(1.0, y / (1 + x))};
    return {capacity(1.0, x / (1 + y)), capacity(1.0, y)};
}

struct SlotRange {
    double lo = 0, hi = 0;
    double gap = 0;  // > 0: no feasible slot-1 length; least window shortfall
};

// Slot-1 lengths t in [0, W1] for which the leftover bits still fit at full
// power: f1(t) = n1(t) - (W1 - t) <= 0 and f2(t) = n1(t) + n2(t) - (W2 - t) <= 0,
// n_k(t) = max(0, B_k - t R_k) / cap_k. Both are convex and piecewise linear
// with kinks at B_k / R_k, so the answer is exact per linear piece.
inline SlotRange shared_slot_range(const Setup& S, double cap1, double cap2, double R1, double R2) {
    auto n = [](double B, double R, double c, double t) { return std::max(0.0, B - t * R) / c; };
    auto worst = [&](double t) {
        double n1 = n(S.B1, R1, cap1, t), n2 = n(S.B2, R2, cap2, t);
        return std::max(n1 - (S.W1 - t), n1 + n2 - (S.W2 - t));
    };
    std::vector<double> cuts{0.0, S.W1};
    if (R1 > 0 && S.B1 / R1 < S.W1) cuts.push_back(S.B1 / R1);
    if (R2 > 0 && S.B2 / R2 < S.W1) cuts.push_back(S.B2 / R2);
    std::sort(cuts.begin(), cuts.end());
    SlotRange r;
    double least = kInf;
    bool any = false;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const double fa = worst(a), fb = worst(b);
        least = std::min({least, fa, fb});
        if (b <= a) continue;
        // On [a,b] worst() is a max of two lines, hence convex: its
        // sublevel set {<= 0} is found from the two lines separately.
        double lo = a, hi = b;
        bool empty = false;
        for (int which = 0; which < 2; ++which) {
            auto line = [&](double t) {
                double n1 = n(S.B1, R1, cap1, t), n2 = n(S.B2, R2, cap2, t);
                return which == 0 ? n1 - (S.W1 - t) : n1 + n2 - (S.W2 - t);
            };
            const double la = line(a), lb = line(b);
            if (la <= 0 && lb <= 0) continue;
            if (la > 0 && lb > 0) {
                empty = true;
                break;
            }
            const double root = a + (b - a) * la / (la - lb);
            if (la > 0)
                lo = std::max(lo, root);
            else
                hi = std::min(hi, root);
        }
        if (empty || lo > hi) continue;
        r.lo = any ? std::min(r.lo, lo) : lo;
        r.hi = any ? std::max(r.hi, hi) : hi;
        any = true;
    }
    if (!any) r.gap = std::max(least, 1e-300) / S.W2;
    return r;
}


inline Solution oracle_binary(const Setup& S, Scheme sch, const GridSpec& g) {
    const double cap1 = capacity(S.a1, S.Pb1), cap2 = capacity(S.a2, S.Pb2);
    if (sch == Scheme::FullMA) {
        // User 1 occupies [0, W1] at its deadline rate; user 2 shares that slot
        // at R21 and finishes alone in [W1, W2].
        const double R11 = S.B1 / S.W1;
        auto eval = [&](double R21, Allocation* al, std::array<double, 2>* tx) {
            Probe p;
            PowerPair pw = mac_powers(R11, R21, S.a1, S.a2, S.Pb1, S.Pb2);
            double rest = S.B2 - S.W1 * R21;
            double span = S.W2 - S.W1;
            double v = pw.violation + std::max(0.0, -rest) / S.B2;
            double R23 = 0;
            if (rest > 1e-6) {
                if (span <= 0)
                    v += rest / S.B2;
                else {
                    R23 = rest / span;
                    v += std::max(0.0, R23 - cap2) / (1 + cap2);
                }
            }
            p.violation = v;
            if (v > 0) return p;
            double P23 = g_pow(R23, S.a2);
            p.energy = S.W1 * (pw.P11 + pw.P21) + (R23 > 0 ? span * P23 : 0);
            if (al) {
                al->tau = {S.W1, 0, std::max(0.0, span)};
                al->R11 = R11;
                al->R21 = R21;
                al->R23 = R23;
                al->P11 = pw.P11;
                al->P21 = pw.P21;
                al->P23 = R23 > 0 ? P23 : 0;
                *tx = {S.W1 * pw.P11, S.W1 * pw.P21 + (R23 > 0 ? span * P23 : 0)};
            }
            return p;
        };
        auto r = grid_search(1, g, [&](const std::vector<double>& u) {
            return eval(u[0] * cap2, nullptr, nullptr);
        });
        Allocation al;
        std::array<double, 2> tx{};
        Probe p = eval(r.u[0] * cap2, &al, &tx);
        return wrap(p, al, tx, {0, 0}, sch, Mode::Binary, S.Ts);
    }
    if (sch == Scheme::TDMA) {
        auto eval = [&](double R1, Allocation* al, std::array<double, 2>* tx) {
            Probe p;
            if (R1 <= 0) {
                p.violation = 1e6;
                return p;
            }
            double t1 = S.B1 / R1;
            double t2 = S.W2 - t1;
            double v = std::max(0.0, t1 - S.W1) / S.W2;
            if (t2 <= 0) {
                p.violation = v + 1 - t2 / S.W2;
                return p;
            }
            double R2 = S.B2 / t2;
            v += std::max(0.0, R2 - cap2) / (1 + cap2);
            p.violation = v;
            if (v > 0) return p;
            double P1 = g_pow(R1, S.a1), P2 = g_pow(R2, S.a2);
            p.energy = t1 * P1 + t2 * P2;
            if (al) {
                al->tau = {0, t1, t2};
                al->R12 = R1;
                al->P12 = P1;
                al->R23 = R2;
                al->P23 = P2;
                *tx = {t1 * P1, t2 * P2};
            }
            return p;
        };
        auto r = grid_search(1, g, [&](const std::vector<double>& u) {
            return eval(u[0] * cap1, nullptr, nullptr);
        });
        Allocation al;
        std::array<double, 2> tx{};
        Probe p = eval(r.u[0] * cap1, &al, &tx);
        return wrap(p, al, tx, {0, 0}, sch, Mode::Binary, S.Ts);
    }

    // SDwts / ID: slot 1 shared for t1, then user 1 alone for t2 (ending by W1),
    // then user 2 alone until W2. Two parametrizations are searched and the
    // better kept. "Powers": slot-1 powers as budget shares, t1 and t2 as
    // positions inside their feasible ranges, so tight windows and saturated
    // budgets are grid points. "Rates": t1, a t2 share and slot-1 rates as
    // shares of what the slot can carry, so a user emptying its queue in
    // slot 1 is a grid point.
    Solution best = Solution::infeasible(sch, Mode::Binary, S.Ts, "oracle/infeasible");
    Probe best_p;
    for (int order : {1, 2}) {
        if (sch == Scheme::ID && order == 2) break;
        auto eval_powers = [&](const std::vector<double>& u, Allocation* al, std::array<double, 2>* tx) {
            Probe p;
            const double P11 = u[0] * S.Pb1, P21 = u[1] * S.Pb2;
            auto [R11, R21] = decoder_rates(sch, order, P11, P21, S.a1, S.a2);
            auto [lo, hi, gap] = shared_slot_range(S, cap1, cap2, R11, R21);
            if (gap > 0) {
                p.violation = gap;
                return p;
            }
            const double t1 = lo + u[2] * (hi - lo);
            // A user whose queue would empty before t1 lowers its power to the
            // rate that just empties it; that can only raise the other user's
            // rate, so repeat until neither overshoots.
            double q1 = P11, q2 = P21, s1 = R11, s2 = R21;
            for (int it = 0; it < 4 && t1 > 0; ++it) {
                const bool o1 = t1 * s1 > S.B1, o2 = t1 * s2 > S.B2;
                if (!o1 && !o2) break;
                const double r1 = S.B1 / t1, r2 = S.B2 / t1;
                if (o1 && o2) {
                    PowerPair pw = decoder_powers(sch, order, r1, r2, S.a1, S.a2);
                    if (pw.violation > 0) break;
                    q1 = std::min(q1, pw.P11);
                    q2 = std::min(q2, pw.P21);
                } else if (o1) {
                    const bool clean = sch != Scheme::ID && order == 1;
                    q1 = (std::pow(2.0, r1) - 1) * (clean ? 1 : 1 + S.a2 * q2) / S.a1;
                } else {
                    const bool clean = sch != Scheme::ID && order == 2;
                    q2 = (std::pow(2.0, r2) - 1) * (clean ? 1 : 1 + S.a1 * q1) / S.a2;
                }
                std::tie(s1, s2) = decoder_rates(sch, order, q1, q2, S.a1, S.a2);
            }
            if (t1 > 0) {
                s1 = std::min(s1, S.B1 / t1);
                s2 = std::min(s2, S.B2 / t1);
            }
            const double b1 = std::max(0.0, S.B1 - t1 * s1), b2 = std::max(0.0, S.B2 - t1 * s2);
            const double need1 = b1 > 1e-6 ? b1 / cap1 : 0, need2 = b2 > 1e-6 ? b2 / cap2 : 0;
            const double t2_hi = std::max(need1, std::min(S.W1 - t1, S.W2 - t1 - need2));
            const double t2 = need1 + u[3] * (t2_hi - need1);
            const double t3 = S.W2 - t1 - t2;
            double R12 = 0, R23 = 0;
            if (need1 > 0) R12 = b1 / t2;
            if (need2 > 0) R23 = b2 / t3;
            p.violation = excess(R12, cap1) + excess(R23, cap2);
            if (p.violation > 0) return p;
            const double P12 = R12 > 0 ? g_pow(R12, S.a1) : 0, P23 = R23 > 0 ? g_pow(R23, S.a2) : 0;
            const double e1 = t1 > 0 && s1 > 0 ? q1 : 0, e2 = t1 > 0 && s2 > 0 ? q2 : 0;
            p.energy = t1 * (e1 + e2) + t2 * P12 + t3 * P23;
            if (al) {
                al->tau = {t1, R12 > 0 ? t2 : 0, R23 > 0 ? t3 : 0};
                al->R11 = t1 > 0 ? s1 : 0;
                al->R21 = t1 > 0 ? s2 : 0;
                al->P11 = e1;
                al->P21 = e2;
                al->R12 = R12;
                al->P12 = P12;
                al->R23 = R23;
                al->P23 = P23;
                *tx = {t1 * e1 + t2 * P12, t1 * e2 + t3 * P23};
            }
            return p;
        };
        auto eval_rates = [&](const std::vector<double>& u, Allocation* al, std::array<double, 2>* tx) {
            Probe p;
            double t1 = u[0] * S.W1;
            double t2 = u[1] * (S.W1 - t1);
            double t3 = S.W2 - t1 - t2;
            double R11 = 0, R21 = 0;
            PowerPair pw;
            double v = 0;
            if (t1 > 0) {
                R11 = u[2] * std::min(cap1, S.B1 / t1);
                R21 = u[3] * std::min(cap2, S.B2 / t1);
                pw = decoder_powers(sch, order, R11, R21, S.a1, S.a2);
                if (pw.violation > 0) {
                    p.violation = 10 + pw.violation;
                    return p;
                }
                v += excess(pw.P11, S.Pb1) + excess(pw.P21, S.Pb2);
            }
            double b1 = std::max(0.0, S.B1 - t1 * R11), b2 = std::max(0.0, S.B2 - t1 * R21);
            double R12 = 0, R23 = 0;
            if (b1 > 1e-6) {
                if (t2 <= 0)
                    v += b1 / S.B1;
                else {
                    R12 = b1 / t2;
                    v += std::max(0.0, R12 - cap1) / (1 + cap1);
                }
            }
            if (b2 > 1e-6) {
                if (t3 <= 0)
                    v += b2 / S.B2;
                else {
                    R23 = b2 / t3;
                    v += std::max(0.0, R23 - cap2) / (1 + cap2);
                }
            }
            p.violation = v;
            if (v > 0) return p;
            double P12 = R12 > 0 ? g_pow(R12, S.a1) : 0, P23 = R23 > 0 ? g_pow(R23, S.a2) : 0;
            p.energy = t1 * (pw.P11 + pw.P21) + t2 * P12 + t3 * P23;
            if (al) {
                al->tau = {t1, R12 > 0 ? t2 : 0, R23 > 0 ? t3 : 0};
                al->R11 = R11;
                al->R21 = R21;
                al->P11 = pw.P11;
                al->P21 = pw.P21;
                al->R12 = R12;
                al->P12 = P12;
                al->R23 = R23;
                al->P23 = P23;
                *tx = {t1 * pw.P11 + t2 * P12, t1 * pw.P21 + t3 * P23};
            }
            return p;
        };
        auto consider = [&](auto& eval) {
            auto r = grid_search(4, g, [&](const std::vector<double>& u) { return eval(u, nullptr, nullptr); });
            if (best.feasible && !better(r.best, best_p)) return;
            if (!best.feasible && r.best.violation > 0 && !better(r.best, best_p)) return;
            Allocation al;
            std::array<double, 2> tx{};
            best_p = eval(r.u, &al, &tx);
            best = wrap(best_p, al, tx, {0, 0}, sch, Mode::Binary, S.Ts);
        };
        consider(eval_powers);
        consider(eval_rates);
    }
    return best;
}

// ------------------------------------------------------------ partial

struct PartialPoint {
    Probe p;
    Allocation al;
    std::array<double, 2> tx{}, loc{};
};

// Shared-slot layout: slot 1 takes the share s1 of the longest user 1's
// window allows (s1 = 1: until its deadline), user 2 finishes alone in slot 3.
inline PartialPoint partial_ma_point(const Setup& S, double R11, double R21, double R23, double s1 = 1) {
    PartialPoint out;
    const double cap2 = capacity(S.a2, S.Pb2);
    double t1 = s1 * S.W1 / (S.Ts + S.d1 * R11);  // channel uses
    double g11 = t1 * R11 / S.B1;
    double g21 = t1 * R21 / S.B2;
    double left = S.W2 - t1 * (S.Ts + S.d2 * R21);  // seconds left for user 2 after slot 1
    double t3 = R23 > 0 ? left / (S.Ts + S.d2 * R23) : 0;
    double g23 = t3 * R23 / S.B2;
    PowerPair pw = mac_powers(R11, R21, S.a1, S.a2, S.Pb1, S.Pb2);
    double v = pw.violation + std::max(0.0, g11 - 1 - 1e-12) + std::max(0.0, g21 + g23 - 1 - 1e-12) +
               std::max(0.0, -left) / S.W2 + std::max(0.0, R23 - cap2);
    out.p.violation = v;
    if (v > 0) return out;
    double P23 = R23 > 0 ? g_pow(R23, S.a2) : 0;
    double keep1 = std::max(0.0, S.B1 * (1 - g11)), keep2 = std::max(0.0, S.B2 * (1 - g21 - g23));
    out.tx = {t1 * pw.P11, t1 * pw.P21 + t3 * P23};
    out.loc = {dvs(S.M1, keep1, S.Lt1), dvs(S.M2, keep2, S.Lt2)};
    out.p.energy = out.tx[0] + out.tx[1] + out.loc[0] + out.loc[1];
    out.al.tau = {t1, 0, t3};
    out.al.R11 = R11;
    out.al.R21 = R21;
    out.al.R23 = R23;
    out.al.P11 = pw.P11;
    out.al.P21 = pw.P21;
    out.al.P23 = P23;
    out.al.gamma11 = g11;
    out.al.gamma21 = g21;
    out.al.gamma23 = g23;
    out.al.retained_bits = {keep1, keep2};
    return out;
}

// Turn-taking layout: user 1 sends a fraction g1 at R1 first, user 2 then
// uses the rest of its window at R2.
inline PartialPoint partial_tdma_point(const Setup& S, double R1, double R2, double g1,
                                       double forced_g2 = -1) {
    PartialPoint out;
    const double cap1 = capacity(S.a1, S.Pb1), cap2 = capacity(S.a2, S.Pb2);
    double t1 = g1 > 0 ? (R1 > 0 ? g1 * S.B1 / R1 : kInf) : 0;
    if (!std::isfinite(t1)) {
        out.p.violation = 1e6;
        return out;
    }
    double v = std::max(0.0, S.Ts * t1 + S.d1 * g1 * S.B1 - S.W1) / S.W1;
    double left = S.W2 - S.Ts * t1;
    double g2;
    if (forced_g2 >= 0) {
        g2 = forced_g2;
        // all of user 2's bits must go out by its deadline at R2
        double need = g2 > 0 ? g2 * S.B2 * (S.Ts / R2 + S.d2) : 0;
        if (g2 > 0 && R2 <= 0) need = kInf;
        if (!std::isfinite(need)) {
            out.p.violation = v + 1e6;
            return out;
        }
        v += std::max(0.0, need - left - 1e-12 * S.W2) / S.W2;  // R2 may be set to fill it exactly
    } else {
        g2 = R2 > 0 ? left / (S.B2 * (S.Ts / R2 + S.d2)) : 0;
    }
    v += std::max(0.0, -left) / S.W2 + std::max(0.0, g2 - 1 - 1e-12) + std::max(0.0, R1 - cap1) +
         std::max(0.0, R2 - cap2);
    out.p.violation = v;
    if (v > 0) return out;
    g2 = std::clamp(g2, 0.0, 1.0);
    double t2 = R2 > 0 ? g2 * S.B2 / R2 : 0;
    double P1 = t1 > 0 ? g_pow(R1, S.a1) : 0, P2 = t2 > 0 ? g_pow(R2, S.a2) : 0;
    double keep1 = S.B1 * (1 - g1), keep2 = S.B2 * (1 - g2);
    out.tx = {t1 * P1, t2 * P2};
    out.loc = {dvs(S.M1, keep1, S.Lt1), dvs(S.M2, keep2, S.Lt2)};
    out.p.energy = out.tx[0] + out.tx[1] + out.loc[0] + out.loc[1];
    out.al.tau = {0, t1, t2};
    out.al.R12 = R1;
    out.al.P12 = P1;
    out.al.R23 = R2;
    out.al.P23 = P2;
    out.al.gamma11 = g1;
    out.al.gamma23 = g2;
    out.al.retained_bits = {keep1, keep2};
    return out;
}

inline Solution from_point(const PartialPoint& pt, Scheme sch, Mode m, double Ts) {
    return wrap(pt.p, pt.al, pt.tx, pt.loc, sch, m, Ts);
}

template <class PointFn>
Solution grid_point(std::size_t n, const GridSpec& g, PointFn&& point, Scheme sch, Mode m, double Ts) {
    auto r = grid_search(n, g, [&](const std::vector<double>& u) { return point(u).p; });
    return from_point(point(r.u), sch, m, Ts);
}

// Lone partial user with the whole channel.
inline Solution single_partial(double B, double W, double L, double a, double Pb, double M,
                               double d, double Ts, const GridSpec& g, int user) {
    const double cap = capacity(a, Pb);
    auto point = [&](const std::vector<double>& u) {
        PartialPoint out;
        double R = u[0] * cap;
        double t = W / (Ts + d * R);
        double gam = t * R / B;
        out.p.violation = std::max(0.0, gam - 1 - 1e-12);
        if (out.p.violation > 0) return out;
        double tx = t * g_pow(R, a);
        double keep = std::max(0.0, B * (1 - gam));
        out.tx[user] = tx;
        out.loc[user] = dvs(M, keep, L);
        out.p.energy = tx + out.loc[user];
        if (user == 0) {
            out.al.tau = {0, t, 0};
            out.al.R12 = R;
            out.al.P12 = g_pow(R, a);
            out.al.gamma11 = gam;
        } else {
            out.al.tau = {0, 0, t};
            out.al.R23 = R;
            out.al.P23 = g_pow(R, a);
            out.al.gamma23 = gam;
        }
        out.al.retained_bits[user] = keep;
        return out;
    };
    GridSpec g1 = g;
    g1.points = {g.points_for(0)};
    return grid_point(1, g1, point, Scheme::FullMA, Mode::Partial, Ts);
}

inline Solution oracle_partial(const Setup& S, Scheme sch, const GridSpec& g) {
    const double cap1 = capacity(S.a1, S.Pb1), cap2 = capacity(S.a2, S.Pb2);
    if (sch == Scheme::TDMA) {
        return grid_point(3, g, [&](const std::vector<double>& u) {
            return partial_tdma_point(S, u[0] * cap1, u[1] * cap2, u[2]);
        }, sch, Mode::Partial, S.Ts);
    }
    if (sch != Scheme::FullMA) throw InvalidParameter("partial oracle supports FullMA and TDMA");
    // Two searches, best kept: a dense grid on the face s1 = 1 (slot 1 runs
    // to user 1's deadline) and a coarser one over the whole space.
    // u scales each rate by the most the constraints leave it: R21 by user 2's
    // bits and window over slot 1, R23 by what is left to send in what is
    // left of user 2's window.
    GridSpec face = g, whole = g;
    face.points = {g.points_for(0)};
    whole.points = {g.points_for(3)};
    Solution a = grid_point(3, face, [&](const std::vector<double>& u) {
        return partial_ma_point(S, u[0] * cap1, u[1] * cap2, u[2] * cap2);
    }, sch, Mode::Partial, S.Ts);
    Solution b = grid_point(4, whole, [&](const std::vector<double>& u) {
        double R11 = u[0] * cap1, s1 = u[3];
        double t1 = s1 * S.W1 / (S.Ts + S.d1 * R11);
        double r21 = cap2;
        if (t1 > 0) {
            r21 = std::min(r21, S.B2 / t1);
            if (S.d2 > 0) r21 = std::min(r21, std::max(0.0, (S.W2 / t1 - S.Ts) / S.d2));
        }
        double R21 = u[1] * r21;
        double rem = S.B2 - t1 * R21, left = S.W2 - t1 * (S.Ts + S.d2 * R21);
        double r23 = cap2;
        if (rem <= 0) r23 = 0;
        else if (left > S.d2 * rem) r23 = std::min(r23, rem * S.Ts / (left - S.d2 * rem));
        return partial_ma_point(S, R11, R21, u[2] * r23, s1);
    }, sch, Mode::Partial, S.Ts);
    return b.total_energy() < a.total_energy() ? b : a;
}

inline Solution oracle_mixed(const Setup& S, const Scenario& sc, Scheme sch, int binary_user,
                             const GridSpec& g) {
    const double cap1 = capacity(S.a1, S.Pb1), cap2 = capacity(S.a2, S.Pb2);
    GridSpec g2 = g;
    g2.points = {g.points_for(0)};
    // Offload branch of the binary user.
    Solution off;
    if (binary_user == 0) {
        double den = S.W1 - S.d1 * S.B1;
        if (den <= 0)
            off = Solution::infeasible(sch, Mode::Mixed, S.Ts, "oracle/infeasible");
        else if (sch == Scheme::FullMA) {
            // user 1 empties its queue in slot 1 at any rate fast enough for
            // its deadline; the slot ends when it is done
            double R11min = S.Ts * S.B1 / den;
            off = grid_point(3, g2, [&](const std::vector<double>& u) {
                double R11 = R11min + u[0] * std::max(0.0, cap1 - R11min);
                double s1 = std::min(1.0, S.B1 * (S.Ts + S.d1 * R11) / (S.W1 * R11));
                PartialPoint pt = partial_ma_point(S, R11, u[1] * cap2, u[2] * cap2, s1);
                if (R11min > cap1) pt.p.violation += (R11min - cap1) / (1 + cap1);
                return pt;
            }, sch, Mode::Mixed, S.Ts);
        } else {
            off = grid_point(2, g2, [&](const std::vector<double>& u) {
                return partial_tdma_point(S, u[0] * cap1, u[1] * cap2, 1.0);
            }, sch, Mode::Mixed, S.Ts);
        }
    } else {
        if (sch == Scheme::FullMA) {
            // R21 ranges over [rate that leaves slot 3 no more than it can
            // carry, rate that empties the queue in slot 1].
            off = grid_point(3, g2, [&](const std::vector<double>& u) {
                double R11 = u[0] * cap1;
                double t1 = u[2] * S.W1 / (S.Ts + S.d1 * R11);
                if (!(t1 > 0)) {
                    PartialPoint bad;
                    bad.p.violation = 1;
                    return bad;
                }
                double t3 = (S.W2 - S.d2 * S.B2) / S.Ts - t1;
                double lo = std::max(0.0, (S.B2 - cap2 * std::max(0.0, t3)) / t1);
                double hi = std::min(cap2, S.B2 / t1);
                if (lo > hi) {
                    PartialPoint bad;
                    bad.p.violation = 1 + (lo - hi) / (1 + cap2);
                    return bad;
                }
                double R21 = lo + u[1] * (hi - lo);
                double rest = S.B2 - t1 * R21;
                double R23 = 0;
                if (rest > 1e-6) R23 = t3 > 0 ? rest / t3 : kInf;
                if (rest < -1e-6 || !std::isfinite(R23)) {
                    PartialPoint bad;
                    bad.p.violation = 1 + std::abs(rest) / S.B2;
                    return bad;
                }
                return partial_ma_point(S, R11, R21, R23, u[2]);
            }, sch, Mode::Mixed, S.Ts);
        } else {
            // user 2 offloads everything at the rate its deadline allows
            off = grid_point(2, g2, [&](const std::vector<double>& u) {
                double R1 = u[0] * cap1, g1 = u[1];
                double t1 = g1 > 0 && R1 > 0 ? g1 * S.B1 / R1 : (g1 > 0 ? kInf : 0);
                double room = S.W2 - S.d2 * S.B2 - S.Ts * t1;
                if (!std::isfinite(t1) || room <= 0) {
                    PartialPoint bad;
                    bad.p.violation = 1 + (std::isfinite(room) ? -room / S.W2 : 1);
                    return bad;
                }
                return partial_tdma_point(S, R1, S.Ts * S.B2 / room, g1, 1.0);
            }, sch, Mode::Mixed, S.Ts);
        }
    }
    // Local branch: binary user computes locally, the other goes alone.
    Solution loc = Solution::infeasible(sch, Mode::Mixed, S.Ts, "oracle/infeasible");
    const LocalCost& lc = sc.user(binary_user).local_energy;
    if (lc.feasible()) {
        int o = 1 - binary_user;
        loc = o == 0 ? single_partial(S.B1, S.W1, S.Lt1, S.a1, S.Pb1, S.M1, S.d1, S.Ts, g, 0)
                     : single_partial(S.B2, S.W2, S.Lt2, S.a2, S.Pb2, S.M2, S.d2, S.Ts, g, 1);
        if (loc.feasible) loc.local_energy[binary_user] = lc.value();
    }
    Solution& best = off.total_energy() <= loc.total_energy() ? off : loc;
    best.scheme = sch;
    best.mode = Mode::Mixed;
    return best;
}

}  // namespace oracle_detail

inline Solution oracle_solve(const Scenario& scenario, Scheme scheme, Mode mode,
                             std::optional<GridSpec> grid = std::nullopt, int binary_user = 0) {
    using namespace oracle_detail;
    const Scenario sc = scenario.ordered_for(mode);
    const Setup S = make_setup(sc, mode);
    if (!(S.W1 > 0) || !(S.W2 > 0)) throw InfeasibleLatency("latency leaves no time for the uplink");
    std::size_t nvars = 1;
    if (mode == Mode::Binary && (scheme == Scheme::SDwts || scheme == Scheme::ID)) nvars = 4;
    // full-MA partial and mixed add the slot-1 share as a variable
    if (mode == Mode::Partial) nvars = scheme == Scheme::FullMA ? 4 : 3;
    if (mode == Mode::Mixed) nvars = scheme == Scheme::FullMA ? 3 : 2;
    GridSpec g = grid.value_or(GridSpec::defaults(nvars));
    Solution s;
    switch (mode) {
    case Mode::Binary: s = oracle_binary(S, scheme, g); break;
    case Mode::Partial: s = oracle_partial(S, scheme, g); break;
    case Mode::Mixed:
        if (binary_user != 0 && binary_user != 1) throw InvalidParameter("binary user must be 0 or 1");
        if (sc.swapped() != scenario.swapped()) binary_user = 1 - binary_user;
        s = oracle_mixed(S, sc, scheme, binary_user, g);
        break;
    }
    s.swapped = sc.swapped();
    return s;
}

// Single-user binary closed form, re-derived: whole window at the deadline rate.
inline Solution oracle_single_user(double B, double L, double a, double Pbar, const GridSpec& g) {
    using namespace oracle_detail;
    // grid over the transmit duration fraction; shorter than L only costs more
    auto point = [&](double u, Allocation* al, std::array<double, 2>* tx) {
        Probe p;
        double t = u * L;
        if (t <= 0) {
            p.violation = 1e6;
            return p;
        }
        double R = B / t;
        p.violation = std::max(0.0, R - capacity(a, Pbar));
        if (p.violation > 0) return p;
        double P = g_pow(R, a);
        p.energy = t * P;
        if (al) {
            al->tau = {0, t, 0};
            al->R12 = R;
            al->P12 = P;
            *tx = {t * P, 0};
        }
        return p;
    };
    GridSpec g1 = g;
    g1.points = {g.points_for(0)};
    auto r = grid_search(1, g1, [&](const std::vector<double>& u) { return point(u[0], nullptr, nullptr); });
    Allocation al;
    std::array<double, 2> tx{};
    Probe p = point(r.u[0], &al, &tx);
    return wrap(p, al, tx, {0, 0}, Scheme::FullMA, Mode::Binary, 1);
}

}  // namespace macoff
