#pragma once
// Solvers for indivisible tasks: single user, full multiple access, TDMA,
// sequential decoding without time sharing, independent decoding, and the
// four-way local/offload decision.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <tuple>
#include <string>
#include <vector>

#include "macoff/model.hpp"
#include "macoff/scalar_opt.hpp"

namespace macoff {

// Everything a binary-mode solver reads, in normalized units.
struct BinaryParams {
    double B1, B2;  // bits
    double L1, L2;  // uplink windows, channel uses; L1 <= L2
    double a1, a2;  // effective gains
    double P1, P2;  // power budgets
    double Ts;
};

inline BinaryParams binary_params(const Scenario& s) {
    BinaryParams p{s.user(0).bits,
                   s.user(1).bits,
                   s.latency_norm(0, Mode::Binary),
                   s.latency_norm(1, Mode::Binary),
                   s.alpha(0),
                   s.alpha(1),
                   s.link(0).power_budget,
                   s.link(1).power_budget,
                   s.symbol_interval()};
    if (p.L2 < p.L1) throw InvalidParameter("users must be ordered by uplink window");
    return p;
}

inline bool within_cap(double R, double cap) { return R <= cap * (1 + kFeasTol) + 1e-15; }
inline bool within_budget(double P, double Pbar) { return P <= Pbar * (1 + kFeasTol); }

// ---------------------------------------------------------------- single user

struct SingleUserResult {
    bool feasible = false;
    double rate = 0, power = 0, energy = kInf;
};

inline SingleUserResult single_user_core(double B, double L, double a, double Pbar) {
    if (!(L > 0)) throw InvalidParameter("uplink window must be > 0");
    double R = B / L;
    if (!within_cap(R, rate_cap(a, Pbar))) return {};
    double P = std::min(power_for_rate(R, a), Pbar);
    return {true, R, P, L * P};
}

// The lone offloader occupies the whole window; reported in slot 2.
inline Solution solve_single_user(double B, double L, double a, double Pbar, double Ts = 1) {
    SingleUserResult r = single_user_core(B, L, a, Pbar);
    if (!r.feasible) return Solution::infeasible(Scheme::FullMA, Mode::Binary, Ts, "single/infeasible");
    Solution s;
    s.feasible = true;
    s.symbol_interval = Ts;
    s.case_trace = "single";
    Allocation al;
    al.tau = {0, L, 0};
    al.R12 = r.rate;
    al.P12 = r.power;
    s.allocation = al;
    s.transmit_energy = {r.energy, 0};
    return s;
}

// ----------------------------------------------------------------------- TDMA

struct TdmaResult {
    bool feasible = false;
    double d1 = 0, d2 = 0;  // slot durations
    double R1 = 0, R2 = 0, P1 = 0, P2 = 0;
    double energy = kInf;
};

namespace detail {

// r*ln2*2^r - (2^r - 1): minus the derivative of per-slot energy w.r.t. slot length
inline double tdma_h(double r) {
    double x = r * kLn2;
    return x * std::exp(x) - std::expm1(x);
}

}  // namespace detail

// Two users sharing a window in turn: user 1 sends b1 bits within D1, user 2
// sends b2 bits after user 1 and before D2. Minimizes total energy.
inline TdmaResult tdma_core(double b1, double b2, double D1, double D2, double a1, double a2,
                            double Pb1, double Pb2) {
    TdmaResult r;
    // caps carry the feasibility slack so boundary optima stay feasible
    const double cap1 = rate_cap(a1, Pb1) * (1 + kFeasTol), cap2 = rate_cap(a2, Pb2) * (1 + kFeasTol);
    b1 = b1 <= kBitTol ? 0 : b1;
    b2 = b2 <= kBitTol ? 0 : b2;
    if (b1 == 0 && b2 == 0) {
        r.feasible = true;
        r.energy = 0;
        return r;
    }
    if (b1 == 0) {
        if (!(D2 > 0)) return r;
        double R2 = b2 / D2;
        if (R2 > cap2) return r;
        r.feasible = true;
        r.d2 = D2;
        r.R2 = R2;
        r.P2 = std::min(power_for_rate(R2, a2), Pb2);
        r.energy = D2 * r.P2;
        return r;
    }
    if (b2 == 0) {
        if (!(D1 > 0)) return r;
        double R1 = b1 / D1;
        if (R1 > cap1) return r;
        r.feasible = true;
        r.d1 = D1;
        r.R1 = R1;
        r.P1 = std::min(power_for_rate(R1, a1), Pb1);
        r.energy = D1 * r.P1;
        return r;
    }
    if (!(D1 > 0) || !(D2 > 0)) return r;
    double room = D2 - b2 / cap2;
    if (!(room > 0)) return r;
    double lo = std::max(b1 / D1, b1 / room);
    double hi = cap1;
    if (lo > hi) return r;
    auto r2_of = [&](double R1) {
        double d2 = D2 - b1 / R1;
        return d2 > 0 ? b2 / d2 : kInf;
    };
    auto phi = [&](double R1) {
        return detail::tdma_h(R1) / a1 - detail::tdma_h(r2_of(R1)) / a2;
    };
    double R1;
    if (phi(lo) >= 0)
        R1 = lo;
    else if (phi(hi) <= 0)
        R1 = hi;
    else {
        double x = lo, y = hi;
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (x + y);
            if (m <= x || m >= y) break;
            (phi(m) > 0 ? y : x) = m;
        }
        R1 = 0.5 * (x + y);
    }
    r.feasible = true;
    r.R1 = R1;
    r.d1 = b1 / R1;
    r.d2 = D2 - r.d1;
    r.R2 = b2 / r.d2;
    r.P1 = std::min(power_for_rate(R1, a1), Pb1);
    r.P2 = std::min(power_for_rate(r.R2, a2), Pb2);
    r.energy = r.d1 * r.P1 + r.d2 * r.P2;
    return r;
}

inline Solution solve_tdma(const Scenario& sc) {
    BinaryParams p = binary_params(sc);
    TdmaResult t = tdma_core(p.B1, p.B2, p.L1, p.L2, p.a1, p.a2, p.P1, p.P2);
    if (!t.feasible) return Solution::infeasible(Scheme::TDMA, Mode::Binary, p.Ts, "tdma/infeasible");
    Solution s;
    s.feasible = true;
    s.scheme = Scheme::TDMA;
    s.symbol_interval = p.Ts;
    s.swapped = sc.swapped();
    s.case_trace = "tdma";
    Allocation al;
    al.tau = {0, t.d1, t.d2};
    al.R12 = t.R1;
    al.P12 = t.P1;
    al.R23 = t.R2;
    al.P23 = t.P2;
    al.gamma23 = 1;
    s.allocation = al;
    s.transmit_energy = {t.d1 * t.P1, t.d2 * t.P2};
    return s;
}

// -------------------------------------------------------------- full MA

struct FullMaBounds {
    double r_a = 0, r_b = 0, r_c = 0, R21_stationary = 0, phi1 = 0;
    bool user1_ok = false, interval_ok = false;
    bool feasible() const { return user1_ok && interval_ok; }
    double lower() const { return std::max(0.0, r_c); }
    double upper() const { return std::min(r_a, r_b); }
};

inline FullMaBounds full_ma_bounds(const BinaryParams& p) {
    FullMaBounds f;
    const double b = p.B1 / p.L1;
    const double span = p.L2 - p.L1;
    f.r_a = rate_cap(p.a2, p.P2);
    f.r_b = std::log2(1 + p.a1 * p.P1 + p.a2 * p.P2) - b;
    f.r_c = span > 0 ? (p.B2 - span * f.r_a) / p.L1 : p.B2 / p.L1;
    f.R21_stationary = p.B2 / p.L2 - span * p.B1 / (p.L1 * p.L2);
    f.phi1 = std::log2(p.a2 / p.a1 * std::expm1(b * kLn2) + 1);
    f.user1_ok = within_cap(b, rate_cap(p.a1, p.P1));
    double scale = std::max(1.0, std::abs(f.upper()));
    f.interval_ok = f.lower() <= f.upper() + kFeasTol * scale;
    return f;
}

inline FullMaBounds full_ma_bounds(const Scenario& sc) { return full_ma_bounds(binary_params(sc)); }

// Minimum-power pair carrying (R11,R21) in the capacity region with budgets.
// Case A fixes user 1's power at its lower bound, case B at its upper bound;
// each is optimal on its side of a1 = a2.
struct SlotPowers {
    bool ok = false;
    double P11 = 0, P21 = 0;
};

inline SlotPowers full_ma_powers(char which_case, double R11, double R21, double a1, double a2,
                                 double Pb1, double Pb2) {
    const double s = std::exp2(R11 + R21);
    SlotPowers r;
    if (which_case == 'A')
        r.P11 = std::max(power_for_rate(R11, a1), (s - 1 - a2 * Pb2) / a1);
    else
        r.P11 = std::min(Pb1, std::exp2(R21) * std::expm1(R11 * kLn2) / a1);
    r.P11 = std::max(r.P11, 0.0);
    r.P21 = std::max((s - 1 - a1 * r.P11) / a2, 0.0);
    r.ok = within_budget(r.P11, Pb1) && within_budget(r.P21, Pb2) &&
           region_member(Scheme::FullMA, R11, R21, r.P11, r.P21, a1, a2, 1e-9 * (1 + R11 + R21));
    if (r.ok) {
        r.P11 = std::min(r.P11, Pb1);
        r.P21 = std::min(r.P21, Pb2);
    }
    return r;
}

// Best of both cases; `trace` receives 'A' or 'B'.
inline SlotPowers full_ma_min_powers(double R11, double R21, double a1, double a2, double Pb1,
                                     double Pb2, char* trace = nullptr) {
    SlotPowers a = full_ma_powers('A', R11, R21, a1, a2, Pb1, Pb2);
    SlotPowers b = full_ma_powers('B', R11, R21, a1, a2, Pb1, Pb2);
    bool take_b = b.ok && (!a.ok || b.P11 + b.P21 < a.P11 + a.P21);
    if (trace) *trace = take_b ? 'B' : 'A';
    return take_b ? b : a;
}

inline Solution solve_full_ma(const Scenario& sc) {
    const BinaryParams p = binary_params(sc);
    const FullMaBounds fb = full_ma_bounds(p);
    const double Ts = p.Ts;
    if (!fb.feasible()) return Solution::infeasible(Scheme::FullMA, Mode::Binary, Ts, "gate/infeasible");

    const double b = p.B1 / p.L1;
    const double span = p.L2 - p.L1;
    const bool degenerate = span <= 1e-12 * p.L2;
    const double lo = fb.lower(), hi = std::max(fb.upper(), lo);

    struct Cand {
        double R21;
        std::string tag;
        char which;
    };
    std::vector<Cand> cands;
    const double ratio = p.a1 / p.a2;
    std::vector<char> cases;
    if (ratio <= 1) cases.push_back('A');
    if (ratio >= 1) cases.push_back('B');

    if (degenerate) {
        for (char c : cases) cands.push_back({p.B2 / p.L1, std::string(1, c) + "/degenerate", c});
    } else {
        for (char c : cases) {
            double sw, st1, st2;
            if (c == 'A') {
                sw = std::log2(1 + p.a2 * p.P2 / std::exp2(b));
                st1 = fb.R21_stationary;
                st2 = p.B2 / p.L2 - span * (b + std::log2(p.a2 / p.a1)) / p.L2;
            } else {
                sw = b > 0 ? std::log2(p.a1 * p.P1 / std::expm1(b * kLn2)) : kInf;
                st1 = p.B2 / p.L2 - span * fb.phi1 / p.L2;
                st2 = fb.R21_stationary;
            }
            auto piece = [&](double x, double y, double st, const char* sub) {
                if (!(x <= y)) return;
                double v = std::clamp(st, x, y);
                std::string where = v == st ? "stationary" : (v == x ? "lower" : "upper");
                cands.push_back({v, std::string(1, c) + sub + where, c});
            };
            piece(lo, std::min(hi, sw), st1, "-I/");
            piece(std::max(lo, sw), hi, st2, "-II/");
            cands.push_back({lo, std::string(1, c) + "/lower", c});
            cands.push_back({hi, std::string(1, c) + "/upper", c});
        }
    }

    double best_e = kInf;
    Solution best;
    for (const Cand& cd : cands) {
        SlotPowers pw = full_ma_powers(cd.which, b, cd.R21, p.a1, p.a2, p.P1, p.P2);
        if (!pw.ok) continue;
        double R23 = 0, P23 = 0;
        if (!degenerate) {
            R23 = std::max(0.0, (p.B2 - p.L1 * cd.R21) / span);
            if (!within_cap(R23, fb.r_a)) continue;
            P23 = std::min(power_for_rate(R23, p.a2), p.P2);
        }
        double e1 = p.L1 * pw.P11;
        double e2 = p.L1 * pw.P21 + (degenerate ? 0 : span * P23);
        if (e1 + e2 < best_e) {
            best_e = e1 + e2;
            best = Solution{};
            best.feasible = true;
            best.scheme = Scheme::FullMA;
            best.symbol_interval = Ts;
            best.swapped = sc.swapped();
            best.case_trace = cd.tag;
            Allocation al;
            al.tau = {p.L1, 0, degenerate ? 0 : span};
            al.R11 = b;
            al.R21 = cd.R21;
            al.R23 = R23;
            al.P11 = pw.P11;
            al.P21 = pw.P21;
            al.P23 = P23;
            al.gamma11 = 1;
            al.gamma21 = std::min(1.0, p.L1 * cd.R21 / p.B2);
            al.gamma23 = 1 - al.gamma21;
            best.allocation = al;
            best.transmit_energy = {e1, e2};
        }
    }
    if (!best.feasible) return Solution::infeasible(Scheme::FullMA, Mode::Binary, Ts, "candidates/infeasible");
    return best;
}

// ------------------------------------------------- three-slot (SDwts, ID)

enum class SlotOneRule { SdOrder1, SdOrder2, Independent };

// Powers for a slot-1 rate pair. SdOrder1 decodes user 2 first (user 1 seen
// clean); SdOrder2 the reverse; Independent treats the other user as noise.
inline SlotPowers slot_one_powers(SlotOneRule rule, double R11, double R21, double a1, double a2) {
    const double x = std::exp2(R11), y = std::exp2(R21);
    const double ex = std::expm1(R11 * kLn2), ey = std::expm1(R21 * kLn2);
    SlotPowers r;
    switch (rule) {
    case SlotOneRule::SdOrder1:
        r = {true, ex / a1, x * ey / a2};
        break;
    case SlotOneRule::SdOrder2:
        r = {true, y * ex / a1, ey / a2};
        break;
    case SlotOneRule::Independent: {
        double den = 1 - ex * ey;  // 2^a + 2^b - 2^(a+b)
        if (!(den > 0)) return r;
        r = {true, y * ex / (a1 * den), x * ey / (a2 * den)};
        break;
    }
    }
    return r;
}

struct ThreeSlotPoint {
    double energy = kInf;
    double violation = kInf;  // zero iff feasible
    SlotPowers pw;
    TdmaResult inner;
    double b1 = 0, b2 = 0;
};

// x = (R11, R21, tau1). Slot 1 is shared; the leftover bits go through a
// two-user TDMA in the rest of the window.
inline ThreeSlotPoint three_slot_eval(const BinaryParams& p, SlotOneRule rule, double R11,
                                      double R21, double tau) {
    ThreeSlotPoint out;
    const double cap1 = rate_cap(p.a1, p.P1) * (1 + kFeasTol);
    const double cap2 = rate_cap(p.a2, p.P2) * (1 + kFeasTol);
    tau = std::clamp(tau, 0.0, p.L1);
    double v = 0;
    if (tau > 0) {
        if (!(R11 >= 0 && R21 >= 0)) {
            out.violation = 1e3 + std::max(0.0, -R11) + std::max(0.0, -R21);
            return out;
        }
        out.pw = slot_one_powers(rule, R11, R21, p.a1, p.a2);
        if (!out.pw.ok) {
            out.violation = 1e3 + std::expm1(R11 * kLn2) * std::expm1(R21 * kLn2);
            return out;
        }
        if (!within_budget(out.pw.P11, p.P1)) v += std::log(out.pw.P11 / p.P1);
        if (!within_budget(out.pw.P21, p.P2)) v += std::log(out.pw.P21 / p.P2);
        v += std::max(0.0, tau * R11 - p.B1 - kBitTol) / p.B1;
        v += std::max(0.0, tau * R21 - p.B2 - kBitTol) / p.B2;
    } else {
        out.pw = {true, 0, 0};
        R11 = R21 = 0;
    }
    out.b1 = std::max(0.0, p.B1 - tau * R11);
    out.b2 = std::max(0.0, p.B2 - tau * R21);
    const double D1 = p.L1 - tau, D2 = p.L2 - tau;
    const double need1 = out.b1 > kBitTol ? out.b1 / cap1 : 0;
    const double need2 = out.b2 > kBitTol ? out.b2 / cap2 : 0;
    v += std::max(0.0, need1 - D1) / p.L2;
    v += std::max(0.0, need1 + need2 - D2) / p.L2;
    out.violation = v;
    if (v > 0) return out;
    out.inner = tdma_core(out.b1, out.b2, D1, D2, p.a1, p.a2, p.P1, p.P2);
    if (!out.inner.feasible) {
        out.violation = 1e-12;
        return out;
    }
    out.energy = tau * (std::min(out.pw.P11, p.P1) + std::min(out.pw.P21, p.P2)) + out.inner.energy;
    return out;
}

struct ThreeSlotResult {
    bool feasible = false;
    double energy = kInf;
    std::array<double, 3> x{};  // (R11, R21, tau1)
    int sweeps = 0;
};

namespace detail {

// Rates carried by a slot-1 power pair under a decoding rule.
inline std::pair<double, double> rates_from_powers(SlotOneRule rule, double P11, double P21,
                                                   double a1, double a2) {
    const double s1 = a1 * P11, s2 = a2 * P21;
    switch (rule) {
    case SlotOneRule::SdOrder1: return {std::log2(1 + s1), std::log2(1 + s2 / (1 + s1))};
    case SlotOneRule::SdOrder2: return {std::log2(1 + s1 / (1 + s2)), std::log2(1 + s2)};
    case SlotOneRule::Independent:
        return {std::log2(1 + s1 / (1 + s2)), std::log2(1 + s2 / (1 + s1))};
    }
    return {0, 0};
}

// Coordinate charts for the same three-slot problem. Rates are the native
// chart; powers turn the budgets into box bounds; slot-1 bit counts turn the
// bit totals into box bounds. Cycling charts lets the descent slide along
// whichever constraint is active. The slack chart measures slot-1 bits
// above the minimum the later single-user slots force at full power, so
// moving tau keeps both window constraints exactly as tight as they were.
enum class Chart { Rates, Powers, Bits, Slack };

struct ChartMap {
    const BinaryParams& p;
    SlotOneRule rule;
    Chart chart;

    std::array<double, 3> to_rates(std::span<const double> y) const {
        const double tau = y[2];
        switch (chart) {
        case Chart::Rates: return {y[0], y[1], tau};
        case Chart::Powers: {
            auto [r1, r2] = rates_from_powers(rule, y[0], y[1], p.a1, p.a2);
            return {r1, r2, tau};
        }
        case Chart::Bits:
            return tau > 0 ? std::array<double, 3>{y[0] / tau, y[1] / tau, tau}
                           : std::array<double, 3>{0, 0, 0};
        case Chart::Slack: {
            if (!(tau > 0)) return {0, 0, 0};
            const double b1 = base1(tau) + y[0];
            const double b2 = base2(tau, b1) + y[1];
            return {b1 / tau, b2 / tau, tau};
        }
        }
        return {};
    }
    double cap1() const { return rate_cap(p.a1, p.P1); }
    double cap2() const { return rate_cap(p.a2, p.P2); }
    double base1(double tau) const { return p.B1 - cap1() * (p.L1 - tau); }
    double base2(double tau, double b1) const {
        return p.B2 - cap2() * (p.L2 - tau - (p.B1 - b1) / cap1());
    }
    std::vector<double> from_rates(const std::array<double, 3>& x) const {
        switch (chart) {
        case Chart::Rates: return {x[0], x[1], x[2]};
        case Chart::Powers: {
            SlotPowers pw = slot_one_powers(rule, x[0], x[1], p.a1, p.a2);
            return {pw.P11, pw.P21, x[2]};
        }
        case Chart::Bits: return {x[2] * x[0], x[2] * x[1], x[2]};
        case Chart::Slack: {
            const double b1 = x[2] * x[0], b2 = x[2] * x[1];
            return {b1 - base1(x[2]), b2 - base2(x[2], b1), x[2]};
        }
        }
        return {};
    }
    std::pair<double, double> bounds(std::span<const double> y, std::size_t i) const {
        const double cap1 = rate_cap(p.a1, p.P1), cap2 = rate_cap(p.a2, p.P2);
        if (i == 2) return {0.0, p.L1};
        switch (chart) {
        case Chart::Rates:
            if (i == 0) return {0.0, y[2] > 0 ? std::min(cap1, p.B1 / y[2]) : cap1};
            return {0.0, y[2] > 0 ? std::min(cap2, p.B2 / y[2]) : cap2};
        case Chart::Powers: return {0.0, i == 0 ? p.P1 : p.P2};
        case Chart::Bits: return {0.0, i == 0 ? p.B1 : p.B2};
        case Chart::Slack: {
            const double tau = y[2];
            const double base = i == 0 ? base1(tau) : base2(tau, base1(tau) + y[0]);
            const double B = i == 0 ? p.B1 : p.B2;
            return {std::max(0.0, -base), B - base};
        }
        }
        return {0, 0};
    }
};

}  // namespace detail

// Grid scan followed by golden refinement in the best cell's neighbourhood.
// Returns (value, argmin); value is +inf when no grid point is finite.
template <class G>
std::pair<double, double> scan_then_refine(G& g, double lo, double hi, int n) {
    if (!(hi > lo)) return {g(lo), lo};
    int best = -1;
    double fb = kInf;
    for (int i = 0; i <= n; ++i) {
        double v = g(lo + (hi - lo) * i / n);
        if (v < fb) fb = v, best = i;
    }
    if (best < 0) return {kInf, lo};
    const double xb = lo + (hi - lo) * best / n;
    double a = lo + (hi - lo) * std::max(0, best - 1) / n;
    double b = lo + (hi - lo) * std::min(n, best + 1) / n;
    std::tie(a, b) = detail::finite_span(g, a, b, xb);
    ScalarMin m = minimize_scalar(g, a, b, Shape::Quasiconvex, 1e-10 * (hi - lo));
    return m.value < fb ? std::pair{m.value, m.argmin} : std::pair{fb, xb};
}

inline ThreeSlotResult three_slot_descent(const BinaryParams& p, SlotOneRule rule,
                                          const std::vector<std::array<double, 3>>& seeds) {
    using detail::Chart;
    const double cap1 = rate_cap(p.a1, p.P1), cap2 = rate_cap(p.a2, p.P2);
    auto energy_at = [&](const std::array<double, 3>& x) {
        return three_slot_eval(p, rule, x[0], x[1], x[2]).energy;
    };

    std::vector<std::array<double, 3>> starts(seeds.begin(), seeds.end());
    {
        // Coarse probe in the power chart: the best few feasible points seed
        // separate descents (the problem is not convex for every decoding
        // rule), and the least-violation point rescues thin feasible sets.
        const int n = 8;
        double best_v = kInf;
        std::array<double, 3> least{};
        std::vector<std::pair<double, std::array<double, 3>>> good;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j)
                for (int k = 1; k <= n; ++k) {
                    double tau = p.L1 * k / n;
                    auto [r1, r2] = detail::rates_from_powers(rule, p.P1 * i / n, p.P2 * j / n, p.a1, p.a2);
                    r1 = std::min(r1, p.B1 / tau);
                    r2 = std::min(r2, p.B2 / tau);
                    ThreeSlotPoint pt = three_slot_eval(p, rule, r1, r2, tau);
                    if (std::isfinite(pt.energy))
                        good.push_back({pt.energy, {r1, r2, tau}});
                    else if (pt.violation < best_v) {
                        best_v = pt.violation;
                        least = {r1, r2, tau};
                    }
                }
        // With slot-1 powers fixed every window constraint is linear in tau,
        // so the feasible tau range is an interval known in closed form.
        // Thin ranges (several constraints nearly tight) are missed by the
        // grid above; probe each one at its ends and middle.
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                auto [r1, r2] = detail::rates_from_powers(rule, p.P1 * i / n, p.P2 * j / n, p.a1, p.a2);
                double lo = 0, hi = p.L1;
                auto restrict = [&](double c, double rhs) {  // c * tau <= rhs
                    if (c > 0)
                        hi = std::min(hi, rhs / c);
                    else if (c < 0)
                        lo = std::max(lo, rhs / c);
                    else if (rhs < 0)
                        hi = -1;
                };
                restrict(r1, p.B1);
                restrict(r2, p.B2);
                restrict(1 - r1 / cap1, p.L1 - p.B1 / cap1);
                restrict(1 - r1 / cap1 - r2 / cap2, p.L2 - p.B1 / cap1 - p.B2 / cap2);
                if (!(hi > lo)) continue;
                const double w = hi - lo;
                for (double tau : {lo + 1e-6 * w, lo + 0.5 * w, hi - 1e-6 * w}) {
                    if (!(tau > 0)) continue;
                    ThreeSlotPoint pt = three_slot_eval(p, rule, r1, r2, tau);
                    if (std::isfinite(pt.energy)) good.push_back({pt.energy, {r1, r2, tau}});
                }
            }
        std::sort(good.begin(), good.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t i = 0; i < good.size() && i < 3; ++i) starts.push_back(good[i].second);
        if (good.empty() && std::isfinite(best_v)) starts.push_back(least);
    }
    // Optima often sit where one user empties its queue in slot 1 while
    // other constraints are also active; no single chart slides along that
    // corner, so search the face directly with a nested 1-D scan.
    for (int u = 0; u < 2; ++u) {
        const double Bu = u == 0 ? p.B1 : p.B2, Bo = u == 0 ? p.B2 : p.B1;
        const double cap_o = u == 0 ? cap2 : cap1;
        auto pack = [&](double ru, double ro, double tau) {
            return u == 0 ? std::array<double, 3>{ru, ro, tau} : std::array<double, 3>{ro, ru, tau};
        };
        // At fixed tau the feasible rates of the other user form an interval:
        // leftover bits shrink as it rises, slot-1 power grows with it.
        auto inner = [&](double tau) -> std::pair<double, double> {
            const double ru = Bu / tau, hi = std::min(cap_o, Bo / tau);
            auto pt_at = [&](double r) {
                auto x = pack(ru, r, tau);
                return three_slot_eval(p, rule, x[0], x[1], x[2]);
            };
            auto budget_ok = [&](double r) {
                auto x = pack(ru, r, tau);
                SlotPowers pw = slot_one_powers(rule, x[0], x[1], p.a1, p.a2);
                return pw.ok && within_budget(pw.P11, p.P1) && within_budget(pw.P21, p.P2);
            };
            auto time_ok = [&](double r) {
                ThreeSlotPoint pt = pt_at(r);
                return std::isfinite(pt.energy) || !budget_ok(r);
            };
            if (!budget_ok(0)) return {kInf, 0.0};
            double r_hi = hi;
            if (!budget_ok(hi)) {
                double a = 0, b = hi;
                for (int it = 0; it < 100; ++it) (budget_ok(0.5 * (a + b)) ? a : b) = 0.5 * (a + b);
                r_hi = a;
            }
            if (!time_ok(r_hi)) return {kInf, 0.0};
            double r_lo = 0;
            if (!time_ok(0)) {
                double a = 0, b = r_hi;
                for (int it = 0; it < 100; ++it) (time_ok(0.5 * (a + b)) ? b : a) = 0.5 * (a + b);
                r_lo = b;
            }
            auto g = [&](double r) { return pt_at(r).energy; };
            return scan_then_refine(g, r_lo, r_hi, 8);
        };
        auto outer = [&](double tau) { return tau > 0 ? inner(tau).first : kInf; };
        auto [e, tau] = scan_then_refine(outer, 0.0, p.L1, 24);
        if (std::isfinite(e)) starts.push_back(pack(Bu / tau, inner(tau).second, tau));
    }

    auto descend = [&](Chart chart, std::array<double, 3> x, bool phase1, int max_iters) {
        detail::ChartMap cm{p, rule, chart};
        auto f = [&](std::span<const double> y) {
            auto r = cm.to_rates(y);
            ThreeSlotPoint pt = three_slot_eval(p, rule, r[0], r[1], r[2]);
            return phase1 ? pt.violation : pt.energy;
        };
        auto bounds = [&](std::span<const double> y, std::size_t i) { return cm.bounds(y, i); };
        DescentOptions opt;
        opt.shape = phase1 ? Shape::Quasiconvex : Shape::Convex;
        opt.max_iters = max_iters;
        if (phase1) opt.rel_tol = 0;
        std::vector<double> y = cm.from_rates(x);
        if (!std::isfinite(f(y))) return x;  // chart image lost feasibility
        DescentReport rep;
        try {
            rep = coordinate_descent(f, bounds, y, opt);
        } catch (const EmptyInterval&) {
            if (phase1) throw;
            return x;  // chart box does not contain this point
        }
        auto r = cm.to_rates(rep.minimizer);
        double before = phase1 ? three_slot_eval(p, rule, x[0], x[1], x[2]).violation : energy_at(x);
        double after = phase1 ? three_slot_eval(p, rule, r[0], r[1], r[2]).violation : energy_at(r);
        return after <= before ? r : x;
    };

    ThreeSlotResult res;
    for (auto x : starts) {
        ThreeSlotPoint pt = three_slot_eval(p, rule, x[0], x[1], x[2]);
        if (!std::isfinite(pt.energy)) {
            if (!std::isfinite(pt.violation) || pt.violation >= 1e3) continue;
            try {
                x = descend(Chart::Rates, x, true, 60);
            } catch (const EmptyInterval&) {
                continue;
            }
            if (!std::isfinite(energy_at(x))) continue;
        }
        double e = energy_at(x);
        for (int round = 0; round < 50; ++round) {
            const double e0 = e;
            for (Chart c : {Chart::Rates, Chart::Powers, Chart::Bits, Chart::Slack}) x = descend(c, x, false, 500);
            e = energy_at(x);
            if (e0 - e <= 1e-12 * std::abs(e0)) break;
        }
        if (e < res.energy) {
            res.feasible = true;
            res.energy = e;
            res.x = x;
        }
    }
    return res;
}

inline Solution three_slot_solution(const BinaryParams& p, Scheme scheme, SlotOneRule rule,
                                    const ThreeSlotResult& r, std::string trace, bool swapped) {
    if (!r.feasible) return Solution::infeasible(scheme, Mode::Binary, p.Ts, trace + "/infeasible");
    ThreeSlotPoint pt = three_slot_eval(p, rule, r.x[0], r.x[1], r.x[2]);
    const double tau = std::clamp(r.x[2], 0.0, p.L1);
    Solution s;
    s.feasible = true;
    s.scheme = scheme;
    s.symbol_interval = p.Ts;
    s.swapped = swapped;
    s.case_trace = std::move(trace);
    Allocation al;
    al.tau = {tau, pt.inner.d1, pt.inner.d2};
    if (tau > 0) {
        al.R11 = r.x[0];
        al.R21 = r.x[1];
        al.P11 = std::min(pt.pw.P11, p.P1);
        al.P21 = std::min(pt.pw.P21, p.P2);
    }
    al.R12 = pt.inner.R1;
    al.P12 = pt.inner.P1;
    al.R23 = pt.inner.R2;
    al.P23 = pt.inner.P2;
    al.gamma11 = tau * al.R11 / p.B1;
    al.gamma21 = tau * al.R21 / p.B2;
    al.gamma23 = 1 - al.gamma21;
    s.allocation = al;
    s.transmit_energy = {tau * al.P11 + pt.inner.d1 * pt.inner.P1,
                         tau * al.P21 + pt.inner.d2 * pt.inner.P2};
    return s;
}

namespace detail {

inline std::vector<std::array<double, 3>> three_slot_seeds(const BinaryParams& p) {
    const double cap1 = rate_cap(p.a1, p.P1), cap2 = rate_cap(p.a2, p.P2);
    std::vector<std::array<double, 3>> seeds{
        {0, 0, 0},                                      // pure TDMA
        {cap1 / 2, cap2 / 2, p.L1 / 2},                 // box center
        {p.B1 / p.L1, p.B2 / p.L2, p.L1},               // shared-window split
        {p.B1 / p.L1, std::min(cap2, p.B2 / p.L1), p.L1},
        {0.5 * p.B1 / p.L1, 0.5 * p.B2 / p.L2, p.L1},
    };
    return seeds;
}

}  // namespace detail

inline Solution solve_sdwts(const Scenario& sc) {
    const BinaryParams p = binary_params(sc);
    auto seeds = detail::three_slot_seeds(p);
    Solution fm = solve_full_ma(sc);
    if (fm.feasible) seeds.push_back({fm.allocation->R11, fm.allocation->R21, p.L1});
    ThreeSlotResult r1 = three_slot_descent(p, SlotOneRule::SdOrder1, seeds);
    ThreeSlotResult r2 = three_slot_descent(p, SlotOneRule::SdOrder2, seeds);
    if (r2.energy < r1.energy)
        return three_slot_solution(p, Scheme::SDwts, SlotOneRule::SdOrder2, r2, "order2", sc.swapped());
    return three_slot_solution(p, Scheme::SDwts, SlotOneRule::SdOrder1, r1, "order1", sc.swapped());
}

inline Solution solve_id(const Scenario& sc) {
    const BinaryParams p = binary_params(sc);
    ThreeSlotResult r = three_slot_descent(p, SlotOneRule::Independent, detail::three_slot_seeds(p));
    return three_slot_solution(p, Scheme::ID, SlotOneRule::Independent, r, "id", sc.swapped());
}

inline Solution solve_binary(const Scenario& sc, Scheme scheme) {
    Scenario s = sc.ordered_for(Mode::Binary);
    switch (scheme) {
    case Scheme::FullMA: return solve_full_ma(s);
    case Scheme::TDMA: return solve_tdma(s);
    case Scheme::SDwts: return solve_sdwts(s);
    case Scheme::ID: return solve_id(s);
    }
    return {};
}

// ------------------------------------------------------------ decision

struct BinaryDecision {
    bool feasible = false;
    bool offload_user1 = false, offload_user2 = false;
    // both local, only user 1 offloads, only user 2 offloads, both offload
    std::array<double, 4> case_energy{kInf, kInf, kInf, kInf};
    Solution chosen;
};

inline BinaryDecision decide_binary(const Scenario& sc, Scheme scheme) {
    Scenario s = sc.ordered_for(Mode::Binary);
    BinaryParams p = binary_params(s);
    const double El1 = s.user(0).local_energy.or_inf();
    const double El2 = s.user(1).local_energy.or_inf();
    BinaryDecision d;

    std::array<Solution, 4> sols;
    sols[0].feasible = std::isfinite(El1) && std::isfinite(El2);
    sols[0].case_trace = "local/local";

    Solution u1 = solve_single_user(p.B1, p.L1, p.a1, p.P1, p.Ts);
    if (u1.feasible && std::isfinite(El2)) sols[1] = u1;
    sols[1].case_trace = "offload/local";

    Solution u2 = solve_single_user(p.B2, p.L2, p.a2, p.P2, p.Ts);
    if (u2.feasible && std::isfinite(El1)) {
        Allocation al;
        al.tau = {0, 0, p.L2};
        al.R23 = u2.allocation->R12;
        al.P23 = u2.allocation->P12;
        al.gamma23 = 1;
        sols[2] = u2;
        sols[2].allocation = al;
        sols[2].transmit_energy = {0, u2.transmit_energy[0]};
    }
    sols[2].case_trace = "local/offload";

    sols[3] = solve_binary(s, scheme);

    for (int k = 0; k < 4; ++k) {
        Solution& x = sols[k];
        x.scheme = scheme;
        x.mode = Mode::Binary;
        x.symbol_interval = p.Ts;
        x.swapped = s.swapped();
        if (!x.feasible) continue;
        if (k == 0 || k == 2) x.local_energy[0] = El1;
        if (k == 0 || k == 1) x.local_energy[1] = El2;
        if (k == 0) x.allocation = Allocation{};
        if (k == 1) x.allocation->gamma11 = 0;
        d.case_energy[k] = x.total_energy();
    }
    int best = -1;
    for (int k = 0; k < 4; ++k)
        if (std::isfinite(d.case_energy[k]) && (best < 0 || d.case_energy[k] < d.case_energy[best]))
            best = k;
    if (best < 0) {
        d.chosen = Solution::infeasible(scheme, Mode::Binary, p.Ts, "decision/infeasible");
        return d;
    }
    d.feasible = true;
    d.offload_user1 = best == 1 || best == 3;
    d.offload_user2 = best == 2 || best == 3;
    d.chosen = sols[best];
    return d;
}

}  // namespace macoff
