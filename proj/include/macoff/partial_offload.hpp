#pragma once
// Divisible-task solvers: two-user partial offloading under full multiple
// access and TDMA, the single-user partial problem, and mixed binary/partial.
//
// Units: rates in bits per channel use, slot lengths in channel uses, and
// latency windows Lbar = latency - downlink time in seconds. A slot of tau
// channel uses occupies tau*Ts seconds; cloud execution adds delta*bits.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "macoff/binary_offload.hpp"
#include "macoff/model.hpp"
#include "macoff/scalar_opt.hpp"

namespace macoff {

struct PartialParams {
    double B1, B2;
    double Lb1, Lb2;  // uplink-plus-cloud windows, seconds
    double L1, L2;    // task latencies: local DVS deadlines, seconds
    double a1, a2;
    double P1, P2;
    double Ts;
    double M1 = 0, M2 = 0;  // DVS chip constants (0 when the user is binary)
    double d1 = 0, d2 = 0;  // cloud seconds per bit
};

inline PartialParams partial_params(const Scenario& s, Mode mode = Mode::Partial) {
    PartialParams p{s.user(0).bits,
                    s.user(1).bits,
                    s.latency_norm(0, mode),
                    s.latency_norm(1, mode),
                    s.user(0).latency,
                    s.user(1).latency,
                    s.alpha(0),
                    s.alpha(1),
                    s.link(0).power_budget,
                    s.link(1).power_budget,
                    s.symbol_interval()};
    for (int k = 0; k < 2; ++k) {
        const auto& m = s.user(k).local_model;
        if (!m) continue;
        (k == 0 ? p.M1 : p.M2) = m->chip_constant;
        (k == 0 ? p.d1 : p.d2) = m->per_bit_cloud_time;
    }
    if (p.Lb2 < p.Lb1) throw InvalidParameter("users must be ordered by latency window");
    return p;
}

// Offloaded fraction when a user transmits at rate R for its whole window.
inline double partial_gamma(double Lbar, double R, double B, double Ts, double delta) {
    return Lbar * R / (B * (Ts + delta * R));
}

// TDMA: fraction user 2 can offload at R2 in the time user 1's slot leaves.
inline double partial_tdma_gamma2(double Lbar2, double user1_seconds, double B2, double Ts, double R2,
                                  double delta2) {
    if (!(R2 > 0)) return 0;
    return (Lbar2 - user1_seconds) / (B2 * (Ts / R2 + delta2));
}

inline double all_local_energy(const PartialParams& p) {
    return p.M1 * p.B1 * p.B1 * p.B1 / (p.L1 * p.L1) + p.M2 * p.B2 * p.B2 * p.B2 / (p.L2 * p.L2);
}

namespace detail {

inline double dvs(double M, double bits, double L) { return M * bits * bits * bits / (L * L); }

inline bool fraction_ok(double g) { return g >= -kFeasTol && g <= 1 + kFeasTol; }

struct PartialPoint {
    double energy = kInf;  // +inf marks an infeasible iterate
    Allocation al;
    std::array<double, 2> tx{}, loc{};
};

// Shared slot, then user 2 alone (slot 3). Slot 1 lasts the share s1 of
// the longest user 1's window allows; s1 = 1 runs it to user 1's deadline.
inline PartialPoint partial_ma_point(const PartialParams& p, double R11, double R21, double R23,
                                     double s1 = 1) {
    PartialPoint out;
    if (!(R11 >= 0 && R21 >= 0 && R23 >= 0 && s1 >= 0 && s1 <= 1)) return out;
    const double t1 = s1 * p.Lb1 / (p.Ts + p.d1 * R11);
    const double g11 = t1 * R11 / p.B1, g21 = t1 * R21 / p.B2;
    const double left = p.Lb2 - t1 * (p.Ts + p.d2 * R21);
    if (!fraction_ok(g11) || left < -kFeasTol * p.Lb2) return out;
    const double t3 = R23 > 0 ? std::max(0.0, left) / (p.Ts + p.d2 * R23) : 0;
    const double g23 = t3 * R23 / p.B2;
    if (!fraction_ok(g21 + g23)) return out;
    SlotPowers pw{true, 0, 0};
    if (R11 > 0 && R21 > 0)
        pw = full_ma_min_powers(R11, R21, p.a1, p.a2, p.P1, p.P2);
    else if (R11 > 0)
        pw = {true, power_for_rate(R11, p.a1), 0};
    else if (R21 > 0)
        pw = {true, 0, power_for_rate(R21, p.a2)};
    const double P23 = R23 > 0 ? power_for_rate(R23, p.a2) : 0;
    if (!pw.ok || !within_budget(pw.P11, p.P1) || !within_budget(pw.P21, p.P2) ||
        !within_budget(P23, p.P2))
        return out;
    const double keep1 = std::max(0.0, p.B1 * (1 - g11)), keep2 = std::max(0.0, p.B2 * (1 - g21 - g23));
    out.tx = {t1 * pw.P11, t1 * pw.P21 + t3 * P23};
    out.loc = {dvs(p.M1, keep1, p.L1), dvs(p.M2, keep2, p.L2)};
    out.energy = out.tx[0] + out.tx[1] + out.loc[0] + out.loc[1];
    Allocation& al = out.al;
    al.tau = {t1, 0, t3};
    al.R11 = R11;
    al.R21 = R21;
    al.R23 = t3 > 0 ? R23 : 0;
    al.P11 = std::min(pw.P11, p.P1);
    al.P21 = std::min(pw.P21, p.P2);
    al.P23 = t3 > 0 ? std::min(P23, p.P2) : 0;
    al.gamma11 = std::clamp(g11, 0.0, 1.0);
    al.gamma21 = std::clamp(g21, 0.0, 1.0);
    al.gamma23 = std::clamp(g23, 0.0, 1.0 - al.gamma21);
    al.retained_bits = {keep1, keep2};
    return out;
}

// User 1 sends fraction g1 at R1 (slot 2), then user 2 fills the rest of its
// window at R2 (slot 3). forced_g2 >= 0 pins user 2's fraction instead.
inline PartialPoint partial_tdma_point(const PartialParams& p, double R1, double R2, double g1,
                                       double forced_g2 = -1) {
    PartialPoint out;
    if (!(R1 >= 0 && R2 >= 0) || !fraction_ok(g1)) return out;
    g1 = std::clamp(g1, 0.0, 1.0);
    double t1 = 0;
    if (g1 > 0) {
        if (!(R1 > 0)) return out;
        t1 = g1 * p.B1 / R1;
    }
    if (p.Ts * t1 + p.d1 * g1 * p.B1 > p.Lb1 * (1 + kFeasTol)) return out;
    const double left = p.Lb2 - p.Ts * t1;
    if (left < -kFeasTol * p.Lb2) return out;
    double g2;
    if (forced_g2 >= 0) {
        g2 = forced_g2;
        if (g2 > 0 && (!(R2 > 0) || g2 * p.B2 * (p.Ts / R2 + p.d2) > left + kFeasTol * p.Lb2))
            return out;
    } else {
        g2 = partial_tdma_gamma2(p.Lb2, p.Ts * t1, p.B2, p.Ts, R2, p.d2);
    }
    // More time than user 2 needs at R2: it sends everything and finishes early.
    if (g2 < -kFeasTol) return out;
    g2 = std::clamp(g2, 0.0, 1.0);
    const double t2 = g2 > 0 ? g2 * p.B2 / R2 : 0;
    const double P1 = t1 > 0 ? power_for_rate(R1, p.a1) : 0;
    const double P2 = t2 > 0 ? power_for_rate(R2, p.a2) : 0;
    if (!within_budget(P1, p.P1) || !within_budget(P2, p.P2)) return out;
    const double keep1 = p.B1 * (1 - g1), keep2 = p.B2 * (1 - g2);
    out.tx = {t1 * P1, t2 * P2};
    out.loc = {dvs(p.M1, keep1, p.L1), dvs(p.M2, keep2, p.L2)};
    out.energy = out.tx[0] + out.tx[1] + out.loc[0] + out.loc[1];
    Allocation& al = out.al;
    al.tau = {0, t1, t2};
    al.R12 = t1 > 0 ? R1 : 0;
    al.P12 = std::min(P1, p.P1);
    al.R23 = t2 > 0 ? R2 : 0;
    al.P23 = std::min(P2, p.P2);
    al.gamma11 = g1;
    al.gamma23 = g2;
    al.retained_bits = {keep1, keep2};
    return out;
}

// Largest fraction user 1 can send alone at R1 before its deadline.
inline double tdma_user1_max_fraction(const PartialParams& p, double R1) {
    return R1 > 0 ? std::min(1.0, partial_gamma(p.Lb1, R1, p.B1, p.Ts, p.d1)) : 0.0;
}

inline Solution partial_solution(const PartialPoint& pt, Scheme scheme, Mode mode, double Ts,
                                 std::string trace) {
    if (!std::isfinite(pt.energy)) return Solution::infeasible(scheme, mode, Ts, trace + "/infeasible");
    Solution s;
    s.feasible = true;
    s.scheme = scheme;
    s.mode = mode;
    s.symbol_interval = Ts;
    s.allocation = pt.al;
    s.transmit_energy = pt.tx;
    s.local_energy = pt.loc;
    s.case_trace = std::move(trace);
    return s;
}

// Largest R21 with user 2 still inside its window and bit budget after
// slot 1 (share s1 of user 1's window).
inline double ma_user2_max_rate(const PartialParams& p, double R11, double cap2, double s1 = 1) {
    const double t1 = s1 * p.Lb1 / (p.Ts + p.d1 * R11);
    if (!(t1 > 0)) return cap2;
    double r = std::min(cap2, p.B2 / t1);
    if (p.d2 > 0) r = std::min(r, (p.Lb2 / t1 - p.Ts) / p.d2);
    return std::max(0.0, r);
}

// Coarse grid over the box (n points per axis); the best few finite points
// join the given seeds as starts for local refinement. Returns the best
// point found.
template <class F>
std::vector<double> multistart_descent(F&& f, const std::vector<std::pair<double, double>>& box,
                                       std::vector<std::vector<double>> seeds, int n, int keep) {
    const std::size_t dim = box.size();
    std::vector<std::pair<double, std::vector<double>>> pool;
    std::vector<int> idx(dim, 0);
    std::vector<double> x(dim);
    while (true) {
        for (std::size_t i = 0; i < dim; ++i)
            x[i] = box[i].first + (box[i].second - box[i].first) * idx[i] / (n - 1);
        double v = f(std::span<const double>(x));
        if (std::isfinite(v)) pool.push_back({v, x});
        std::size_t k = 0;
        while (k < dim && ++idx[k] == n) idx[k++] = 0;
        if (k == dim) break;
    }
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (int i = 0; i < keep && i < static_cast<int>(pool.size()); ++i) seeds.push_back(pool[i].second);

    // Newton from every seed picks and polishes the basin; a tight descent
    // confirms, and takes over wherever Newton stalls.
    std::vector<double> best;
    double fbest = kInf;
    for (auto& s : seeds) {
        if (!std::isfinite(f(std::span<const double>(s)))) continue;
        NewtonReport rep = newton_polish(f, box, s);
        if (rep.final_objective < fbest) {
            fbest = rep.final_objective;
            best = rep.minimizer;
        }
    }
    if (best.empty()) return best;
    auto bounds = [&](std::span<const double>, std::size_t i) { return box[i]; };
    DescentOptions opt;
    opt.rel_tol = 1e-12;
    return coordinate_descent(f, bounds, best, opt).minimizer;
}

// Re-run coordinate descent on the full-MA rates through power charts, one
// per successive-decoding order: with slot-1 powers as coordinates a
// saturated budget is a box face the descent can slide along.
template <class F>
std::vector<double> ma_chart_cycle(F&& f, const PartialParams& p, std::vector<double> x,
                                   const std::vector<std::pair<double, double>>& rate_box) {
    auto fx = [&](const std::vector<double>& r) { return f(std::span<const double>(r)); };
    double best = fx(x);
    if (!std::isfinite(best)) return x;
    auto run = [&](auto to_rates, std::vector<double> y, const std::vector<std::pair<double, double>>& box) {
        auto g = [&](std::span<const double> v) { return fx(to_rates(v)); };
        if (!std::isfinite(g(y))) return;
        auto bounds = [&](std::span<const double>, std::size_t i) { return box[i]; };
        DescentOptions opt;
        opt.rel_tol = 1e-12;
        DescentReport rep;
        try {
            rep = coordinate_descent(g, bounds, y, opt);
        } catch (const EmptyInterval&) {
            return;
        }
        std::vector<double> r = to_rates(rep.minimizer);
        double v = fx(r);
        if (v < best) best = v, x = r;
    };
    for (int round = 0; round < 30; ++round) {
        const double start = best;
        run([](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); }, x, rate_box);
        for (int order = 0; order < 2; ++order) {
            // order 0: user 1 decoded last (clean); order 1: user 2 decoded last.
            auto to_rates = [&, order](std::span<const double> v) {
                const double s1 = p.a1 * v[0], s2 = p.a2 * v[1];
                std::vector<double> r(v.begin(), v.end());
                r[0] = order == 0 ? std::log2(1 + s1) : std::log2(1 + s1 / (1 + s2));
                r[1] = order == 0 ? std::log2(1 + s2 / (1 + s1)) : std::log2(1 + s2);
                return r;
            };
            std::vector<double> y = x;
            const double e1 = std::expm1(x[0] * kLn2), e2 = std::expm1(x[1] * kLn2);
            y[0] = (order == 0 ? e1 : std::exp2(x[1]) * e1) / p.a1;
            y[1] = (order == 0 ? std::exp2(x[0]) * e2 : e2) / p.a2;
            std::vector<std::pair<double, double>> box = rate_box;
            box[0] = {0.0, p.P1};
            box[1] = {0.0, p.P2};
            run(to_rates, y, box);
        }
        if (!(best < start - 1e-13 * std::abs(start))) break;
    }
    return x;
}

}  // namespace detail

// ---------------------------------------------------------------- two users

inline Solution solve_partial_tdma(const Scenario& sc);

inline Solution solve_partial_full_ma(const Scenario& sc) {
    const Scenario s = sc.ordered_for(Mode::Partial);
    if (!s.user(0).local_model || !s.user(1).local_model)
        throw InvalidParameter("partial mode needs a local compute model for both users");
    const PartialParams p = partial_params(s);
    const double cap1 = rate_cap(p.a1, p.P1), cap2 = rate_cap(p.a2, p.P2);
    auto f = [&](std::span<const double> x) { return detail::partial_ma_point(p, x[0], x[1], x[2]).energy; };
    // Coordinates (R11, w, R23) with R21 = w times its largest admissible
    // value: with cloud time the edge where slot 1 exhausts user 2's window
    // is curved in rates but is the face w = 1 here.
    auto to_rates = [&](std::span<const double> y) {
        return std::vector<double>{y[0], y[1] * detail::ma_user2_max_rate(p, y[0], cap2), y[2]};
    };
    auto fw = [&](std::span<const double> y) { return f(to_rates(y)); };
    std::vector<std::vector<double>> seeds{{0, 0, 0}};
    const std::vector<std::pair<double, double>> box{{0, cap1}, {0, cap2}, {0, cap2}};
    auto x = to_rates(detail::multistart_descent(fw, {{0, cap1}, {0, 1}, {0, cap2}}, seeds, 7, 3));
    x = detail::ma_chart_cycle(f, p, x, box);
    detail::PartialPoint best = detail::partial_ma_point(p, x[0], x[1], x[2]);
    std::string trace = "partial/descent";

    // Cloud time makes user 1's deadline a poor end for slot 1: finishing
    // early hands user 2 the channel sooner. Search the slot-1 share too,
    // seeded from the reduced optimum and from the TDMA optimum, which is a
    // full-MA schedule with R21 = 0.
    if (p.d1 > 0 || p.d2 > 0) {
        auto f4 = [&](std::span<const double> r) {
            return detail::partial_ma_point(p, r[0], r[1], r[2], r[3]).energy;
        };
        auto to_rates4 = [&](std::span<const double> y) {
            return std::vector<double>{y[0], y[1] * detail::ma_user2_max_rate(p, y[0], cap2, y[3]), y[2], y[3]};
        };
        auto fw4 = [&](std::span<const double> y) { return f4(to_rates4(y)); };
        auto to_w = [&](const std::vector<double>& r) {
            const double m = detail::ma_user2_max_rate(p, r[0], cap2, r[3]);
            return std::vector<double>{r[0], m > 0 ? std::min(1.0, r[1] / m) : 0.0, r[2], r[3]};
        };
        std::vector<std::vector<double>> seeds4{to_w({x[0], x[1], x[2], 1.0})};
        const Solution td = solve_partial_tdma(s);
        if (td.feasible) {
            const Allocation& a = *td.allocation;
            const double t1 = a.tau[1], R1 = t1 > 0 ? a.R12 : 0;
            const double s1 = R1 > 0 ? std::min(1.0, t1 * (p.Ts + p.d1 * R1) / p.Lb1) : 0.0;
            const double left = p.Lb2 - p.Ts * t1, bits2 = a.gamma23 * p.B2;
            const double R23 = bits2 > 0 && left > p.d2 * bits2 ? bits2 * p.Ts / (left - p.d2 * bits2) : 0.0;
            seeds4.push_back(to_w({R1, 0.0, std::min(R23, cap2), s1}));
        }
        const std::vector<std::pair<double, double>> wbox{{0, cap1}, {0, 1}, {0, cap2}, {0, 1}};
        auto y = detail::multistart_descent(fw4, wbox, seeds4, 5, 2);
        if (!y.empty()) {
            auto r = detail::ma_chart_cycle(f4, p, to_rates4(y), {{0, cap1}, {0, cap2}, {0, cap2}, {0, 1}});
            detail::PartialPoint cand = detail::partial_ma_point(p, r[0], r[1], r[2], r[3]);
            if (cand.energy < best.energy) {
                best = cand;
                trace = "partial/descent-early-slot1";
            }
        }
    }
    Solution out = detail::partial_solution(best, Scheme::FullMA, Mode::Partial, p.Ts, trace);
    out.swapped = s.swapped();
    return out;
}

inline Solution solve_partial_tdma(const Scenario& sc) {
    const Scenario s = sc.ordered_for(Mode::Partial);
    if (!s.user(0).local_model || !s.user(1).local_model)
        throw InvalidParameter("partial mode needs a local compute model for both users");
    const PartialParams p = partial_params(s);
    const double cap1 = rate_cap(p.a1, p.P1), cap2 = rate_cap(p.a2, p.P2);
    // Coordinates (R1, R2, v): user 1 sends the share v of the most it can
    // at R1 within its window, so the latency edge is the face v = 1.
    auto point = [&](std::span<const double> x) {
        return detail::partial_tdma_point(p, x[0], x[1], x[2] * detail::tdma_user1_max_fraction(p, x[0]));
    };
    auto f = [&](std::span<const double> x) { return point(x).energy; };
    std::vector<std::vector<double>> seeds{{0, 0, 0}};
    auto x = detail::multistart_descent(f, {{0, cap1}, {0, cap2}, {0, 1}}, seeds, 7, 3);
    Solution out = detail::partial_solution(point(x), Scheme::TDMA, Mode::Partial, p.Ts, "partial/descent");
    out.swapped = s.swapped();
    return out;
}

// ------------------------------------------------------------- single user

// One user with the channel to itself; `user` picks the slot it reports in
// (0: slot 2, 1: slot 3). dvs_deadline defaults to Lbar.
inline Solution solve_partial_single_user(double B, double Lbar, double alpha, double Pbar,
                                          const LocalComputeModel& model, double Ts,
                                          std::optional<double> dvs_deadline = std::nullopt,
                                          int user = 0) {
    if (!(Lbar > 0)) throw InvalidParameter("latency window must be > 0");
    if (!(B > 0) || !(alpha > 0) || !(Pbar > 0) || !(Ts > 0))
        throw InvalidParameter("single-user partial: parameters must be > 0");
    model.validate();
    const double L = dvs_deadline.value_or(Lbar);
    double hi = rate_cap(alpha, Pbar);
    if (Lbar > model.per_bit_cloud_time * B) hi = std::min(hi, B * Ts / (Lbar - model.per_bit_cloud_time * B));
    auto energy = [&](double R) {
        const double t = Lbar / (Ts + model.per_bit_cloud_time * R);
        const double keep = std::max(0.0, B - t * R);
        return t * power_for_rate(R, alpha) + detail::dvs(model.chip_constant, keep, L);
    };
    ScalarMin m = minimize_scalar(energy, 0.0, hi, Shape::Convex);
    const double R = m.argmin;
    const double t = Lbar / (Ts + model.per_bit_cloud_time * R);
    const double gam = std::min(1.0, t * R / B);
    const double P = power_for_rate(R, alpha);
    Solution s;
    s.feasible = true;
    s.mode = Mode::Partial;
    s.symbol_interval = Ts;
    s.case_trace = R == 0 ? "single/local" : R == hi ? "single/endpoint" : "single/stationary";
    Allocation al;
    if (R > 0) {
        if (user == 0) {
            al.tau = {0, t, 0};
            al.R12 = R;
            al.P12 = P;
            al.gamma11 = gam;
        } else {
            al.tau = {0, 0, t};
            al.R23 = R;
            al.P23 = P;
            al.gamma23 = gam;
        }
    }
    al.retained_bits[user] = B * (1 - gam);
    s.allocation = al;
    s.transmit_energy[user] = R > 0 ? t * P : 0;
    s.local_energy[user] = detail::dvs(model.chip_constant, B * (1 - gam), L);
    return s;
}

// ------------------------------------------------------------------ mixed

// One user's task is indivisible (offloaded whole or run locally at its
// LocalCost), the other's is divisible. Scheme FullMA or TDMA.
inline Solution solve_mixed(const Scenario& sc, int which_user_binary, Scheme scheme = Scheme::FullMA) {
    if (which_user_binary != 0 && which_user_binary != 1)
        throw InvalidParameter("binary user must be 0 or 1");
    if (scheme != Scheme::FullMA && scheme != Scheme::TDMA)
        throw InvalidParameter("mixed mode supports FullMA and TDMA");
    const Scenario s = sc.ordered_for(Mode::Mixed);
    const int bu = s.swapped() != sc.swapped() ? 1 - which_user_binary : which_user_binary;
    const int pu = 1 - bu;
    if (!s.user(pu).local_model) throw InvalidParameter("the divisible user needs a local compute model");
    const PartialParams p = partial_params(s, Mode::Mixed);
    const double cap1 = rate_cap(p.a1, p.P1), cap2 = rate_cap(p.a2, p.P2);

    // Offload branch: the binary user's whole task goes out.
    detail::PartialPoint off;
    std::string off_trace;
    if (bu == 0) {
        const double den = p.Lb1 - p.d1 * p.B1;
        if (den > 0 && scheme == Scheme::FullMA) {
            // Slowest R11 meets user 1's deadline exactly; with cloud time a
            // faster one that ends slot 1 early is also a candidate.
            const double R11min = p.Ts * p.B1 / den;
            auto point = [&](double R11, double R21, double R23) {
                const double s1 = p.B1 * (p.Ts + p.d1 * R11) / (p.Lb1 * R11);
                return detail::partial_ma_point(p, R11, R21, R23, std::min(1.0, s1));
            };
            std::vector<double> x;
            if (p.d1 > 0 || p.d2 > 0) {
                if (R11min <= cap1) {
                    auto f = [&](std::span<const double> y) { return point(y[0], y[1], y[2]).energy; };
                    x = detail::multistart_descent(f, {{R11min, cap1}, {0, cap2}, {0, cap2}}, {{R11min, 0, 0}}, 7, 3);
                }
            } else {
                auto f = [&](std::span<const double> y) { return point(R11min, y[0], y[1]).energy; };
                x = detail::multistart_descent(f, {{0, cap2}, {0, cap2}}, {{0, 0}}, 9, 3);
                if (!x.empty()) x.insert(x.begin(), R11min);
            }
            if (!x.empty()) off = point(x[0], x[1], x[2]);
        } else if (den > 0) {
            auto f = [&](std::span<const double> x) { return detail::partial_tdma_point(p, x[0], x[1], 1.0).energy; };
            auto x = detail::multistart_descent(f, {{0, cap1}, {0, cap2}}, {}, 9, 3);
            if (!x.empty()) off = detail::partial_tdma_point(p, x[0], x[1], 1.0);
        }
        off_trace = "mixed/offload";
    } else {
        const double room = p.Lb2 - p.d2 * p.B2;  // seconds of channel time user 2 may use
        if (room > 0 && scheme == Scheme::FullMA) {
            // User 2 must empty its queue: R23 follows from (R11, R21). The
            // second coordinate places R21 between the least rate that leaves
            // slot 3 a feasible load and the most slot 1 can take.
            // With cloud time, a third coordinate ends slot 1 before user 1's
            // deadline (share s1 of its window).
            auto point = [&](double R11, double u, double s1 = 1) {
                const double t1 = s1 * p.Lb1 / (p.Ts + p.d1 * R11);
                if (!(t1 > 0)) return detail::PartialPoint{};
                const double t3 = room / p.Ts - t1;
                const double lo = std::max(0.0, (p.B2 - cap2 * std::max(0.0, t3)) / t1);
                const double hi = std::min(cap2, p.B2 / t1);
                if (lo > hi) return detail::PartialPoint{};
                const double R21 = lo + u * (hi - lo);
                const double rest = std::max(0.0, p.B2 - t1 * R21);
                if (rest > kBitTol && !(t3 > 0)) return detail::PartialPoint{};
                const double R23 = rest > kBitTol ? rest / t3 : 0;
                if (!within_cap(R23, cap2)) return detail::PartialPoint{};
                return detail::partial_ma_point(p, R11, R21, std::min(R23, cap2), s1);
            };
            if (p.d1 > 0 || p.d2 > 0) {
                auto f = [&](std::span<const double> x) { return point(x[0], x[1], x[2]).energy; };
                auto x = detail::multistart_descent(f, {{0, cap1}, {0, 1}, {0, 1}}, {}, 7, 3);
                if (!x.empty()) off = point(x[0], x[1], x[2]);
            } else {
                auto f = [&](std::span<const double> x) { return point(x[0], x[1]).energy; };
                auto x = detail::multistart_descent(f, {{0, cap1}, {0, 1}}, {}, 9, 3);
                if (!x.empty()) off = point(x[0], x[1]);
            }
        } else if (room > 0) {
            // User 2 needs B2/cap2 channel uses at least; user 1 sends the
            // share v of what fits in its window and the time left over.
            const double t1_max = (room - p.Ts * p.B2 / cap2) / p.Ts;
            auto point = [&](double R1, double v) {
                if (!(t1_max >= 0)) return detail::PartialPoint{};
                const double g1 =
                    v * std::min(detail::tdma_user1_max_fraction(p, R1), R1 > 0 ? t1_max * R1 / p.B1 : 0.0);
                const double t1 = g1 > 0 ? g1 * p.B1 / R1 : 0;
                const double r = room - p.Ts * t1;
                if (!(r > 0)) return detail::PartialPoint{};
                return detail::partial_tdma_point(p, R1, p.Ts * p.B2 / r, g1, 1.0);
            };
            auto f = [&](std::span<const double> x) { return point(x[0], x[1]).energy; };
            auto x = detail::multistart_descent(f, {{0, cap1}, {0, 1}}, {{0, 0}}, 9, 3);
            if (!x.empty()) off = point(x[0], x[1]);
        }
        off_trace = "mixed/offload";
    }

    // Local branch: binary user computes locally; the other goes alone.
    detail::PartialPoint loc;
    const LocalCost& lc = s.user(bu).local_energy;
    if (lc.feasible()) {
        const TaskSpec& t = s.user(pu);
        Solution su = solve_partial_single_user(t.bits, pu == 0 ? p.Lb1 : p.Lb2, pu == 0 ? p.a1 : p.a2,
                                                pu == 0 ? p.P1 : p.P2, *t.local_model, p.Ts, t.latency, pu);
        loc.al = *su.allocation;
        loc.tx = su.transmit_energy;
        loc.loc = su.local_energy;
        loc.loc[bu] = lc.value();
        loc.energy = loc.tx[0] + loc.tx[1] + loc.loc[0] + loc.loc[1];
    }

    const bool take_off = off.energy <= loc.energy;
    Solution out = take_off ? detail::partial_solution(off, scheme, Mode::Mixed, p.Ts, off_trace)
                            : detail::partial_solution(loc, scheme, Mode::Mixed, p.Ts, "mixed/local");
    if (out.feasible && take_off) out.allocation->retained_bits[bu] = 0;
    out.swapped = s.swapped();
    return out;
}

// ------------------------------------------------------------- dispatcher

inline Solution solve(const Scenario& sc, Scheme scheme, Mode mode, int binary_user = 0) {
    switch (mode) {
    case Mode::Binary: return solve_binary(sc, scheme);
    case Mode::Partial:
        if (scheme == Scheme::FullMA) return solve_partial_full_ma(sc);
        if (scheme == Scheme::TDMA) return solve_partial_tdma(sc);
        throw InvalidParameter("partial mode supports FullMA and TDMA");
    case Mode::Mixed: return solve_mixed(sc, binary_user, scheme);
    }
    throw InvalidParameter("unknown mode");
}

}  // namespace macoff
