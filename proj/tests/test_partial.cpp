#include <gtest/gtest.h>

#include "macoff/binary_offload.hpp"
#include "macoff/oracle.hpp"
#include "macoff/partial_offload.hpp"
#include "macoff/simlab.hpp"
#include "support/properties.hpp"
#include "support/scenario_pool.hpp"

using namespace macoff;

namespace {

Config fig78() { return load_config(MACOFF_SOURCE_DIR "/configs/fig7-8.json"); }

Scenario fig78_at(double h1) { return fig78().scenario.build().with_gain(0, h1); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(PartialGamma, UnitCancellation) {
    EXPECT_DOUBLE_EQ(partial_gamma(1, 1, 1e6, 1e-6, 0), 1.0);
    // cloud time shrinks the fraction a window can carry
    EXPECT_LT(partial_gamma(1, 1, 1e6, 1e-6, 1e-7), 1.0);
}

TEST(PartialFullMa, ZeroRatesMeanAllLocal) {
    const Scenario s = fig78_at(0.5).ordered_for(Mode::Partial);
    const PartialParams p = partial_params(s);
    detail::PartialPoint pt = detail::partial_ma_point(p, 0, 0, 0);
    ASSERT_TRUE(std::isfinite(pt.energy));
    EXPECT_EQ(pt.al.gamma11, 0);
    EXPECT_EQ(pt.al.gamma21, 0);
    EXPECT_EQ(pt.al.gamma23, 0);
    const double expected = 1e-18 * std::pow(2e6, 3) / (1.5 * 1.5) + 1e-18 * std::pow(6e6, 3) / (2.0 * 2.0);
    EXPECT_NEAR(pt.energy, expected, 1e-12 * expected);
    EXPECT_NEAR(all_local_energy(p), expected, 1e-12 * expected);
}

TEST(PartialFullMa, EqualGainsMatchTdma) {
    const Scenario s = fig78_at(0.5);
    Solution fm = solve_partial_full_ma(s), td = solve_partial_tdma(s);
    ASSERT_TRUE(fm.feasible && td.feasible);
    EXPECT_LE(rel(td.total_energy(), fm.total_energy()), 1e-6);
}

TEST(PartialTdma, UselessChannelFallsBackToLocal) {
    const Scenario s = fig78_at(1e-12).with_gain(1, 1e-12);
    Solution td = solve_partial_tdma(s);
    ASSERT_TRUE(td.feasible);
    const double all_local = all_local_energy(partial_params(s.ordered_for(Mode::Partial)));
    EXPECT_LE(rel(td.total_energy(), all_local), 1e-6);
    EXPECT_LT(td.allocation->gamma11, 1e-6);
}

TEST(PartialTdma, SecondFractionFromRemainingTime) {
    EXPECT_NEAR(partial_tdma_gamma2(2, 0.5, 1e6, 1e-6, 1, 0), 1.5, 1e-12);
    // more time than user 2 needs: it sends everything and finishes early
    PartialParams p{1e6, 1e6, 1.0, 2.0, 1.0, 2.0, 1e6, 1e6, 10e-6, 10e-6, 1e-6, 1e-18, 1e-18, 0, 0};
    detail::PartialPoint pt = detail::partial_tdma_point(p, 2, 1, 0.5);
    ASSERT_TRUE(std::isfinite(pt.energy));
    EXPECT_EQ(pt.al.gamma23, 1.0);
    EXPECT_NEAR(pt.al.tau[2], 1e6, 1e-6);
}

TEST(PartialTdma, StrongUserOneBinaryFullMaBeatsPartialTdma) {
    const Scenario s = fig78_at(2.5);
    Solution bin = decide_binary(s, Scheme::FullMA).chosen;
    Solution td = solve_partial_tdma(s);
    ASSERT_TRUE(bin.feasible && td.feasible);
    EXPECT_LT(bin.total_energy(), td.total_energy());
}

TEST(PartialSingleUser, FreeChannelOffloadsAlmostEverything) {
    Solution s = solve_partial_single_user(1e6, 1, 1e12, 1e-6, {1e-18, 0}, 1e-6);
    ASSERT_TRUE(s.feasible);
    // cubic local energy has zero marginal cost at zero bits, so the optimum
    // keeps B - tR where 3M keep^2 / L^2 = ln2 2^R / alpha (R near 1 bit/use)
    const double keep = std::sqrt(std::log(2.0) * 2 / 1e12 / 3e-18);
    EXPECT_NEAR(s.allocation->retained_bits[0], keep, 0.01 * keep);
    EXPECT_LT(s.total_energy(), 1e-3);
}

TEST(PartialSingleUser, UselessChannelKeepsEverything) {
    Solution s = solve_partial_single_user(1e6, 1, 1e-12, 1e-6, {1e-18, 0}, 1e-6);
    ASSERT_TRUE(s.feasible);
    EXPECT_LT(s.allocation->gamma11, 1e-9);
    EXPECT_NEAR(s.total_energy(), 1.0, 1e-9);
}

TEST(PartialSingleUser, MatchesFineGrid) {
    // alpha * Pbar = 2 with the budget stated in units of Ts
    const double B = 1e6, Lb = 1, Ts = 1e-6, a = 1 / Ts, Pb = 2 * Ts, M = 1e-18;
    Solution s = solve_partial_single_user(B, Lb, a, Pb, {M, 0}, Ts);
    const double hi = std::min(rate_cap(a, Pb), B * Ts / Lb);
    double best = kInf;
    for (double R = 0; R <= hi; R += 1e-5) {
        const double t = Lb / Ts, g = t * R / B;
        best = std::min(best, t * power_for_rate(R, a) + M * std::pow(B * (1 - g), 3) / (Lb * Lb));
    }
    EXPECT_LE(s.total_energy(), best * (1 + 1e-12));
    EXPECT_LE(rel(s.total_energy(), best), 1e-4);
}

TEST(PartialSingleUser, RejectsBadWindow) {
    EXPECT_THROW(solve_partial_single_user(1e6, 0, 1, 1, {1e-18, 0}, 1e-6), InvalidParameter);
}

TEST(Mixed, FreeLocalComputeWins) {
    Scenario s = fig78_at(0.8);
    TaskSpec u1 = s.user(0);
    u1.local_energy = LocalCost::energy(0);
    s = s.with_user(0, u1);
    Solution m = solve_mixed(s, 0, Scheme::FullMA);
    ASSERT_TRUE(m.feasible);
    EXPECT_EQ(m.case_trace, "mixed/local");
    EXPECT_EQ(m.local_energy[0], 0);
}

TEST(Mixed, UnreachableCloudFallsBackToLocal) {
    Scenario s = fig78_at(0.8);
    TaskSpec u1 = s.user(0);
    u1.local_energy = LocalCost::energy(5);
    u1.local_model->per_bit_cloud_time = 1.0;  // 2e6 s of cloud time alone
    s = s.with_user(0, u1);
    for (Scheme sch : {Scheme::FullMA, Scheme::TDMA}) {
        Solution m = solve_mixed(s, 0, sch);
        ASSERT_TRUE(m.feasible);
        EXPECT_EQ(m.case_trace, "mixed/local");
        EXPECT_EQ(m.local_energy[0], 5);
    }
}

TEST(Mixed, NoBranchFeasible) {
    Scenario s = fig78_at(0.8);
    TaskSpec u1 = s.user(0);
    u1.local_model->per_bit_cloud_time = 1.0;
    s = s.with_user(0, u1);
    EXPECT_FALSE(solve_mixed(s, 0, Scheme::FullMA).feasible);
}

TEST(Mixed, EqualGainsTdmaMatchesFullMa) {
    MonteCarloSpec mc = *load_config(MACOFF_SOURCE_DIR "/configs/fig9-10.json").montecarlo;
    mc.force_equal_gains = true;
    int checked = 0;
    for (std::size_t t = 0; t < 20; ++t) {
        const Scenario s = montecarlo_scenario(mc, 500, t);
        ASSERT_EQ(s.link(0).gain, s.link(1).gain);
        Solution fm = solve_for(s, Scheme::FullMA, Mode::Mixed, 0);
        Solution td = solve_for(s, Scheme::TDMA, Mode::Mixed, 0);
        ASSERT_EQ(fm.feasible, td.feasible);
        if (!fm.feasible) continue;
        ++checked;
        EXPECT_LE(rel(td.total_energy(), fm.total_energy()), 1e-6) << "trial " << t;
    }
    EXPECT_GT(checked, 5);
}

TEST(Mixed, RejectsUnsupportedSchemes) {
    EXPECT_THROW(solve_mixed(fig78_at(0.5), 0, Scheme::SDwts), InvalidParameter);
    EXPECT_THROW(solve_mixed(fig78_at(0.5), 2, Scheme::FullMA), InvalidParameter);
    EXPECT_THROW(solve(fig78_at(0.5), Scheme::ID, Mode::Partial), InvalidParameter);
}

TEST(PartialInvariants, PartialNeverWorseThanBinaryOrLocal) {
    for (int k = 0; k < 30; ++k) {
        const Scenario s = testkit::random_partial_scenario(31, k);
        const double local = all_local_energy(partial_params(s.ordered_for(Mode::Partial)));
        for (Scheme sch : {Scheme::FullMA, Scheme::TDMA}) {
            Solution p = solve(s, sch, Mode::Partial);
            ASSERT_TRUE(p.feasible);
            EXPECT_LE(p.total_energy(), local * (1 + 1e-9));
            // binary counterpart: the same users with the DVS cost as local energy
            TaskSpec u1 = s.user(0), u2 = s.user(1);
            u1.local_energy = LocalCost::energy(local_energy_dvs(*u1.local_model, u1.bits, u1.latency));
            u2.local_energy = LocalCost::energy(local_energy_dvs(*u2.local_model, u2.bits, u2.latency));
            u1.exec_time = u1.local_model->per_bit_cloud_time * u1.bits;
            u2.exec_time = u2.local_model->per_bit_cloud_time * u2.bits;
            const Scenario b(u1, u2, s.link(0), s.link(1), s.noise(), s.symbol_interval());
            Solution bin = decide_binary(b, sch).chosen;
            if (bin.feasible) EXPECT_LE(p.total_energy(), bin.total_energy() * (1 + 1e-9)) << "k=" << k;
        }
    }
}

TEST(PartialInvariants, ValidAllocationsWithActiveLatency) {
    for (int k = 0; k < 30; ++k) {
        const Scenario s = testkit::random_partial_scenario(32, k);
        const Scenario o = s.ordered_for(Mode::Partial);
        for (Scheme sch : {Scheme::FullMA, Scheme::TDMA}) {
            Solution p = solve(s, sch, Mode::Partial);
            ASSERT_TRUE(p.feasible);
            auto bad = check_solution(s, p);
            EXPECT_TRUE(bad.empty()) << to_string(sch) << " k=" << k << ": " << bad.front();
            if (sch != Scheme::FullMA) continue;
            // the shared slot runs to user 1's deadline
            const Allocation& a = *p.allocation;
            const double d1 = o.user(0).local_model->per_bit_cloud_time;
            if (a.R11 > 0)
                EXPECT_NEAR(o.symbol_interval() * a.tau[0] + d1 * a.tau[0] * a.R11, o.latency_norm(0, Mode::Partial),
                            1e-9 * o.latency_norm(0, Mode::Partial));
        }
    }
}

TEST(PartialInvariants, EqualGainTdmaMatchesFullMa) {
    int checked = 0;
    for (int k = 0; k < 60; ++k) {
        const Scenario s = testkit::random_partial_scenario(33, k, true);
        Solution fm = solve_partial_full_ma(s);
        ASSERT_TRUE(fm.feasible);
        const double lim = std::min(s.link(0).power_budget, s.link(1).power_budget);
        if (fm.allocation->P11 + fm.allocation->P21 > lim) continue;
        Solution td = solve_partial_tdma(s);
        ++checked;
        EXPECT_LE(rel(td.total_energy(), fm.total_energy()), 1e-6) << "k=" << k;
        const Allocation &f = *fm.allocation, &t = *td.allocation;
        EXPECT_NEAR(t.gamma11, f.gamma11, 1e-6) << "k=" << k;
        EXPECT_NEAR(t.gamma23, f.gamma21 + f.gamma23, 1e-6) << "k=" << k;
    }
    EXPECT_GT(checked, 20);
}

TEST(PartialInvariants, QuasiconvexAlongCoordinates) {
    testkit::Check c = testkit::partial_quasiconvexity();
    EXPECT_TRUE(c.ok) << c.note;
}

TEST(PartialInvariants, OffloadedShareGrowsWithOwnGain) {
    double prev = -1;
    for (double h1 : {0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 2.5, 3.0}) {
        Solution s = solve_partial_full_ma(fig78_at(h1));
        ASSERT_TRUE(s.feasible);
        EXPECT_GE(s.allocation->gamma11, prev - 1e-6) << "h1=" << h1;
        prev = s.allocation->gamma11;
    }
}

TEST(PartialInvariants, FullMaNeverWorseThanTdma) {
    // a TDMA schedule is a full-MA schedule with R21 = 0 and an early end to slot 1
    for (int k = 0; k < 40; ++k) {
        const Scenario s = testkit::random_partial_scenario(34, k, k % 4 < 2);
        for (int c = 0; c < 3; ++c) {
            const Mode m = c == 0 ? Mode::Partial : Mode::Mixed;
            const Solution f = solve(s, Scheme::FullMA, m, c == 2), t = solve(s, Scheme::TDMA, m, c == 2);
            EXPECT_LE(f.total_energy(), t.total_energy() * (1 + 1e-8)) << "k=" << k << " case " << c;
        }
    }
}

TEST(PartialInvariants, CloudTimeEndsSharedSlotEarly) {
    // user 1's deadline leaves user 2 almost no room after a full-length
    // slot 1, so the optimum ends slot 1 early
    const Scenario s = testkit::random_partial_scenario(1005, 69, true);
    const Solution f = solve_partial_full_ma(s), t = solve_partial_tdma(s);
    ASSERT_TRUE(f.feasible && t.feasible);
    EXPECT_EQ(f.case_trace, "partial/descent-early-slot1");
    EXPECT_LE(rel(f.total_energy(), t.total_energy()), 1e-6);
    const Scenario o = s.ordered_for(Mode::Partial);
    const Allocation& a = *f.allocation;
    const double d1 = o.user(0).local_model->per_bit_cloud_time;
    EXPECT_LT(o.symbol_interval() * a.tau[0] + d1 * a.gamma11 * o.user(0).bits,
              0.99 * o.latency_norm(0, Mode::Partial));
    auto bad = check_solution(s, f);
    EXPECT_TRUE(bad.empty()) << bad.front();
    GridSpec g;
    g.points = {40, 40, 40, 16};
    g.passes = 4;
    const Solution orc = oracle_solve(s, Scheme::FullMA, Mode::Partial, g);
    EXPECT_LE(rel(f.total_energy(), orc.total_energy()), 1e-2);
}
