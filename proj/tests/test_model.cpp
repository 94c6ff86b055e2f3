#include <gtest/gtest.h>

#include "macoff/binary_offload.hpp"
#include "macoff/partial_offload.hpp"
#include "macoff/rng.hpp"
#include "support/scenario_pool.hpp"

using namespace macoff;

namespace {

TaskSpec task(double bits, double latency, double exec = 0, double dl = 0) {
    TaskSpec t;
    t.bits = bits;
    t.latency = latency;
    t.exec_time = exec;
    t.downlink_time = dl;
    return t;
}

}  // namespace

TEST(EffectiveGain, Examples) {
    EXPECT_NEAR(effective_gain({0.1, 1}, 1e-7), 1e6, 1e-6);
    EXPECT_DOUBLE_EQ(effective_gain({1, 1}, 1), 1.0);
    EXPECT_NEAR(effective_gain({0.24, 1}, 2e-9), 1.2e8, 1e-4);
}

TEST(EffectiveGain, RejectsNonPositiveInputs) {
    EXPECT_THROW(effective_gain({0.1, 1}, 0), InvalidParameter);
    EXPECT_THROW(effective_gain({0.1, 1}, -1), InvalidParameter);
    EXPECT_THROW(effective_gain({0, 1}, 1), InvalidParameter);
}

TEST(NormalizedLatency, Examples) {
    EXPECT_NEAR(normalized_latency(task(1, 2.5, 0.5), 1e-6, Mode::Binary), 2e6, 1e-6);
    EXPECT_NEAR(normalized_latency(task(1, 2.0, 0, 0.2), 1e-6, Mode::Partial), 1.8, 1e-15);
    EXPECT_THROW(normalized_latency(task(1, 1.0, 1.0, 0.1), 1e-6, Mode::Binary), InfeasibleLatency);
}

TEST(NormalizedLatency, PartialIgnoresExecTime) {
    EXPECT_NEAR(normalized_latency(task(1, 2.0, 5.0, 0.2), 1e-6, Mode::Partial), 1.8, 1e-15);
}

TEST(RegionMember, Examples) {
    EXPECT_FALSE(region_member(Scheme::FullMA, 1, 1, 1, 1, 1, 1));
    EXPECT_TRUE(region_member(Scheme::FullMA, 1, 0.585, 1, 1, 1, 1, 1e-3));
    for (double P : {0.5, 1.0, 10.0, 1e6}) EXPECT_FALSE(region_member(Scheme::ID, 1, 1, P, P, 1, 1));
}

TEST(RegionMember, TdmaNeedsOneSilentUser) {
    EXPECT_TRUE(region_member(Scheme::TDMA, 1, 0, 1, 0, 1, 1));
    EXPECT_FALSE(region_member(Scheme::TDMA, 0.1, 0.1, 5, 5, 1, 1));
}

TEST(RegionMember, FullMaMonotoneInRates) {
    Rng r(1);
    int members = 0;
    for (int i = 0; i < 2000; ++i) {
        double a1 = r.log_uniform(0.1, 10), a2 = r.log_uniform(0.1, 10);
        double P1 = r.uniform(0, 3), P2 = r.uniform(0, 3);
        double R1 = r.uniform(0, 4), R2 = r.uniform(0, 4);
        if (!region_member(Scheme::FullMA, R1, R2, P1, P2, a1, a2)) continue;
        ++members;
        EXPECT_TRUE(region_member(Scheme::FullMA, R1 * r.uniform(), R2, P1, P2, a1, a2));
        EXPECT_TRUE(region_member(Scheme::FullMA, R1, R2 * r.uniform(), P1, P2, a1, a2));
    }
    EXPECT_GT(members, 100);
}

TEST(RegionMember, RegionsNest) {
    Rng r(2);
    int id = 0, sd = 0;
    for (int i = 0; i < 20000; ++i) {
        double a1 = r.log_uniform(0.1, 10), a2 = r.log_uniform(0.1, 10);
        double P1 = r.uniform(0, 3), P2 = r.uniform(0, 3);
        double R1 = r.uniform(0, 3), R2 = r.uniform(0, 3);
        bool in_id = region_member(Scheme::ID, R1, R2, P1, P2, a1, a2);
        bool in_sd = region_member(Scheme::SDwts, R1, R2, P1, P2, a1, a2);
        bool in_fm = region_member(Scheme::FullMA, R1, R2, P1, P2, a1, a2);
        id += in_id;
        sd += in_sd;
        if (in_id) EXPECT_TRUE(in_sd);
        if (in_sd) EXPECT_TRUE(in_fm);
    }
    EXPECT_GT(id, 100);
    EXPECT_GT(sd, id);
}

TEST(LocalEnergyDvs, Examples) {
    LocalComputeModel m{1e-18, 0};
    EXPECT_NEAR(local_energy_dvs(m, 1e6, 1), 1.0, 1e-12);
    EXPECT_EQ(local_energy_dvs(m, 0, 2), 0.0);
    EXPECT_NEAR(local_energy_dvs(m, 2e6, 2), 2.0, 1e-12);
}

TEST(LocalEnergyDvs, StrictlyConvexInRetainedBits) {
    Rng r(3);
    LocalComputeModel m{1e-18, 0};
    for (int i = 0; i < 100; ++i) {
        double a = r.uniform(0, 5e6), b = r.uniform(0, 5e6), L = r.uniform(0.5, 3);
        double mid = local_energy_dvs(m, 0.5 * (a + b), L);
        double avg = 0.5 * (local_energy_dvs(m, a, L) + local_energy_dvs(m, b, L));
        // the exact gap is 3/8 * M (a+b)(a-b)^2 / L^2
        double margin = 0.25 * m.chip_constant * (a + b) * (a - b) * (a - b) / (L * L);
        EXPECT_LE(mid, avg - margin);
    }
}

TEST(LocalCost, AbsentIsInfinite) {
    EXPECT_FALSE(LocalCost::infeasible().feasible());
    EXPECT_EQ(LocalCost::infeasible().or_inf(), kInf);
    EXPECT_EQ(LocalCost::energy(2.5).value(), 2.5);
    EXPECT_THROW(LocalCost::energy(-1), InvalidParameter);
}

TEST(Scenario, RejectsInvalidFields) {
    TaskSpec ok = task(1e6, 2);
    EXPECT_THROW(Scenario(task(0, 2), ok, {1, 1}, {1, 1}, 1, 1), InvalidParameter);
    EXPECT_THROW(Scenario(ok, ok, {0, 1}, {1, 1}, 1, 1), InvalidParameter);
    EXPECT_THROW(Scenario(ok, ok, {1, 0}, {1, 1}, 1, 1), InvalidParameter);
    EXPECT_THROW(Scenario(ok, ok, {1, 1}, {1, 1}, 0, 1), InvalidParameter);
    EXPECT_THROW(Scenario(ok, ok, {1, 1}, {1, 1}, 1, 0), InvalidParameter);
    TaskSpec bad = ok;
    bad.local_model = LocalComputeModel{0, 0};
    EXPECT_THROW(Scenario(bad, ok, {1, 1}, {1, 1}, 1, 1), InvalidParameter);
}

TEST(Scenario, OrdersUsersByLatency) {
    TaskSpec a = task(1e6, 3, 0.5), b = task(2e6, 2, 0.5);
    Scenario s(a, b, {0.3, 1e-6}, {0.1, 2e-6}, 1e-7, 1e-6);
    EXPECT_TRUE(s.swapped());
    EXPECT_LE(s.user(0).latency, s.user(1).latency);
    EXPECT_EQ(s.user(0).bits, 2e6);
    EXPECT_EQ(s.link(0).gain, 0.1);
    Scenario t(b, a, {0.1, 2e-6}, {0.3, 1e-6}, 1e-7, 1e-6);
    EXPECT_FALSE(t.swapped());
}

TEST(Scenario, SolvingIsPermutationInvariant) {
    for (int k = 0; k < 30; ++k) {
        const Scenario s = testkit::random_binary_scenario(5, k);
        const Scenario flipped(s.user(1), s.user(0), s.link(1), s.link(0), s.noise(), s.symbol_interval());
        ASSERT_NE(s.swapped(), flipped.swapped());
        for (Scheme sch : {Scheme::FullMA, Scheme::TDMA}) {
            Solution x = decide_binary(s, sch).chosen, y = decide_binary(flipped, sch).chosen;
            ASSERT_EQ(x.feasible, y.feasible);
            if (!x.feasible) continue;
            EXPECT_EQ(x.total_energy(), y.total_energy());
            // same internal order, opposite record of the input order
            EXPECT_NE(x.swapped, y.swapped);
            for (int u = 0; u < 2; ++u) EXPECT_EQ(x.energy_user(u), y.energy_user(u));
        }
    }
}

TEST(Scenario, OrderedForBinaryUsesUplinkWindows) {
    // user 2 has the longer latency but a much longer execution time
    TaskSpec a = task(1e6, 2.0, 0.1), b = task(1e6, 2.5, 1.5);
    Scenario s(a, b, {0.3, 1e-6}, {0.3, 1e-6}, 1e-7, 1e-6);
    EXPECT_FALSE(s.swapped());
    Scenario o = s.ordered_for(Mode::Binary);
    EXPECT_TRUE(o.swapped());
    EXPECT_LE(o.latency_norm(0, Mode::Binary), o.latency_norm(1, Mode::Binary));
}
