#pragma once
// Domain types, unit handling, rate-region predicates and local-energy models.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace macoff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kFeasTol = 1e-9;  // relative slack on each constraint
inline constexpr double kBitTol = 1e-6;   // bits

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InvalidParameter : public Error {
public:
    using Error::Error;
};
class InfeasibleLatency : public Error {
public:
    using Error::Error;
};
class EmptyInterval : public Error {
public:
    using Error::Error;
};

enum class Scheme { FullMA, TDMA, SDwts, ID };
enum class Mode { Binary, Partial, Mixed };

inline constexpr std::array<Scheme, 4> kAllSchemes{Scheme::FullMA, Scheme::TDMA, Scheme::SDwts,
                                                   Scheme::ID};

inline std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::FullMA: return "FullMA";
    case Scheme::TDMA: return "TDMA";
    case Scheme::SDwts: return "SDwts";
    case Scheme::ID: return "ID";
    }
    return "?";
}

inline std::string to_string(Mode m) {
    switch (m) {
    case Mode::Binary: return "binary";
    case Mode::Partial: return "partial";
    case Mode::Mixed: return "mixed";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view s) {
    for (Scheme k : kAllSchemes)
        if (s == to_string(k)) return k;
    if (s == "fullma" || s == "full_ma") return Scheme::FullMA;
    if (s == "tdma") return Scheme::TDMA;
    if (s == "sdwts") return Scheme::SDwts;
    if (s == "id") return Scheme::ID;
    throw InvalidParameter("unknown scheme '" + std::string(s) + "'");
}

inline Mode parse_mode(std::string_view s) {
    if (s == "binary") return Mode::Binary;
    if (s == "partial") return Mode::Partial;
    if (s == "mixed") return Mode::Mixed;
    throw InvalidParameter("unknown mode '" + std::string(s) + "'");
}

struct LocalComputeModel {
    double chip_constant = 0;        // M, J*s^2/bit^3
    double per_bit_cloud_time = 0;   // delta_c, s/bit

    void validate() const {
        if (!(chip_constant > 0)) throw InvalidParameter("chip_constant must be > 0");
        if (!(per_bit_cloud_time >= 0)) throw InvalidParameter("per_bit_cloud_time must be >= 0");
    }
};

// Binary-mode cost of running a task locally. Absent means the task cannot
// finish locally in time; it compares as +inf but is never stored as a float.
class LocalCost {
public:
    LocalCost() = default;
    static LocalCost infeasible() { return LocalCost{}; }
    static LocalCost energy(double e) {
        if (!(e >= 0)) throw InvalidParameter("local energy must be >= 0");
        LocalCost c;
        c.value_ = e;
        return c;
    }
    bool feasible() const { return value_.has_value(); }
    double value() const { return *value_; }
    double or_inf() const { return value_ ? *value_ : kInf; }

private:
    std::optional<double> value_;
};

struct TaskSpec {
    double bits = 0;
    double latency = 0;
    double exec_time = 0;
    double downlink_time = 0;
    LocalCost local_energy;                       // binary mode
    std::optional<LocalComputeModel> local_model; // partial mode
};

struct RadioLink {
    double gain = 0;          // |h|^2
    double power_budget = 0;  // Pbar
};

inline double effective_gain(const RadioLink& link, double noise) {
    if (!(noise > 0)) throw InvalidParameter("noise must be > 0");
    if (!(link.gain > 0)) throw InvalidParameter("channel gain must be > 0");
    return link.gain / noise;
}

// Binary: uplink window in channel uses. Partial/Mixed: seconds.
inline double normalized_latency(const TaskSpec& t, double Ts, Mode mode) {
    if (!(Ts > 0)) throw InvalidParameter("symbol interval must be > 0");
    double r = mode == Mode::Binary ? (t.latency - t.exec_time - t.downlink_time) / Ts
                                    : t.latency - t.downlink_time;
    if (!(r > 0)) throw InfeasibleLatency("latency leaves no time for the uplink");
    return r;
}

class Scenario {
public:
    Scenario() = default;

    // Orders users by latency (stable); swapped() records the permutation.
    Scenario(TaskSpec u1, TaskSpec u2, RadioLink l1, RadioLink l2, double noise, double Ts)
        : user_{std::move(u1), std::move(u2)}, link_{l1, l2}, noise_(noise), Ts_(Ts) {
        validate();
        if (user_[1].latency < user_[0].latency) swap_users();
    }

    const TaskSpec& user(int k) const { return user_[k]; }
    const RadioLink& link(int k) const { return link_[k]; }
    double noise() const { return noise_; }
    double symbol_interval() const { return Ts_; }
    bool swapped() const { return swapped_; }

    double alpha(int k) const { return effective_gain(link_[k], noise_); }
    double latency_norm(int k, Mode m) const { return normalized_latency(user_[k], Ts_, m); }

    // Solvers require the mode's uplink deadlines ordered; this fixes the
    // rare case where exec/downlink times flip the L-ordering.
    Scenario ordered_for(Mode m) const {
        Scenario s = *this;
        if (s.latency_norm(1, m) < s.latency_norm(0, m)) s.swap_users();
        return s;
    }

    Scenario with_gain(int k, double g) const {
        Scenario s = *this;
        s.link_[k].gain = g;
        s.validate();
        return s;
    }
    Scenario with_user(int k, TaskSpec t) const {
        Scenario s = *this;
        s.user_[k] = std::move(t);
        s.validate();
        if (s.user_[1].latency < s.user_[0].latency) s.swap_users();
        return s;
    }
    Scenario with_link(int k, RadioLink l) const {
        Scenario s = *this;
        s.link_[k] = l;
        s.validate();
        return s;
    }

private:
    void validate() const {
        if (!(noise_ > 0)) throw InvalidParameter("noise must be > 0");
        if (!(Ts_ > 0)) throw InvalidParameter("symbol interval must be > 0");
        for (int k = 0; k < 2; ++k) {
            const auto& u = user_[k];
            if (!(u.bits > 0)) throw InvalidParameter("bits must be > 0");
            if (!(u.latency > 0)) throw InvalidParameter("latency must be > 0");
            if (!(u.exec_time >= 0) || !(u.downlink_time >= 0))
                throw InvalidParameter("exec/downlink times must be >= 0");
            if (u.local_model) u.local_model->validate();
            if (!(link_[k].gain > 0)) throw InvalidParameter("channel gain must be > 0");
            if (!(link_[k].power_budget > 0)) throw InvalidParameter("power budget must be > 0");
        }
    }
    void swap_users() {
        std::swap(user_[0], user_[1]);
        std::swap(link_[0], link_[1]);
        swapped_ = !swapped_;
    }

    std::array<TaskSpec, 2> user_{};
    std::array<RadioLink, 2> link_{};
    double noise_ = 1;
    double Ts_ = 1;
    bool swapped_ = false;
};

// Slot 1: both users; slot 2: user 1 alone; slot 3: user 2 alone.
struct Allocation {
    std::array<double, 3> tau{};
    double R11 = 0, R21 = 0, R12 = 0, R23 = 0;
    double P11 = 0, P21 = 0, P12 = 0, P23 = 0;
    double gamma11 = 0, gamma21 = 0, gamma23 = 0;
    std::array<double, 2> retained_bits{};
};

struct Solution {
    bool feasible = false;
    Scheme scheme = Scheme::FullMA;
    Mode mode = Mode::Binary;
    std::optional<Allocation> allocation;
    std::array<double, 2> transmit_energy{};  // normalized (sum of P*tau)
    std::array<double, 2> local_energy{};
    double symbol_interval = 1;
    bool swapped = false;
    std::string case_trace;

    double energy_user(int k) const {
        return feasible ? transmit_energy[k] + local_energy[k] : kInf;
    }
    double total_energy() const { return feasible ? energy_user(0) + energy_user(1) : kInf; }
    double total_joules() const { return total_energy() * symbol_interval; }

    static Solution infeasible(Scheme s, Mode m, double Ts, std::string trace) {
        Solution r;
        r.scheme = s;
        r.mode = m;
        r.symbol_interval = Ts;
        r.case_trace = std::move(trace);
        return r;
    }
};

inline bool leq_tol(double lhs, double rhs, double tol) { return lhs <= rhs + tol; }

inline bool region_member(Scheme scheme, double R11, double R21, double P11, double P21, double a1,
                          double a2, double tol = 0) {
    auto c1 = [&] { return std::log2(1 + a1 * P11); };
    auto c2 = [&] { return std::log2(1 + a2 * P21); };
    switch (scheme) {
    case Scheme::FullMA:
        return leq_tol(R11, c1(), tol) && leq_tol(R21, c2(), tol) &&
               leq_tol(R11 + R21, std::log2(1 + a1 * P11 + a2 * P21), tol);
    case Scheme::TDMA:
        return (R11 == 0 || R21 == 0) && leq_tol(R11, c1(), tol) && leq_tol(R21, c2(), tol);
    case Scheme::SDwts: {
        bool order1 = leq_tol(R11, c1(), tol) &&
                      leq_tol(R21, std::log2(1 + a2 * P21 / (1 + a1 * P11)), tol);
        bool order2 = leq_tol(R21, c2(), tol) &&
                      leq_tol(R11, std::log2(1 + a1 * P11 / (1 + a2 * P21)), tol);
        return order1 || order2;
    }
    case Scheme::ID:
        return leq_tol(R11, std::log2(1 + a1 * P11 / (1 + a2 * P21)), tol) &&
               leq_tol(R21, std::log2(1 + a2 * P21 / (1 + a1 * P11)), tol);
    }
    return false;
}

inline double local_energy_dvs(const LocalComputeModel& m, double retained_bits, double L) {
    if (!(L > 0)) throw InvalidParameter("latency must be > 0");
    return m.chip_constant * retained_bits * retained_bits * retained_bits / (L * L);
}

// Minimum power to carry rate R alone.
inline double power_for_rate(double R, double alpha) { return std::expm1(R * kLn2) / alpha; }

inline double rate_cap(double alpha, double Pbar) { return std::log2(1 + alpha * Pbar); }

}  // namespace macoff
