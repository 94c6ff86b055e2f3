#pragma once
// Experiment harness: channel sampling, JSON configs, sweeps, Monte Carlo
// fading runs, CSV round-trip and re-validation of emitted solutions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "macoff/binary_offload.hpp"
#include "macoff/model.hpp"
#include "macoff/partial_offload.hpp"
#include "macoff/rng.hpp"

namespace macoff {

// ------------------------------------------------------------- channels

inline double channel_gain(double distance, double exponent, double fading) {
    if (!(distance > 0)) throw InvalidParameter("distance must be > 0");
    if (!(exponent > 0)) throw InvalidParameter("path-loss exponent must be > 0");
    return std::pow(distance, -exponent) * fading;
}

// Rayleigh amplitude fading: the power gain is standard exponential.
inline double sample_channel(double distance, double exponent, Rng& rng) {
    return channel_gain(distance, exponent, rng.exponential());
}

// ---------------------------------------------------------------- config

class ConfigError : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

enum class PowerUnit { Normalized, Watts };

// Raw two-user description in config order (user 1 first as written).
struct ScenarioConfig {
    std::array<TaskSpec, 2> users{};
    std::array<RadioLink, 2> links{};
    std::array<std::optional<double>, 2> distance{};
    double noise = 0;  // Watts
    double symbol_interval = 1e-6;
    double path_loss_exponent = 3;

    Scenario build() const {
        return Scenario(users[0], users[1], links[0], links[1], noise, symbol_interval);
    }
};

enum class SweepParam { H1, H2, L1, L2, B1, B2, Pbar1, Pbar2, Distance1 };

inline std::string to_string(SweepParam p) {
    switch (p) {
    case SweepParam::H1: return "h1_sq";
    case SweepParam::H2: return "h2_sq";
    case SweepParam::L1: return "L1";
    case SweepParam::L2: return "L2";
    case SweepParam::B1: return "B1";
    case SweepParam::B2: return "B2";
    case SweepParam::Pbar1: return "Pbar1";
    case SweepParam::Pbar2: return "Pbar2";
    case SweepParam::Distance1: return "distance1";
    }
    return "?";
}

inline SweepParam parse_sweep_param(const std::string& s) {
    for (SweepParam p : {SweepParam::H1, SweepParam::H2, SweepParam::L1, SweepParam::L2, SweepParam::B1,
                         SweepParam::B2, SweepParam::Pbar1, SweepParam::Pbar2, SweepParam::Distance1})
        if (s == to_string(p)) return p;
    throw ConfigError("sweep.parameter: unknown parameter '" + s + "'");
}

struct SweepSpec {
    ScenarioConfig base;
    SweepParam parameter = SweepParam::H1;
    std::vector<double> values;  // in config units
    std::vector<Scheme> schemes;
    std::vector<Mode> modes;
    int binary_user = 0;       // config order
    double power_scale = 1;    // config power unit -> Watts
};

struct MonteCarloSpec {
    ScenarioConfig base;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    double path_loss_exponent = 3;
    std::vector<double> d1;  // one aggregate block per value
    double d2 = 0;
    std::vector<Scheme> schemes;
    std::vector<Mode> modes;
    int binary_user = 0;
    bool feasibility_filter = true;
    bool force_equal_gains = false;  // user 2 reuses user 1's sampled gain
};

struct Config {
    ScenarioConfig scenario;
    PowerUnit power_unit = PowerUnit::Normalized;
    double power_scale = 1;
    std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
    std::vector<Mode> modes{Mode::Binary};
    int binary_user = 0;
    std::optional<SweepSpec> sweep;
    std::optional<MonteCarloSpec> montecarlo;
    std::vector<std::string> warnings;

    bool has_fixed_gains() const { return scenario.links[0].gain > 0 && scenario.links[1].gain > 0; }
    Scenario scenario_base() const { return scenario.build(); }
};

namespace simlab_detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(where + (where.empty() ? "" : ".") + it.key() + ": unknown key");
    }
}

inline double number(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + "." + key + ": must be finite");
    return x;
}

inline double positive(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + "." + key + ": required");
    double x = number(obj, key, where);
    if (!(x > 0)) throw ConfigError(where + "." + key + ": must be > 0");
    return x;
}

inline double nonneg_or(const json& obj, const char* key, const std::string& where, double dflt) {
    if (!obj.contains(key)) return dflt;
    double x = number(obj, key, where);
    if (!(x >= 0)) throw ConfigError(where + "." + key + ": must be >= 0");
    return x;
}

inline std::vector<double> number_list(const json& v, const std::string& where) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
        return out;
    }
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a number or non-empty array");
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + ": expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::vector<double> values_or_range(const json& j, const std::string& where) {
    if (j.contains("values") == j.contains("range"))
        throw ConfigError(where + ": give exactly one of 'values' or 'range'");
    if (j.contains("values")) {
        if (j.contains("steps") || j.contains("spacing"))
            throw ConfigError(where + ": 'steps'/'spacing' only apply to 'range'");
        return number_list(j.at("values"), where + ".values");
    }
    auto r = number_list(j.at("range"), where + ".range");
    if (r.size() != 2) throw ConfigError(where + ".range: expected [first, last]");
    if (!j.contains("steps") || !j.at("steps").is_number_integer() || j.at("steps").get<long>() < 1)
        throw ConfigError(where + ".steps: required positive integer with 'range'");
    const long n = j.at("steps").get<long>();
    const std::string spacing = j.value("spacing", std::string("linear"));
    if (spacing != "linear" && spacing != "log")
        throw ConfigError(where + ".spacing: expected 'linear' or 'log'");
    if (spacing == "log" && !(r[0] > 0 && r[1] > 0))
        throw ConfigError(where + ".range: log spacing needs positive ends");
    std::vector<double> out;
    for (long i = 0; i < n; ++i) {
        double t = n == 1 ? 0.0 : double(i) / double(n - 1);
        out.push_back(spacing == "log" ? std::exp(std::log(r[0]) + t * (std::log(r[1]) - std::log(r[0])))
                                       : r[0] + t * (r[1] - r[0]));
    }
    return out;
}

template <class T, class Parse>
std::vector<T> name_list(const json& v, const std::string& where, Parse parse) {
    std::vector<T> out;
    auto one = [&](const json& x) {
        if (!x.is_string()) throw ConfigError(where + ": expected strings");
        try {
            out.push_back(parse(x.get<std::string>()));
        } catch (const InvalidParameter& e) {
            throw ConfigError(where + ": " + e.what());
        }
    };
    if (v.is_array()) {
        if (v.empty()) throw ConfigError(where + ": must not be empty");
        for (const auto& x : v) one(x);
    } else {
        one(v);
    }
    return out;
}

}  // namespace simlab_detail

inline void check_supported(const std::vector<Scheme>& schemes, const std::vector<Mode>& modes) {
    for (Mode m : modes)
        for (Scheme s : schemes)
            if (m != Mode::Binary && (s == Scheme::SDwts || s == Scheme::ID))
                throw ConfigError("schemes: " + to_string(s) + " is only defined for binary mode, not " +
                                  to_string(m));
}

// Units: times in seconds, bits in bits, powers and noise either in Watts or
// normalized (value x means x*T_s Watts), energies in Joules.
inline Config parse_config(const nlohmann::json& j) {
    using namespace simlab_detail;
    reject_unknown(j, "", {"symbol_interval", "power_unit", "noise", "path_loss_exponent", "users", "schemes",
                           "mode", "binary_user", "sweep", "montecarlo", "description"});
    Config c;
    ScenarioConfig& sc = c.scenario;
    sc.symbol_interval = j.contains("symbol_interval") ? positive(j, "symbol_interval", "config") : 1e-6;
    const std::string unit = j.value("power_unit", std::string("normalized"));
    if (unit == "normalized")
        c.power_unit = PowerUnit::Normalized, c.power_scale = sc.symbol_interval;
    else if (unit == "watts")
        c.power_unit = PowerUnit::Watts, c.power_scale = 1;
    else
        throw ConfigError("power_unit: expected 'normalized' or 'watts'");
    sc.noise = positive(j, "noise", "config") * c.power_scale;
    sc.path_loss_exponent =
        j.contains("path_loss_exponent") ? positive(j, "path_loss_exponent", "config") : 3.0;

    if (!j.contains("users") || !j.at("users").is_array() || j.at("users").size() != 2)
        throw ConfigError("users: expected an array of exactly two users");
    for (int k = 0; k < 2; ++k) {
        const json& u = j.at("users")[k];
        const std::string w = "users[" + std::to_string(k) + "]";
        reject_unknown(u, w, {"bits", "latency", "exec_time", "downlink_time", "gain", "distance",
                              "power_budget", "local_energy", "chip_constant", "per_bit_cloud_time"});
        TaskSpec& t = sc.users[k];
        t.bits = positive(u, "bits", w);
        t.latency = positive(u, "latency", w);
        t.exec_time = nonneg_or(u, "exec_time", w, 0);
        t.downlink_time = nonneg_or(u, "downlink_time", w, 0);
        if (u.contains("local_energy") && !u.at("local_energy").is_null())
            t.local_energy = LocalCost::energy(nonneg_or(u, "local_energy", w, 0));
        if (u.contains("chip_constant")) {
            LocalComputeModel m;
            m.chip_constant = positive(u, "chip_constant", w);
            m.per_bit_cloud_time = nonneg_or(u, "per_bit_cloud_time", w, 0);
            t.local_model = m;
        } else if (u.contains("per_bit_cloud_time")) {
            throw ConfigError(w + ".per_bit_cloud_time: requires chip_constant");
        }
        sc.links[k].power_budget = positive(u, "power_budget", w) * c.power_scale;
        if (u.contains("distance")) sc.distance[k] = positive(u, "distance", w);
        if (u.contains("gain"))
            sc.links[k].gain = positive(u, "gain", w);
        else if (sc.distance[k])
            sc.links[k].gain = channel_gain(*sc.distance[k], sc.path_loss_exponent, 1.0);
        else if (!j.contains("montecarlo"))
            throw ConfigError(w + ".gain: required (or give distance)");
    }

    if (j.contains("schemes"))
        c.schemes = name_list<Scheme>(j.at("schemes"), "schemes", [](const std::string& s) { return parse_scheme(s); });
    if (j.contains("mode"))
        c.modes = name_list<Mode>(j.at("mode"), "mode", [](const std::string& s) { return parse_mode(s); });
    check_supported(c.schemes, c.modes);
    if (j.contains("binary_user")) {
        const json& b = j.at("binary_user");
        if (!b.is_number_integer() || (b.get<int>() != 1 && b.get<int>() != 2))
            throw ConfigError("binary_user: expected 1 or 2");
        c.binary_user = b.get<int>() - 1;
    }

    for (int k = 0; k < 2; ++k) {
        const TaskSpec& t = sc.users[k];
        const std::string w = "users[" + std::to_string(k) + "]";
        for (Mode m : c.modes) {
            const bool partial_user = m == Mode::Partial || (m == Mode::Mixed && k != c.binary_user);
            if (m == Mode::Binary && !(t.latency > t.exec_time + t.downlink_time))
                throw ConfigError(w + ".latency: must exceed exec_time + downlink_time");
            if (m != Mode::Binary && !(t.latency > t.downlink_time))
                throw ConfigError(w + ".latency: must exceed downlink_time");
            if (partial_user && !t.local_model)
                throw ConfigError(w + ".chip_constant: required for " + to_string(m) + " mode");
        }
    }
    if (sc.users[1].latency < sc.users[0].latency)
        c.warnings.push_back("users reordered so that user 1 has the shorter latency; output rows "
                             "carry ';users-swapped' in case_trace");

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        reject_unknown(s, "sweep", {"parameter", "values", "range", "steps", "spacing"});
        if (!s.contains("parameter") || !s.at("parameter").is_string())
            throw ConfigError("sweep.parameter: required string");
        SweepSpec sw;
        sw.base = sc;
        sw.parameter = parse_sweep_param(s.at("parameter").get<std::string>());
        sw.values = values_or_range(s, "sweep");
        for (double v : sw.values)
            if (!(v > 0) || !std::isfinite(v)) throw ConfigError("sweep.values: must be positive and finite");
        sw.schemes = c.schemes;
        sw.modes = c.modes;
        sw.binary_user = c.binary_user;
        sw.power_scale = c.power_scale;
        c.sweep = sw;
    }
    if (j.contains("montecarlo")) {
        const json& m = j.at("montecarlo");
        reject_unknown(m, "montecarlo",
                       {"trials", "seed", "d1", "d2", "feasibility_filter", "force_equal_gains"});
        MonteCarloSpec mc;
        mc.base = sc;
        if (m.contains("trials")) {
            if (!m.at("trials").is_number_integer() || m.at("trials").get<long long>() < 1)
                throw ConfigError("montecarlo.trials: expected an integer >= 1");
            mc.trials = m.at("trials").get<std::size_t>();
        }
        if (m.contains("seed")) {
            if (!m.at("seed").is_number_integer()) throw ConfigError("montecarlo.seed: expected an integer");
            mc.seed = m.at("seed").get<std::uint64_t>();
        }
        mc.path_loss_exponent = sc.path_loss_exponent;
        if (m.contains("d1"))
            mc.d1 = number_list(m.at("d1"), "montecarlo.d1");
        else if (sc.distance[0])
            mc.d1 = {*sc.distance[0]};
        else
            throw ConfigError("montecarlo.d1: required (or give users[0].distance)");
        if (m.contains("d2"))
            mc.d2 = positive(m, "d2", "montecarlo");
        else if (sc.distance[1])
            mc.d2 = *sc.distance[1];
        else
            throw ConfigError("montecarlo.d2: required (or give users[1].distance)");
        for (double d : mc.d1)
            if (!(d > 0)) throw ConfigError("montecarlo.d1: distances must be > 0");
        if (m.contains("feasibility_filter")) mc.feasibility_filter = m.at("feasibility_filter").get<bool>();
        if (m.contains("force_equal_gains")) mc.force_equal_gains = m.at("force_equal_gains").get<bool>();
        mc.schemes = c.schemes;
        mc.modes = c.modes;
        mc.binary_user = c.binary_user;
        c.montecarlo = mc;
    } else if (!c.has_fixed_gains()) {
        throw ConfigError("users: gains required");
    }
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// ------------------------------------------------------------ solving

// Binary mode also weighs running either task locally; mixed/partial modes
// include the local option inherently. binary_user is in config order.
inline Solution solve_for(const Scenario& sc, Scheme scheme, Mode mode, int binary_user = 0) {
    if (mode == Mode::Binary) return decide_binary(sc, scheme).chosen;
    const int bu = sc.swapped() ? 1 - binary_user : binary_user;
    return solve(sc, scheme, mode, bu);
}

struct ResultRow {
    std::size_t scenario_id = 0;
    double sweep_value = 0;
    Solution solution;
};

inline ScenarioConfig apply_sweep(ScenarioConfig c, SweepParam p, double v, double power_scale) {
    switch (p) {
    case SweepParam::H1: c.links[0].gain = v; break;
    case SweepParam::H2: c.links[1].gain = v; break;
    case SweepParam::L1: c.users[0].latency = v; break;
    case SweepParam::L2: c.users[1].latency = v; break;
    case SweepParam::B1: c.users[0].bits = v; break;
    case SweepParam::B2: c.users[1].bits = v; break;
    case SweepParam::Pbar1: c.links[0].power_budget = v * power_scale; break;
    case SweepParam::Pbar2: c.links[1].power_budget = v * power_scale; break;
    case SweepParam::Distance1:
        c.distance[0] = v;
        c.links[0].gain = channel_gain(v, c.path_loss_exponent, 1.0);
        break;
    }
    return c;
}

inline Scenario sweep_scenario(const SweepSpec& s, double v) {
    return apply_sweep(s.base, s.parameter, v, s.power_scale).build();
}

// Rows ordered by sweep value, then mode, then scheme; infeasible rows kept.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec) {
    check_supported(spec.schemes, spec.modes);
    if (spec.values.empty()) throw ConfigError("sweep.values: must not be empty");
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const Scenario sc = sweep_scenario(spec, spec.values[i]);
        for (Mode m : spec.modes)
            for (Scheme s : spec.schemes) {
                Solution sol;
                try {
                    sol = solve_for(sc, s, m, spec.binary_user);
                } catch (const InfeasibleLatency& e) {
                    sol = Solution::infeasible(s, m, sc.symbol_interval(), "latency/infeasible");
                }
                rows.push_back({i, spec.values[i], std::move(sol)});
            }
    }
    return rows;
}

// Fraction of each user's task carried to the access point (ordered users).
inline std::array<double, 2> offloaded_fractions(const Scenario& ordered, const Solution& s) {
    if (!s.feasible || !s.allocation) return {0, 0};
    const Allocation& a = *s.allocation;
    return {(a.tau[0] * a.R11 + a.tau[1] * a.R12) / ordered.user(0).bits,
            (a.tau[0] * a.R21 + a.tau[2] * a.R23) / ordered.user(1).bits};
}

// ----------------------------------------------------------- Monte Carlo

// Trial t uses stream t for every d1, so distances share fading draws.
inline Scenario montecarlo_scenario(const MonteCarloSpec& spec, double d1, std::size_t trial) {
    Rng rng = Rng(spec.seed).split(trial);
    ScenarioConfig c = spec.base;
    const double x1 = rng.exponential(), x2 = rng.exponential();
    c.distance = {d1, spec.d2};
    c.links[0].gain = channel_gain(d1, spec.path_loss_exponent, x1);
    c.links[1].gain = spec.force_equal_gains ? c.links[0].gain : channel_gain(spec.d2, spec.path_loss_exponent, x2);
    return c.build();
}

struct McAggregate {
    double d1 = 0;
    Scheme scheme = Scheme::FullMA;
    Mode mode = Mode::Binary;
    std::size_t trials = 0;    // trials drawn
    std::size_t filtered = 0;  // trials contributing to the means
    double mean_energy = kInf; // normalized; +inf when no trial qualifies
    double mean_energy_joules = kInf;
    double mean_gamma1 = 0, mean_gamma2 = 0;
    bool empty() const { return filtered == 0; }
};

struct McResult {
    std::vector<McAggregate> aggregates;
    std::vector<ResultRow> rows;  // per-trial solutions when requested
};

// With the filter on, a trial counts only if every (mode, scheme) pair is
// feasible for it; otherwise each pair averages over its own feasible trials.
inline McResult run_montecarlo(const MonteCarloSpec& spec, bool keep_rows = false) {
    if (spec.trials < 1) throw ConfigError("montecarlo.trials: must be >= 1");
    if (!(spec.path_loss_exponent > 0)) throw ConfigError("path_loss_exponent: must be > 0");
    check_supported(spec.schemes, spec.modes);
    McResult out;
    const std::size_t combos = spec.modes.size() * spec.schemes.size();
    for (double d1 : spec.d1) {
        std::vector<Solution> sols(spec.trials * combos);
        std::vector<std::array<double, 2>> fr(sols.size());
        std::vector<char> joint(spec.trials, 1);
        for (std::size_t t = 0; t < spec.trials; ++t) {
            const Scenario sc = montecarlo_scenario(spec, d1, t);
            std::size_t c = 0;
            for (Mode m : spec.modes)
                for (Scheme s : spec.schemes) {
                    Solution& sol = sols[t * combos + c];
                    try {
                        sol = solve_for(sc, s, m, spec.binary_user);
                    } catch (const InfeasibleLatency&) {
                        sol = Solution::infeasible(s, m, sc.symbol_interval(), "latency/infeasible");
                    }
                    fr[t * combos + c] = offloaded_fractions(sc.ordered_for(m), sol);
                    joint[t] = joint[t] && sol.feasible;
                    if (keep_rows) out.rows.push_back({t, d1, sol});
                    ++c;
                }
        }
        std::size_t c = 0;
        for (Mode m : spec.modes)
            for (Scheme s : spec.schemes) {
                McAggregate a;
                a.d1 = d1;
                a.scheme = s;
                a.mode = m;
                a.trials = spec.trials;
                double e = 0, ej = 0, g1 = 0, g2 = 0;
                for (std::size_t t = 0; t < spec.trials; ++t) {
                    const Solution& sol = sols[t * combos + c];
                    if (!sol.feasible || (spec.feasibility_filter && !joint[t])) continue;
                    ++a.filtered;
                    e += sol.total_energy();
                    ej += sol.total_joules();
                    g1 += fr[t * combos + c][0];
                    g2 += fr[t * combos + c][1];
                }
                if (a.filtered > 0) {
                    const double n = double(a.filtered);
                    a.mean_energy = e / n;
                    a.mean_energy_joules = ej / n;
                    a.mean_gamma1 = g1 / n;
                    a.mean_gamma2 = g2 / n;
                }
                out.aggregates.push_back(a);
                ++c;
            }
    }
    return out;
}

inline const McAggregate* find_aggregate(const McResult& r, double d1, Scheme s, Mode m) {
    for (const auto& a : r.aggregates)
        if (a.d1 == d1 && a.scheme == s && a.mode == m) return &a;
    return nullptr;
}

// ------------------------------------------------------------------- CSV

inline const char* kCsvHeader =
    "scenario_id,sweep_value,scheme,mode,feasible,energy_total_norm,energy_total_joules,energy_u1,"
    "energy_u2,tau1,tau2,tau3,R11,R21,R12,R23,P11,P21,P12,P23,gamma11,gamma21,gamma23,case_trace";

inline constexpr const char* kSwappedTag = ";users-swapped";

inline std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::vector<std::string> csv_fields(const ResultRow& r) {
    const Solution& s = r.solution;
    std::vector<std::string> f{std::to_string(r.scenario_id), fmt_num(r.sweep_value), to_string(s.scheme),
                               to_string(s.mode), s.feasible ? "1" : "0"};
    if (s.feasible) {
        for (double x : {s.total_energy(), s.total_joules(), s.energy_user(0), s.energy_user(1)})
            f.push_back(fmt_num(x));
    } else {
        for (int i = 0; i < 4; ++i) f.push_back("inf");
    }
    if (s.feasible && s.allocation) {
        const Allocation& a = *s.allocation;
        for (double x : {a.tau[0], a.tau[1], a.tau[2], a.R11, a.R21, a.R12, a.R23, a.P11, a.P21, a.P12, a.P23,
                         a.gamma11, a.gamma21, a.gamma23})
            f.push_back(fmt_num(x));
    } else {
        for (int i = 0; i < 14; ++i) f.emplace_back();
    }
    std::string trace = s.case_trace;
    std::replace(trace.begin(), trace.end(), ',', ';');
    if (s.swapped) trace += kSwappedTag;
    f.push_back(trace);
    return f;
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        auto f = csv_fields(r);
        for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
        os << '\n';
    }
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write '" + path + "'");
    write_csv(os, rows);
}

namespace simlab_detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double to_double(const std::string& s, std::size_t line) {
    char* end = nullptr;
    double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw Error("csv line " + std::to_string(line) + ": bad number '" + s + "'");
    return x;
}

}  // namespace simlab_detail

// Transmit energy is recomputed from the allocation; the remainder of each
// user's energy is attributed to local computation.
inline std::vector<ResultRow> read_csv(std::istream& is) {
    using namespace simlab_detail;
    std::string line;
    if (!std::getline(is, line) || split_csv(line) != split_csv(kCsvHeader))
        throw Error("csv: header does not match the solution schema");
    std::vector<ResultRow> rows;
    std::size_t ln = 1;
    while (std::getline(is, line)) {
        ++ln;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        if (f.size() != 24) throw Error("csv line " + std::to_string(ln) + ": expected 24 fields");
        ResultRow r;
        r.scenario_id = static_cast<std::size_t>(std::stoull(f[0]));
        r.sweep_value = to_double(f[1], ln);
        Solution& s = r.solution;
        s.scheme = parse_scheme(f[2]);
        s.mode = parse_mode(f[3]);
        s.feasible = f[4] == "1";
        std::string trace = f[23];
        const std::string tag = kSwappedTag;
        if (trace.size() >= tag.size() && trace.compare(trace.size() - tag.size(), tag.size(), tag) == 0) {
            s.swapped = true;
            trace.erase(trace.size() - tag.size());
        }
        s.case_trace = trace;
        if (s.feasible) {
            const double total = to_double(f[5], ln), joules = to_double(f[6], ln);
            s.symbol_interval = total != 0 ? joules / total : 1;
            Allocation a;
            double* dst[14] = {&a.tau[0], &a.tau[1], &a.tau[2], &a.R11, &a.R21, &a.R12, &a.R23,
                               &a.P11,    &a.P21,    &a.P12,    &a.P23, &a.gamma11, &a.gamma21, &a.gamma23};
            for (int i = 0; i < 14; ++i) *dst[i] = to_double(f[9 + i], ln);
            s.transmit_energy = {a.tau[0] * a.P11 + a.tau[1] * a.P12, a.tau[0] * a.P21 + a.tau[2] * a.P23};
            const double e1 = to_double(f[7], ln), e2 = to_double(f[8], ln);
            s.local_energy = {e1 - s.transmit_energy[0], e2 - s.transmit_energy[1]};
            s.allocation = a;
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<ResultRow> load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open '" + path + "'");
    return read_csv(is);
}

// ------------------------------------------------------------ validation

// Re-checks an emitted solution against its scenario: rate regions, power
// budgets, latency windows, carried bits and the energy bookkeeping.
// binary_user is in config order. Returns the list of violations.
inline std::vector<std::string> check_solution(const Scenario& scenario, const Solution& s, int binary_user = 0,
                                               double tol = 1e-6) {
    std::vector<std::string> bad;
    if (!s.feasible) return bad;
    if (!s.allocation) return {"feasible row without an allocation"};
    const Scenario sc = scenario.ordered_for(s.mode);
    if (sc.swapped() != s.swapped) bad.push_back("user permutation does not match the scenario");
    const Allocation& a = *s.allocation;
    const double Ts = sc.symbol_interval();
    const double a1 = sc.alpha(0), a2 = sc.alpha(1);
    const double Pb1 = sc.link(0).power_budget, Pb2 = sc.link(1).power_budget;
    auto rel = [&](double x, double lim) { return x <= lim + tol * std::max(1.0, std::abs(lim)); };

    for (double x : {a.tau[0], a.tau[1], a.tau[2], a.R11, a.R21, a.R12, a.R23, a.P11, a.P21, a.P12, a.P23})
        if (!(x >= 0)) bad.push_back("negative or NaN allocation entry");
    if (a.tau[0] > 0 && (a.R11 > 0 || a.R21 > 0) &&
        !region_member(s.scheme, a.R11, a.R21, a.P11, a.P21, a1, a2, tol * std::max(1.0, a.R11 + a.R21)))
        bad.push_back("slot-1 rates outside the " + to_string(s.scheme) + " region");
    if (a.tau[1] > 0 && !rel(a.R12, rate_cap(a1, a.P12))) bad.push_back("slot-2 rate above capacity");
    if (a.tau[2] > 0 && !rel(a.R23, rate_cap(a2, a.P23))) bad.push_back("slot-3 rate above capacity");
    if (!rel(a.P11, Pb1) || !rel(a.P12, Pb1)) bad.push_back("user 1 power above budget");
    if (!rel(a.P21, Pb2) || !rel(a.P23, Pb2)) bad.push_back("user 2 power above budget");

    const std::array<double, 2> carried{a.tau[0] * a.R11 + a.tau[1] * a.R12, a.tau[0] * a.R21 + a.tau[2] * a.R23};
    const std::array<double, 2> used{a.tau[0] + a.tau[1], a.tau[0] + a.tau[1] + a.tau[2]};
    const std::array<double, 2> tx{a.tau[0] * a.P11 + a.tau[1] * a.P12, a.tau[0] * a.P21 + a.tau[2] * a.P23};
    const int bu = sc.swapped() ? 1 - binary_user : binary_user;
    for (int k = 0; k < 2; ++k) {
        const TaskSpec& t = sc.user(k);
        const std::string who = "user " + std::to_string(k + 1);
        const bool binary_task = s.mode == Mode::Binary || (s.mode == Mode::Mixed && k == bu);
        double local = 0;
        if (s.mode == Mode::Binary) {
            if (!rel(used[k], sc.latency_norm(k, Mode::Binary))) bad.push_back(who + " misses its latency");
        } else {
            const double delta = t.local_model ? t.local_model->per_bit_cloud_time : 0;
            if (!rel(Ts * used[k] + delta * carried[k], sc.latency_norm(k, s.mode)))
                bad.push_back(who + " misses its latency");
        }
        if (!rel(carried[k], t.bits)) bad.push_back(who + " carries more bits than its task");
        if (binary_task) {
            const bool offloaded = carried[k] >= t.bits * (1 - tol);
            if (!offloaded && carried[k] > t.bits * tol) bad.push_back(who + " splits an indivisible task");
            if (!offloaded) {
                if (!t.local_energy.feasible())
                    bad.push_back(who + " computes locally but cannot");
                else
                    local = t.local_energy.value();
            }
        } else if (t.local_model) {
            local = local_energy_dvs(*t.local_model, std::max(0.0, t.bits - carried[k]), t.latency);
        }
        const double expect = tx[k] + local, got = s.energy_user(k);
        if (std::abs(got - expect) > tol * std::max({1e-12, std::abs(expect), std::abs(got)}))
            bad.push_back(who + " energy does not match its allocation");
    }
    return bad;
}

}  // namespace macoff
