// Command-line front end: solve, sweep, montecarlo, oracle-check, validate.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "macoff/oracle.hpp"
#include "macoff/simlab.hpp"

using namespace macoff;
using nlohmann::json;

namespace {

struct Output {
    bool json = false;
    bool csv = false;
    std::string out;  // CSV file path
};

std::vector<std::string> header_names() { return simlab_detail::split_csv(kCsvHeader); }

json row_json(const ResultRow& r) {
    static const auto names = header_names();
    const auto f = csv_fields(r);
    json o = json::object();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const std::string& name = names[i];
        if (name == "scheme" || name == "mode" || name == "case_trace")
            o[name] = f[i];
        else if (name == "feasible")
            o[name] = f[i] == "1";
        else if (f[i].empty() || f[i] == "inf")
            o[name] = nullptr;
        else
            o[name] = std::stod(f[i]);
    }
    return o;
}

void print_rows(const std::vector<ResultRow>& rows, const Output& o, const std::string& value_label) {
    if (!o.out.empty()) emit_csv(rows, o.out);
    if (o.json) {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(row_json(r));
        std::cout << arr.dump(2) << '\n';
        return;
    }
    if (o.csv) {
        write_csv(std::cout, rows);
        return;
    }
    std::printf("%-6s %-12s %-7s %-8s %-9s %-15s %-15s %s\n", "id", value_label.c_str(), "scheme", "mode",
                "feasible", "energy_norm", "energy_J", "case");
    for (const auto& r : rows) {
        const Solution& s = r.solution;
        std::printf("%-6zu %-12.6g %-7s %-8s %-9s %-15.9g %-15.9g %s%s\n", r.scenario_id, r.sweep_value,
                    to_string(s.scheme).c_str(), to_string(s.mode).c_str(), s.feasible ? "yes" : "no",
                    s.total_energy(), s.total_joules(), s.case_trace.c_str(), s.swapped ? " (users swapped)" : "");
    }
}

void print_warnings(const Config& c) {
    for (const auto& w : c.warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<Scheme> pick_schemes(const Config& c, const std::string& s) {
    return s.empty() ? c.schemes : std::vector<Scheme>{parse_scheme(s)};
}
std::vector<Mode> pick_modes(const Config& c, const std::string& m) {
    return m.empty() ? c.modes : std::vector<Mode>{parse_mode(m)};
}

int run_solve(const std::string& path, const std::string& scheme, const std::string& mode, int binary_user,
              const Output& o) {
    Config c = load_config(path);
    print_warnings(c);
    const auto schemes = pick_schemes(c, scheme);
    const auto modes = pick_modes(c, mode);
    check_supported(schemes, modes);
    const int bu = binary_user > 0 ? binary_user - 1 : c.binary_user;
    const Scenario sc = c.scenario_base();
    std::vector<ResultRow> rows;
    for (Mode m : modes)
        for (Scheme s : schemes) {
            Solution sol;
            try {
                sol = solve_for(sc, s, m, bu);
            } catch (const InfeasibleLatency&) {
                sol = Solution::infeasible(s, m, sc.symbol_interval(), "latency/infeasible");
            }
            rows.push_back({0, 0, sol});
        }
    print_rows(rows, o, "value");
    return 0;
}

int run_sweep_cmd(const std::string& path, const Output& o) {
    Config c = load_config(path);
    print_warnings(c);
    if (!c.sweep) throw ConfigError("sweep: section missing from config");
    auto rows = run_sweep(*c.sweep);
    print_rows(rows, o, to_string(c.sweep->parameter));
    return 0;
}

int run_montecarlo_cmd(const std::string& path, std::optional<std::size_t> trials,
                       std::optional<std::uint64_t> seed, const std::string& rows_path, const Output& o) {
    Config c = load_config(path);
    print_warnings(c);
    if (!c.montecarlo) throw ConfigError("montecarlo: section missing from config");
    MonteCarloSpec spec = *c.montecarlo;
    if (trials) spec.trials = *trials;
    if (seed) spec.seed = *seed;
    McResult r = run_montecarlo(spec, !rows_path.empty());
    if (!rows_path.empty()) emit_csv(r.rows, rows_path);

    auto agg_json = [&] {
        json arr = json::array();
        for (const auto& a : r.aggregates) {
            json j{{"d1", a.d1},
                   {"scheme", to_string(a.scheme)},
                   {"mode", to_string(a.mode)},
                   {"trials", a.trials},
                   {"filtered", a.filtered}};
            if (a.empty()) {
                j["mean_energy_norm"] = j["mean_energy_joules"] = j["mean_gamma1"] = j["mean_gamma2"] = nullptr;
            } else {
                j["mean_energy_norm"] = a.mean_energy;
                j["mean_energy_joules"] = a.mean_energy_joules;
                j["mean_gamma1"] = a.mean_gamma1;
                j["mean_gamma2"] = a.mean_gamma2;
            }
            arr.push_back(j);
        }
        return arr;
    };
    if (!o.out.empty()) {
        std::ofstream os(o.out);
        if (!os) throw Error("cannot write '" + o.out + "'");
        os << "d1,scheme,mode,trials,filtered,mean_energy_norm,mean_energy_joules,mean_gamma1,mean_gamma2\n";
        for (const auto& a : r.aggregates)
            os << fmt_num(a.d1) << ',' << to_string(a.scheme) << ',' << to_string(a.mode) << ',' << a.trials << ','
               << a.filtered << ',' << fmt_num(a.mean_energy) << ',' << fmt_num(a.mean_energy_joules) << ','
               << fmt_num(a.mean_gamma1) << ',' << fmt_num(a.mean_gamma2) << '\n';
    }
    if (o.json) {
        std::cout << agg_json().dump(2) << '\n';
        return 0;
    }
    std::printf("%-8s %-7s %-8s %-8s %-9s %-15s %-10s %s\n", "d1", "scheme", "mode", "trials", "filtered",
                "mean_energy", "gamma1", "gamma2");
    for (const auto& a : r.aggregates) {
        if (a.empty()) {
            std::printf("%-8g %-7s %-8s %-8zu %-9zu (no feasible trials)\n", a.d1, to_string(a.scheme).c_str(),
                        to_string(a.mode).c_str(), a.trials, a.filtered);
            continue;
        }
        std::printf("%-8g %-7s %-8s %-8zu %-9zu %-15.9g %-10.6f %.6f\n", a.d1, to_string(a.scheme).c_str(),
                    to_string(a.mode).c_str(), a.trials, a.filtered, a.mean_energy, a.mean_gamma1, a.mean_gamma2);
    }
    return 0;
}

int run_oracle_check(const std::string& path, const std::string& scheme, const std::string& mode, int grid,
                     int passes, int binary_user, bool json_out) {
    Config c = load_config(path);
    print_warnings(c);
    const auto schemes = pick_schemes(c, scheme);
    const auto modes = pick_modes(c, mode);
    check_supported(schemes, modes);
    const int bu = binary_user > 0 ? binary_user - 1 : c.binary_user;
    const Scenario sc = c.scenario_base();
    json arr = json::array();
    if (!json_out)
        std::printf("%-7s %-8s %-10s %-10s %-17s %-17s %s\n", "scheme", "mode", "solver", "oracle", "E_solver",
                    "E_oracle", "rel_diff");
    for (Mode m : modes)
        for (Scheme s : schemes) {
            std::optional<GridSpec> g;
            if (grid > 0) {
                GridSpec gs;
                gs.points = {grid};
                gs.passes = passes;
                g = gs;
            }
            Solution a, b;
            try {
                a = solve(sc, s, m, sc.swapped() ? 1 - bu : bu);
                b = oracle_solve(sc, s, m, g, sc.swapped() ? 1 - bu : bu);
            } catch (const InfeasibleLatency&) {
                a = b = Solution::infeasible(s, m, sc.symbol_interval(), "latency/infeasible");
            }
            const double ea = a.total_energy(), eb = b.total_energy();
            const double rd = a.feasible && b.feasible ? (ea - eb) / eb : 0;
            if (json_out) {
                arr.push_back({{"scheme", to_string(s)},
                               {"mode", to_string(m)},
                               {"solver_feasible", a.feasible},
                               {"oracle_feasible", b.feasible},
                               {"solver_energy", a.feasible ? json(ea) : json(nullptr)},
                               {"oracle_energy", b.feasible ? json(eb) : json(nullptr)},
                               {"relative_difference", rd}});
            } else {
                std::printf("%-7s %-8s %-10s %-10s %-17.10g %-17.10g %.3e\n", to_string(s).c_str(),
                            to_string(m).c_str(), a.feasible ? "feasible" : "infeasible",
                            b.feasible ? "feasible" : "infeasible", ea, eb, rd);
            }
        }
    if (json_out) std::cout << arr.dump(2) << '\n';
    return 0;
}

int run_validate(const std::string& config_path, const std::string& csv_path, int binary_user) {
    Config c = load_config(config_path);
    print_warnings(c);
    const int bu = binary_user > 0 ? binary_user - 1 : c.binary_user;
    const auto rows = load_csv(csv_path);
    std::size_t failed = 0, infeasible = 0;
    for (const auto& r : rows) {
        Scenario sc;
        if (c.montecarlo)
            sc = montecarlo_scenario(*c.montecarlo, r.sweep_value, r.scenario_id);
        else if (c.sweep)
            sc = sweep_scenario(*c.sweep, r.sweep_value);
        else
            sc = c.scenario_base();
        if (!r.solution.feasible) ++infeasible;
        const auto bad = check_solution(sc, r.solution, bu);
        if (bad.empty()) continue;
        ++failed;
        std::printf("row %zu (value %.9g, %s/%s): ", r.scenario_id, r.sweep_value,
                    to_string(r.solution.scheme).c_str(), to_string(r.solution.mode).c_str());
        for (std::size_t i = 0; i < bad.size(); ++i) std::printf("%s%s", i ? "; " : "", bad[i].c_str());
        std::printf("\n");
    }
    std::printf("%zu rows checked, %zu infeasible verdicts, %zu failed\n", rows.size(), infeasible, failed);
    return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-user multiple-access offloading energy solver"};
    app.require_subcommand(1);

    std::string config, scheme, mode, csv_path, rows_path;
    int binary_user = 0, grid = 0, passes = 3;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    Output o;

    auto* solve_cmd = app.add_subcommand("solve", "Solve one scenario");
    solve_cmd->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--scheme", scheme, "FullMA, TDMA, SDwts or ID (default: config list)");
    solve_cmd->add_option("--mode", mode, "binary, partial or mixed (default: config list)");
    solve_cmd->add_option("--binary-user", binary_user, "Mixed mode: user (1 or 2) with the indivisible task")
        ->check(CLI::Range(1, 2));
    auto* sj = solve_cmd->add_flag("--json", o.json, "Print JSON rows");
    solve_cmd->add_flag("--csv", o.csv, "Print CSV rows")->excludes(sj);
    solve_cmd->add_option("--out", o.out, "Also write CSV rows to this file");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run the config's parameter sweep");
    sweep_cmd->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    auto* wj = sweep_cmd->add_flag("--json", o.json, "Print JSON rows");
    sweep_cmd->add_flag("--csv", o.csv, "Print CSV rows")->excludes(wj);
    sweep_cmd->add_option("--out", o.out, "Write CSV rows to this file");

    auto* mc_cmd = app.add_subcommand("montecarlo", "Run the config's fading Monte Carlo experiment");
    mc_cmd->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    mc_cmd->add_option("--trials", trials, "Override the trial count")->check(CLI::PositiveNumber);
    mc_cmd->add_option("--seed", seed, "Override the seed");
    mc_cmd->add_flag("--json", o.json, "Print JSON aggregates");
    mc_cmd->add_option("--out", o.out, "Write the aggregate table as CSV");
    mc_cmd->add_option("--rows", rows_path, "Write every trial's solutions as CSV");

    auto* oc_cmd = app.add_subcommand("oracle-check", "Compare solver and brute-force oracle");
    oc_cmd->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    oc_cmd->add_option("--scheme", scheme, "Scheme (default: config list)");
    oc_cmd->add_option("--mode", mode, "Mode (default: config list)");
    oc_cmd->add_option("--grid", grid, "Grid points per variable (>= 16; default per problem size)");
    oc_cmd->add_option("--passes", passes, "Zoom passes when --grid is given")->check(CLI::NonNegativeNumber);
    oc_cmd->add_option("--binary-user", binary_user, "Mixed mode binary user (1 or 2)")->check(CLI::Range(1, 2));
    oc_cmd->add_flag("--json", o.json, "Print JSON");

    auto* va_cmd = app.add_subcommand("validate", "Re-check a CSV of solutions against its config");
    va_cmd->add_option("--config", config, "JSON config the rows came from")->required()->check(CLI::ExistingFile);
    va_cmd->add_option("--csv", csv_path, "CSV of solutions")->required()->check(CLI::ExistingFile);
    va_cmd->add_option("--binary-user", binary_user, "Mixed mode binary user (1 or 2)")->check(CLI::Range(1, 2));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve_cmd) return run_solve(config, scheme, mode, binary_user, o);
        if (*sweep_cmd) return run_sweep_cmd(config, o);
        if (*mc_cmd) return run_montecarlo_cmd(config, trials, seed, rows_path, o);
        if (*oc_cmd) return run_oracle_check(config, scheme, mode, grid, passes, binary_user, o.json);
        if (*va_cmd) return run_validate(config, csv_path, binary_user);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
