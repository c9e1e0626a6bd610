// Command-line front end: build entangled resource states, run the
// teleportation protocol, generate fidelity-curve data and threshold scans,
// and emit machine-readable CSV/JSON results.
//
// Exit codes: 0 success, 2 usage error, 3 a numerical-degeneracy flag was
// raised during conditioning.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cvqnet/cvqnet.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace cvqnet;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

Scenario parse_scenario(const std::string& name) {
    if (name == "all-equal") return Scenario::AllEqual;
    if (name == "one-squeezed") return Scenario::OneSqueezed;
    if (name == "custom") return Scenario::Custom;
    throw CLI::ValidationError("--scenario", "expected all-equal, one-squeezed or custom");
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::AllEqual: return "all-equal";
        case Scenario::OneSqueezed: return "one-squeezed";
        case Scenario::Custom: return "custom";
    }
    return "?";
}

// Squeezing is accepted either in natural units (--r, --r1, --r-list) or in
// dB (--db, --db1), never both in one invocation.
struct SqueezeFlags {
    std::optional<double> r, db, r1, db1;
    std::vector<double> r_list;

    void attach(CLI::App* cmd) {
        cmd->add_option("--r", r, "squeezing r for every mode (all-equal scenario)");
        cmd->add_option("--db", db, "squeezing in dB for every mode (all-equal scenario)");
        cmd->add_option("--r1", r1, "squeezing r of mode 1 (one-squeezed scenario)");
        cmd->add_option("--db1", db1, "squeezing of mode 1 in dB (one-squeezed scenario)");
        cmd->add_option("--r-list", r_list, "per-mode squeezing r values (custom scenario)")
            ->delimiter(',');
    }

    NetworkConfig config(int n, Scenario scenario) const {
        const int given = (r ? 1 : 0) + (db ? 1 : 0) + (r1 ? 1 : 0) + (db1 ? 1 : 0) +
                          (r_list.empty() ? 0 : 1);
        if (given != 1) {
            throw std::invalid_argument("give exactly one of --r, --db, --r1, --db1, --r-list");
        }
        switch (scenario) {
            case Scenario::AllEqual:
                if (r) return NetworkConfig::all_equal(n, *r);
                if (db) return NetworkConfig::all_equal(n, r_from_db(*db));
                throw std::invalid_argument("all-equal scenario takes --r or --db");
            case Scenario::OneSqueezed:
                if (r1) return NetworkConfig::one_squeezed(n, *r1);
                if (db1) return NetworkConfig::one_squeezed(n, r_from_db(*db1));
                throw std::invalid_argument("one-squeezed scenario takes --r1 or --db1");
            case Scenario::Custom:
                if (!r_list.empty()) {
                    if (r_list.size() != static_cast<std::size_t>(n)) {
                        throw std::invalid_argument("--r-list must have one value per mode");
                    }
                    return NetworkConfig::custom(r_list);
                }
                throw std::invalid_argument("custom scenario takes --r-list");
        }
        throw std::invalid_argument("unknown scenario");
    }

    json echo() const {
        json j;
        if (r) j["r"] = *r;
        if (db) j["db"] = *db;
        if (r1) j["r1"] = *r1;
        if (db1) j["db1"] = *db1;
        if (!r_list.empty()) j["r_list"] = r_list;
        return j;
    }
};

double resolve_gain(const std::string& request, const NetworkConfig& config) {
    if (request == "optimal") {
        return optimal_gain(config.n_modes, config.scenario, config.r[0]).value_or(0.0);
    }
    std::size_t used = 0;
    const double value = std::stod(request, &used);
    if (used != request.size()) {
        throw std::invalid_argument("--gn expects a number or 'optimal'");
    }
    return value;
}

json state_to_json(const GaussianState& state) {
    json j;
    j["mean"] = std::vector<double>(state.mean().data(), state.mean().data() + state.mean().size());
    json cov = json::array();
    for (int i = 0; i < state.cov().rows(); ++i) {
        json row = json::array();
        for (int c = 0; c < state.cov().cols(); ++c) row.push_back(state.cov()(i, c));
        cov.push_back(row);
    }
    j["cov"] = cov;
    return j;
}

int check_pair(int n, int k, int l) {
    if (k < 1 || l < 1 || k > n || l > n || k == l) {
        throw std::invalid_argument("--k and --l must be distinct 1-based mode indices <= N");
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct StateCmd {
    int n = 0;
    std::string scenario = "all-equal";
    SqueezeFlags squeezing;
    int k = 1, l = 2;
    std::string gain_request = "optimal";
    std::string format = "json";
    std::string out;

    int run() const {
        if (format != "json") throw std::invalid_argument("state supports --format json only");
        const NetworkConfig config = squeezing.config(n, parse_scenario(scenario));
        check_pair(n, k, l);
        const double gain = resolve_gain(gain_request, config);
        const GaussianState state = build_ghz_state(config);

        json doc;
        doc["schema"] = "1";
        doc["command"] = "state";
        doc["spec"] = {{"n", n}, {"scenario", scenario}, {"k", k}, {"l", l},
                       {"gain", gain_request}};
        doc["spec"].update(squeezing.echo());

        json res = state_to_json(state);
        json pair_vars = json::array();
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                const double value = state.cov()(x_index(a), x_index(a)) +
                                     state.cov()(x_index(b), x_index(b)) -
                                     2.0 * state.cov()(x_index(a), x_index(b));
                pair_vars.push_back({{"k", a + 1}, {"l", b + 1}, {"value", value}});
            }
        }
        res["pair_position_variances"] = pair_vars;
        res["momentum_correlation"] = {
            {"k", k}, {"l", l}, {"gain", gain},
            {"value", momentum_correlation_variance(state, k - 1, l - 1, gain)}};
        if (n == 2) res["duan_value"] = duan_value(state);
        const auto nu = state.symplectic_eigenvalues();
        res["min_symplectic_eigenvalue"] = *std::min_element(nu.begin(), nu.end());
        res["purity"] = state.purity();
        doc["results"] = res;

        write_output(out, doc.dump(2) + "\n");
        return kExitOk;
    }
};

struct CurveCmd {
    std::vector<int> ns;
    std::string scenario = "all-equal";
    DbGrid grid;
    std::string format = "csv";
    std::string out;

    int run() const {
        const auto rows = fidelity_curve(ns, parse_scenario(scenario), grid);
        if (format == "csv") {
            std::string text = "N,squeezing_dB,r,gain,F_opt\n";
            for (const auto& row : rows) {
                text += std::to_string(row.n) + "," + fmt12(row.squeezing_db) + "," +
                        fmt12(row.r) + "," + fmt12(row.gain) + "," + fmt12(row.fidelity) + "\n";
            }
            write_output(out, text);
        } else if (format == "json") {
            json doc;
            doc["schema"] = "1";
            doc["command"] = "curve";
            doc["spec"] = {{"n_list", ns}, {"scenario", scenario}, {"db_min", grid.min_db},
                           {"db_max", grid.max_db}, {"db_step", grid.step_db}};
            json arr = json::array();
            for (const auto& row : rows) {
                arr.push_back({{"N", row.n}, {"squeezing_dB", row.squeezing_db}, {"r", row.r},
                               {"gain", row.gain}, {"F_opt", row.fidelity}});
            }
            doc["results"] = arr;
            write_output(out, doc.dump(2) + "\n");
        } else {
            throw std::invalid_argument("--format must be csv or json");
        }
        return kExitOk;
    }
};

struct TeleportCmd {
    int n = 0;
    std::string scenario = "all-equal";
    SqueezeFlags squeezing;
    int k = 1, l = 2;
    std::vector<double> alpha{0.0, 0.0};
    double bell_gain = 1.0;
    std::string gain_request = "optimal";
    std::vector<double> per_station;
    int trials = 1;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    std::string out;

    int run() const {
        if (format != "json") throw std::invalid_argument("teleport supports --format json only");
        if (trials < 1) throw std::invalid_argument("--trials must be >= 1");
        const NetworkConfig config = squeezing.config(n, parse_scenario(scenario));
        check_pair(n, k, l);

        GainSchedule gains;
        gains.bell = bell_gain;
        gains.assist = resolve_gain(gain_request, config);
        if (!per_station.empty()) gains.per_station = per_station;
        gains.validate(n);

        std::uint64_t used_seed;
        if (seed) {
            used_seed = *seed;
        } else {
            std::random_device rd;
            used_seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
            std::cerr << "seed: " << used_seed << "\n";
        }
        RngStream root(used_seed);

        const std::array<double, 2> a{alpha[0], alpha[1]};
        json trials_json = json::array();
        bool degenerate = false;
        std::optional<TeleportOutcome> last;
        for (int t = 0; t < trials; ++t) {
            RngStream stream = root.substream(static_cast<std::uint64_t>(t));
            TeleportOutcome outcome = run_protocol(config, k - 1, l - 1, a, gains, &stream);
            degenerate = degenerate || outcome.degenerate;
            json tj;
            tj["x_u"] = outcome.record.x_u;
            tj["p_v"] = outcome.record.p_v;
            json modes = json::array();
            for (int m : outcome.record.assist_modes) modes.push_back(m + 1);
            tj["assist_modes"] = modes;
            tj["assist_p"] = outcome.record.assist_p;
            tj["fidelity"] = outcome.fidelity;
            tj["conditional_mean"] = {outcome.conditional.mean()(0), outcome.conditional.mean()(1)};
            trials_json.push_back(tj);
            last = std::move(outcome);
        }

        const double closed = closed_form_fidelity(config, k - 1, l - 1, gains, a);

        json doc;
        doc["schema"] = "1";
        doc["command"] = "teleport";
        doc["spec"] = {{"n", n}, {"scenario", scenario}, {"k", k}, {"l", l},
                       {"alpha", alpha}, {"g", bell_gain}, {"gn", gain_request},
                       {"trials", trials}, {"seed", used_seed}};
        doc["spec"].update(squeezing.echo());
        json res;
        res["gains"] = {{"g", gains.bell}, {"gn", gains.assist}};
        if (gains.per_station) res["gains"]["per_station"] = *gains.per_station;
        res["fidelity"] = last->fidelity;
        res["closed_form_fidelity"] = closed;
        res["closed_form_delta"] = std::abs(last->fidelity - closed);
        res["output_state"] = state_to_json(last->output);
        res["conditional_cov"] = state_to_json(last->conditional)["cov"];
        res["degenerate"] = degenerate;
        res["trials"] = trials_json;
        doc["results"] = res;

        write_output(out, doc.dump(2) + "\n");
        return degenerate ? kExitDegenerate : kExitOk;
    }
};

struct ScanCmd {
    std::vector<int> ns;
    int n_min = 0, n_max = 0;
    RGrid grid;
    std::string format = "json";
    std::string out;

    int run() const {
        std::vector<int> list = ns;
        if (list.empty()) {
            if (n_min < 2 || n_max < n_min) {
                throw std::invalid_argument("give --n-list or a valid --n-min/--n-max range");
            }
            for (int n = n_min; n <= n_max; ++n) list.push_back(n);
        }
        const auto reports = threshold_scan(list, grid);

        auto class_name = [](ThresholdClass c) {
            return c == ThresholdClass::AlwaysQuantum ? "always-quantum" : "dips-classical";
        };

        if (format == "json") {
            json doc;
            doc["schema"] = "1";
            doc["command"] = "scan";
            doc["spec"] = {{"n_list", list}, {"r_max", grid.max_r}, {"r_step", grid.step}};
            json arr = json::array();
            for (const auto& rep : reports) {
                json points = json::array();
                for (const auto& pt : rep.stationary_points) {
                    points.push_back({{"type", pt.is_max ? "max" : "min"}, {"r", pt.r},
                                      {"squeezing_dB", db_from_r(pt.r)}, {"F_opt", pt.fidelity}});
                }
                arr.push_back({{"N", rep.n}, {"classification", class_name(rep.classification)},
                               {"min_F", rep.min_fidelity}, {"r_at_min", rep.r_at_min},
                               {"stationary_points", points}});
            }
            doc["results"] = arr;
            write_output(out, doc.dump(2) + "\n");
        } else if (format == "csv") {
            std::string text = "N,classification,min_F,r_at_min,r_local_max,F_local_max,r_local_min,F_local_min\n";
            for (const auto& rep : reports) {
                std::string max_r, max_f, min_r, min_f;
                for (const auto& pt : rep.stationary_points) {
                    if (pt.is_max && max_r.empty()) {
                        max_r = fmt12(pt.r);
                        max_f = fmt12(pt.fidelity);
                    }
                    if (!pt.is_max && min_r.empty()) {
                        min_r = fmt12(pt.r);
                        min_f = fmt12(pt.fidelity);
                    }
                }
                text += std::to_string(rep.n) + "," + class_name(rep.classification) + "," +
                        fmt12(rep.min_fidelity) + "," + fmt12(rep.r_at_min) + "," + max_r + "," +
                        max_f + "," + min_r + "," + min_f + "\n";
            }
            write_output(out, text);
        } else {
            throw std::invalid_argument("--format must be csv or json");
        }
        return kExitOk;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "cvqnet: continuous-variable teleportation network simulator.\n"
        "Quadrature units have hbar = 1/2 (vacuum variance 1/4). Squeezing in dB\n"
        "is 10*log10(e^{2r}) = 8.685889638*r. Mode indices on the command line\n"
        "are 1-based."};
    app.require_subcommand(1);

    StateCmd state_cmd;
    auto* state = app.add_subcommand("state", "build a resource state and print diagnostics");
    state->add_option("--n", state_cmd.n, "number of parties")->required();
    state->add_option("--scenario", state_cmd.scenario, "all-equal | one-squeezed | custom");
    state_cmd.squeezing.attach(state);
    state->add_option("--k", state_cmd.k, "first mode of the correlation diagnostic (1-based)");
    state->add_option("--l", state_cmd.l, "second mode of the correlation diagnostic (1-based)");
    state->add_option("--gn", state_cmd.gain_request, "assisting gain: number or 'optimal'");
    state->add_option("--format", state_cmd.format, "json");
    state->add_option("--out", state_cmd.out, "output path (default stdout)");

    CurveCmd curve_cmd;
    auto* curve = app.add_subcommand("curve", "optimized fidelity over a squeezing grid");
    curve->add_option("--n-list", curve_cmd.ns, "party counts, e.g. 2,3,4,8,20,50")
        ->delimiter(',')
        ->required();
    curve->add_option("--scenario", curve_cmd.scenario, "all-equal | one-squeezed");
    curve->add_option("--db-min", curve_cmd.grid.min_db, "grid start in dB (default 0)");
    curve->add_option("--db-max", curve_cmd.grid.max_db, "grid end in dB (default 20)");
    curve->add_option("--db-step", curve_cmd.grid.step_db, "grid step in dB (default 0.5)");
    curve->add_option("--format", curve_cmd.format, "csv | json (default csv)");
    curve->add_option("--out", curve_cmd.out, "output path (default stdout)");

    TeleportCmd teleport_cmd;
    auto* teleport = app.add_subcommand("teleport", "run the teleportation protocol");
    teleport->add_option("--n", teleport_cmd.n, "number of parties")->required();
    teleport->add_option("--scenario", teleport_cmd.scenario, "all-equal | one-squeezed | custom");
    teleport_cmd.squeezing.attach(teleport);
    teleport->add_option("--k", teleport_cmd.k, "sender mode (1-based, default 1)");
    teleport->add_option("--l", teleport_cmd.l, "receiver mode (1-based, default 2)");
    teleport->add_option("--alpha", teleport_cmd.alpha, "input amplitude: x p (default 0 0)")
        ->expected(2);
    teleport->add_option("--g", teleport_cmd.bell_gain, "Bell-result gain g (default 1)");
    teleport->add_option("--gn", teleport_cmd.gain_request,
                         "assisting gain: number or 'optimal' (default optimal)");
    teleport->add_option("--per-station", teleport_cmd.per_station,
                         "per-station assisting gains (N-2 values)")
        ->delimiter(',');
    teleport->add_option("--trials", teleport_cmd.trials, "number of sampled outcome sets");
    teleport->add_option("--seed", teleport_cmd.seed, "RNG seed (generated and printed if absent)");
    teleport->add_option("--format", teleport_cmd.format, "json");
    teleport->add_option("--out", teleport_cmd.out, "output path (default stdout)");

    ScanCmd scan_cmd;
    auto* scan = app.add_subcommand("scan", "classify N against the classical fidelity bound");
    scan->add_option("--n-list", scan_cmd.ns, "party counts")->delimiter(',');
    scan->add_option("--n-min", scan_cmd.n_min, "first N of a range");
    scan->add_option("--n-max", scan_cmd.n_max, "last N of a range");
    scan->add_option("--r-max", scan_cmd.grid.max_r, "scan upper end in r (default 6)");
    scan->add_option("--r-step", scan_cmd.grid.step, "scan step in r (default 1e-3)");
    scan->add_option("--format", scan_cmd.format, "json | csv (default json)");
    scan->add_option("--out", scan_cmd.out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (state->parsed()) return state_cmd.run();
        if (curve->parsed()) return curve_cmd.run();
        if (teleport->parsed()) return teleport_cmd.run();
        if (scan->parsed()) return scan_cmd.run();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
