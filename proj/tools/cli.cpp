#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <future>
#include <iomanip>
#include <sstream>

#include "dualflow/dynamics.hpp"
#include "dualflow/infogeo.hpp"
#include "dualflow/kinetics.hpp"
#include "dualflow/netio.hpp"

namespace dualflow::cli {

using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"info",          "simulate",        "equilibrium", "decompose",
                                            "effective-eq",  "effective-cycle", "ledger",      "classify"};

std::string vec_text(const Vec& v) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v(i));
    return s + ")";
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

Vec default_reference(const ReactionNetwork& net) {
    return wegscheider_check(net).tilde_y.array().exp();
}

Trajectory run_simulation(const Scenario& sc, const IntegratorOptions& io) {
    const ScenarioConfig& c = sc.config;
    if (c.schedule_path.empty()) return simulate(sc.network, c.x0, c.t_end, io);
    const RateSchedule sched = schedule_from_json(json::parse(read_file(c.schedule_path)), sc.network.num_edges());
    return simulate_timedep(sc.network, c.x0, c.t_end, sched, io);
}

void print_matrix(std::ostream& out, const char* name, const IntMat& m) {
    out << name << ":";
    if (m.size() == 0) {
        out << " (none)\n";
        return;
    }
    out << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out << "  [";
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
        out << "]\n";
    }
}

int cmd_info(const Scenario& sc, const std::string& dir, std::ostream& out) {
    const ReactionNetwork& net = sc.network;
    const WegscheiderReport w = wegscheider_check(net);
    out << "species: " << net.num_species() << "\n"
        << "hypervertices: " << net.num_hypervertices() << "\n"
        << "edges: " << net.num_edges() << "\n"
        << "rank: " << net.stoich_rank() << "\n"
        << "conserved: " << net.num_conserved() << "\n"
        << "cycles: " << net.num_cycles() << "\n";
    print_matrix(out, "S", net.stoich());
    print_matrix(out, "U", net.cons_basis());
    print_matrix(out, "V^T", IntMat(net.cycle_basis().transpose()));
    out << "wegscheider: " << (w.is_equilibrium ? "equilibrium" : "nonequilibrium");
    if (w.cycle_affinity.size()) out << " (cycle affinity " << vec_text(w.cycle_affinity) << ")";
    out << "\n";
    json species = json::array(), labels = json::array();
    for (const auto& s : net.species()) species.push_back(s);
    for (const auto& l : net.labels()) labels.push_back(l);
    const json report = {{"kind", "info"},
                         {"species", species},
                         {"labels", labels},
                         {"num_species", net.num_species()},
                         {"num_hypervertices", net.num_hypervertices()},
                         {"num_edges", net.num_edges()},
                         {"rank", net.stoich_rank()},
                         {"gamma", to_json(net.gamma())},
                         {"incidence", to_json(net.incidence())},
                         {"stoich", to_json(net.stoich())},
                         {"cons_basis", to_json(net.cons_basis())},
                         {"cycle_basis", to_json(net.cycle_basis())},
                         {"wegscheider", report_json(w)}};
    write_file(join(dir, "info.json"), emit_report_json(report));
    return Success;
}

int cmd_simulate(const Scenario& sc, const std::string& dir, std::ostream& out) {
    IntegratorOptions io = sc.config.integrator_options();
    Trajectory traj;
    try {
        traj = run_simulation(sc, io);
    } catch (const BoundaryHalt& h) {
        write_file(join(dir, "trajectory.csv"), emit_trajectory_csv(h.partial(), sc.network));
        throw;
    }
    write_file(join(dir, "trajectory.csv"), emit_trajectory_csv(traj, sc.network));
    out << "samples: " << traj.size() << "\n"
        << "accepted_steps: " << traj.accepted_steps << "\n"
        << "rejected_steps: " << traj.rejected_steps << "\n"
        << "final_state: " << vec_text(traj.states.back()) << "\n"
        << "conservation_drift: " << format_double(conservation_drift(traj)) << "\n";
    return Success;
}

int cmd_equilibrium(const Scenario& sc, const NewtonOptions& nopt, const std::string& dir, std::ostream& out) {
    const ReactionNetwork& net = sc.network;
    const ScenarioConfig& c = sc.config;
    const Vec x_ref = c.reference ? *c.reference : default_reference(net);
    const ThermoFunction thermo =
        c.x_circ ? ThermoFunction::kl(*c.x_circ) : ThermoFunction::kl_unit(net.num_species());
    const BirchResult b = birch_point(net, thermo, c.x0, x_ref, nopt);
    const PythagorasReport p = pythagoras_vertex(net, thermo, c.x0, b.x_eq, x_ref);
    out << "x_eq: " << vec_text(b.x_eq) << "\n"
        << "conservation_residual: " << format_double(b.conservation_residual) << "\n"
        << "pythagoras_gap: " << format_double(p.gap) << "\n";
    json report = report_json(b, p);
    report["reference"] = to_json(x_ref);
    write_file(join(dir, "equilibrium.json"), emit_report_json(report));
    return Success;
}

int cmd_decompose(const Scenario& sc, const NewtonOptions& nopt, const std::string& dir, std::ostream& out) {
    const ReactionNetwork& net = sc.network;
    const Vec x = sc.config.state ? *sc.config.state : sc.config.x0;
    const EdgePair p = lma_flux(net, x);
    const Vec j = sc.config.flux ? *sc.config.flux : p.flux;
    const HHKDecomposition d = hhk_decompose(net, p.dissipation(), x, j, p.force, nopt);
    out << "j_eq: " << vec_text(d.j_eq) << "\n"
        << "f_st: " << vec_text(d.f_st) << "\n"
        << "divergence_residual: " << format_double(d.divergence_residual) << "\n"
        << "stationarity_residual: " << format_double(d.stationarity_residual) << "\n"
        << "primal_pythagoras_gap: " << format_double(d.primal_gap) << "\n";
    write_file(join(dir, "decompose.json"), emit_report_json(report_json(d)));
    return Success;
}

int cmd_effective(const Scenario& sc, const NewtonOptions& nopt, bool equilibrium, const std::string& dir,
                  std::ostream& out) {
    const IntegratorOptions io = sc.config.integrator_options();
    const Trajectory traj = run_simulation(sc, io);
    write_file(join(dir, "trajectory.csv"), emit_trajectory_csv(traj, sc.network));
    const EffectiveSchedule s = equilibrium ? effective_Keq(sc.network, traj, nopt) : effective_Kst(sc.network, traj, nopt);
    json report = report_json(s, sc.network, equilibrium ? "effective_equilibrium" : "effective_cycle");
    out << "grid_points: " << s.times.size() << "\n"
        << "kappa_variation: " << format_double(s.kappa_variation()) << "\n";
    if (equilibrium) {
        const Trajectory again = simulate_timedep(sc.network, sc.config.x0, sc.config.t_end, s.rate_schedule(), io);
        write_file(join(dir, "trajectory_resimulated.csv"), emit_trajectory_csv(again, sc.network));
        const double dev = sup_relative_deviation(traj, again);
        report["closed_loop"] = {{"sup_relative_deviation", dev}, {"tolerance", 1e-4}, {"passed", dev < 1e-4}};
        out << "max_velocity_residual: " << format_double(s.max_velocity_residual()) << "\n"
            << "closed_loop_deviation: " << format_double(dev) << "\n";
        write_file(join(dir, "schedule_eq.json"), emit_report_json(report));
    } else {
        out << "max_steadiness_residual: " << format_double(s.max_steadiness_residual()) << "\n"
            << "max_force_cycle_residual: " << format_double(s.max_force_cycle_residual()) << "\n";
        write_file(join(dir, "schedule_st.json"), emit_report_json(report));
    }
    return Success;
}

int cmd_ledger(const Scenario& sc, const std::string& dir, std::ostream& out) {
    const ReactionNetwork& net = sc.network;
    const WegscheiderReport w = wegscheider_check(net);
    IntegratorOptions io = sc.config.integrator_options();
    Vec x_ref;
    if (sc.config.reference) {
        x_ref = *sc.config.reference;
    } else if (w.is_equilibrium) {
        x_ref = default_reference(net);
    } else {
        x_ref = steady_state(net, sc.config.x0);
    }
    io.reference = x_ref;
    const Trajectory traj = run_simulation(sc, io);
    write_file(join(dir, "trajectory.csv"), emit_trajectory_csv(traj, net));

    json report = {{"kind", "ledger"}, {"reference", to_json(x_ref)}, {"wegscheider", report_json(w)}};
    if (w.is_equilibrium) {
        const DeGiorgiReport dg = degiorgi_ledger(traj, net, x_ref);
        report["degiorgi"] = report_json(dg);
        out << "degiorgi_gap: " << format_double(dg.gap) << " (tolerance " << format_double(dg.tolerance) << ")\n"
            << "monotone: " << (dg.monotone ? "yes" : "no") << "\n";
    } else {
        report["degiorgi"] = {{"refused", "network violates the Wegscheider condition"}};
        out << "degiorgi: refused (nonequilibrium network)\n";
    }
    const LyapunovReport ly = lyapunov_monitor(traj, net, x_ref);
    report["lyapunov"] = report_json(ly);
    int epr_violations = 0;
    for (const LedgerRow& row : traj.ledger) epr_violations += row.epr < row.pepr;
    report["epr_violations"] = epr_violations;
    report["conservation_drift"] = conservation_drift(traj);
    out << "lyapunov_violations: " << ly.violations << "\n"
        << "epr_violations: " << epr_violations << "\n";
    write_file(join(dir, "ledger.json"), emit_report_json(report));
    return Success;
}

int cmd_classify(const Scenario& sc, std::optional<double> tol, const std::string& dir, std::ostream& out) {
    const double t = tol ? *tol : sc.config.tol;
    const Vec x = sc.config.state ? *sc.config.state : sc.config.x0;
    const Classification c = classify_state(sc.network, x, t);
    json report = report_json(c);
    report["state"] = to_json(x);
    report["tolerance"] = t;
    out << "state: " << to_string(c.label) << "\n";
    try {
        const Vec xs = steady_state(sc.network, sc.config.x0);
        const Classification cs = classify_state(sc.network, xs, t);
        json ss = report_json(cs);
        ss["state"] = to_json(xs);
        report["steady_state"] = ss;
        out << "steady_state: " << to_string(cs.label) << " at " << vec_text(xs) << "\n";
    } catch (const SolverError& e) {
        report["steady_state"] = {{"error", e.what()}};
        out << "steady_state: not found\n";
    }
    write_file(join(dir, "classify.json"), emit_report_json(report));
    return Success;
}

int execute(const Options& opts, const Scenario& sc, const std::string& dir, std::ostream& out) {
    NewtonOptions nopt;
    if (opts.tol && opts.command != "classify") nopt.tol = *opts.tol;
    const std::string& c = opts.command;
    if (c == "info") return cmd_info(sc, dir, out);
    if (c == "simulate") return cmd_simulate(sc, dir, out);
    if (c == "equilibrium") return cmd_equilibrium(sc, nopt, dir, out);
    if (c == "decompose") return cmd_decompose(sc, nopt, dir, out);
    if (c == "effective-eq") return cmd_effective(sc, nopt, true, dir, out);
    if (c == "effective-cycle") return cmd_effective(sc, nopt, false, dir, out);
    if (c == "ledger") return cmd_ledger(sc, dir, out);
    if (c == "classify") return cmd_classify(sc, opts.tol, dir, out);
    throw InvalidArgument("unknown command '" + c + "'");
}

template <class F>
int guarded(F&& body, std::ostream& err) {
    try {
        return body();
    } catch (const BoundaryHalt& e) {
        err << "boundary halt: " << e.what() << "\n";
        return BoundaryHalted;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << "\n";
        return SolverFailure;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return UsageError;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return UsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return SolverFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return UsageError;
    }
}

}  // namespace

SweepSpec SweepSpec::parse(const std::string& text) {
    const auto dot = text.find('.');
    const auto eq = text.find('=');
    if (dot == std::string::npos || eq == std::string::npos || eq < dot)
        throw InvalidArgument("sweep: expected <label>.<kf|kr>=<start>:<stop>:<count>");
    SweepSpec s;
    s.label = text.substr(0, dot);
    const std::string key = text.substr(dot + 1, eq - dot - 1);
    if (key != "kf" && key != "kr") throw InvalidArgument("sweep: rate key must be kf or kr");
    s.forward = key == "kf";
    std::istringstream range(text.substr(eq + 1));
    char c1 = 0, c2 = 0;
    range >> s.start >> c1 >> s.stop >> c2 >> s.count;
    if (!range || c1 != ':' || c2 != ':' || !range.eof())
        throw InvalidArgument("sweep: range must be <start>:<stop>:<count>");
    if (!(s.start > 0.0) || !(s.stop > 0.0) || s.count < 1 || s.count > 10000)
        throw InvalidArgument("sweep: rates must be positive and count in [1, 10000]");
    return s;
}

std::vector<double> SweepSpec::values() const {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) v.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
    return v;
}

int run(const Options& opts, std::ostream& out, std::ostream& err) {
    std::optional<Scenario> sc;
    std::optional<SweepSpec> sweep;
    const int loaded = guarded(
        [&] {
            sc.emplace(load_scenario(opts.scenario));
            if (opts.tol && !(*opts.tol > 0.0)) throw InvalidArgument("--tol must be positive");
            if (!opts.sweep.empty()) sweep = SweepSpec::parse(opts.sweep);
            return int(Success);
        },
        err);
    if (loaded != Success) return loaded;
    if (!sweep) return guarded([&] { return execute(opts, *sc, opts.out, out); }, err);

    const auto& labels = sc->network.labels();
    const auto it = std::find(labels.begin(), labels.end(), sweep->label);
    if (it == labels.end()) {
        err << "error: sweep: unknown reaction label '" << sweep->label << "'\n";
        return UsageError;
    }
    const Eigen::Index e = it - labels.begin();
    const std::vector<double> values = sweep->values();
    struct Result {
        int code;
        std::string out, err;
    };
    std::vector<std::future<Result>> runs;
    for (std::size_t i = 0; i < values.size(); ++i) {
        runs.push_back(std::async(std::launch::async, [&, i] {
            Vec kp = sc->network.kplus(), km = sc->network.kminus();
            (sweep->forward ? kp : km)(e) = values[i];
            const Scenario variant{sc->config, sc->network.with_rates(kp, km)};
            std::ostringstream o, r;
            const std::string dir = join(opts.out, "sweep_" + std::to_string(i));
            const int code = guarded([&] { return execute(opts, variant, dir, o); }, r);
            return Result{code, o.str(), r.str()};
        }));
    }
    int worst = Success;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Result res = runs[i].get();
        out << "[sweep " << i << "] " << sweep->label << (sweep->forward ? ".kf" : ".kr") << "="
            << format_double(values[i]) << " exit=" << res.code << "\n"
            << res.out;
        err << res.err;
        worst = std::max(worst, res.code);
    }
    return worst;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Thermodynamic and information-geometric analysis of chemical reaction networks", "dualflow"};
    Options opts;
    app.add_option("command", opts.command, "info | simulate | equilibrium | decompose | effective-eq | "
                                            "effective-cycle | ledger | classify")
        ->required()
        ->check(CLI::IsMember(kCommands));
    app.add_option("--scenario", opts.scenario, "scenario JSON file")->required();
    app.add_option("--out", opts.out, "output directory")->capture_default_str();
    app.add_option("--tol", opts.tol, "solver tolerance (classification tolerance for classify)");
    app.add_option("--seed", opts.seed, "seed recorded for reproducibility")->capture_default_str();
    app.add_option("--sweep", opts.sweep, "rate sweep <label>.<kf|kr>=<start>:<stop>:<count>");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Success : UsageError;
    }
    return run(opts, out, err);
}

}  // namespace dualflow::cli
