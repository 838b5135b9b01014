// qmc — command-line front end. Data goes to --out (or stdout) as CSV,
// diagnostics to stderr. Exit codes: 0 ok, 1 domain/configuration error,
// 2 numerical failure or a failed check.

#include "qmc/analysis.hpp"
#include "qmc/classical.hpp"
#include "qmc/compound.hpp"
#include "qmc/config.hpp"
#include "qmc/model.hpp"
#include "qmc/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

using namespace qmc;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitNumerical = 2;

void check_start(const RunConfig& cfg, std::size_t dim) {
    if (cfg.start > dim) throw DomainError("'start': state " + std::to_string(cfg.start) + " exceeds dim " + std::to_string(dim));
}

std::vector<double> site_series(const RunConfig& cfg, const UnitarySchedule& sched, std::uint64_t t) {
    const double p = cfg.p_value();
    const auto traj = (p == 0.0 && sched.form() == ScheduleForm::Exponential)
                          ? pure_evolve_fast(cfg.start_index(), sched, t)
                          : evolve(DensityMatrix::basis(sched.dim(), cfg.start_index()), sched, DecoherenceParams(p), t);
    return traj.series(cfg.start_index());
}

int cmd_evolve(const RunConfig& cfg, std::ostream& out) {
    const UnitarySchedule sched(cfg.generator(), cfg.schedule_params());
    check_start(cfg, sched.dim());
    const auto traj = evolve(DensityMatrix::basis(sched.dim(), cfg.start_index()), sched,
                             DecoherenceParams(cfg.p_value()), cfg.horizon());
    write_trajectory_csv(out, traj);
    return kExitOk;
}

int cmd_sample(const RunConfig& cfg, std::ostream& out) {
    const UnitarySchedule sched(cfg.generator(), cfg.schedule_params());
    check_start(cfg, sched.dim());
    const auto est = mc_estimate(cfg.start_index(), sched, DecoherenceParams(cfg.p_value()), cfg.horizon(), cfg.samples,
                                 RngStream(cfg.seed), cfg.workers);
    write_estimate_csv(out, est);
    return kExitOk;
}

int cmd_oracle_check(const RunConfig& cfg, std::ostream& out) {
    const UnitarySchedule sched(cfg.generator(), cfg.schedule_params());
    check_start(cfg, sched.dim());
    const DecoherenceParams dec(cfg.p_value());
    const auto t = cfg.horizon();
    const auto row = enumerate_paths_row(cfg.start_index(), sched, dec, t);
    const auto traj = evolve(DensityMatrix::basis(sched.dim(), cfg.start_index()), sched, dec, t);
    const auto& ev = traj.steps.back().probabilities;
    double worst = 0.0;
    out << "j,enumerate_paths,evolve,abs_diff\n";
    for (std::size_t j = 0; j < row.size(); ++j) {
        const double d = std::abs(row[j] - ev[j]);
        worst = std::max(worst, d);
        out << (j + 1) << ',' << csv::num(row[j]) << ',' << csv::num(ev[j]) << ',' << csv::num(d) << '\n';
    }
    std::cerr << "max |enumerate_paths - evolve| = " << csv::num(worst) << '\n';
    if (worst > 1e-10) {
        std::cerr << "oracle-check: FAILED (tolerance 1e-10)\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_period(const RunConfig& cfg, std::ostream& out) {
    if (cfg.schedule != ScheduleForm::Exponential) throw ConfigError("period analysis needs the exp schedule");
    const UnitarySchedule sched(cfg.generator(), cfg.schedule_params());
    check_start(cfg, sched.dim());
    const auto& ev = sched.spectrum().eigenvalues;
    const double gap = ev[0] - ev[1];
    if (!(gap > 1e-12)) throw DomainError("period: the two largest eigenvalues of G coincide");
    const auto series = site_series(cfg, sched, cfg.horizon());
    const auto rows = period_ratios(series, gap, cfg.zeta_value());
    write_period_csv(out, rows);
    if (rows.empty()) std::cerr << "period: fewer than two local maxima in the series\n";
    return kExitOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    const UnitarySchedule sched(cfg.generator(), cfg.schedule_params());
    check_start(cfg, sched.dim());
    const auto series = site_series(cfg, sched, cfg.horizon());
    const bool raw = cfg.p_value() >= cfg.switchover;
    const auto pts = raw ? raw_points(series, 1, std::min<std::size_t>(200, series.size() - 1)) : peak_points(series);
    const auto sel = model_selection(pts, sched.dim(), raw ? SelectionScore::R2 : SelectionScore::AdjustedR2);

    out << "model,selected,c,r,baseline,r2,adj_r2,n_points,converged\n";
    for (const auto* f : {sel.exponential ? &*sel.exponential : nullptr, sel.rational ? &*sel.rational : nullptr}) {
        if (!f) continue;
        out << to_string(f->model) << ',' << (f->model == sel.selected ? 1 : 0) << ',' << csv::num(f->c) << ','
            << csv::num(f->r) << ',' << csv::num(f->baseline) << ',' << csv::num(f->r_squared) << ','
            << csv::num(f->adjusted_r_squared) << ',' << f->n_points << ',' << (f->converged ? 1 : 0) << '\n';
    }
    if (!sel.best().converged) {
        std::cerr << "fit: the selected " << to_string(sel.selected) << " fit did not converge\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    SweepGrid grid;
    if (cfg.table) {
        grid = table_grid(*cfg.table);
    } else {
        grid.p_values = {0.0};
        grid.zeta_values = {1.0};
        grid.lambda_values = {1.0};
    }
    if (!cfg.p.empty()) grid.p_values = cfg.p;
    if (!cfg.zeta.empty()) grid.zeta_values = cfg.zeta;
    if (!cfg.lambda.empty()) grid.lambda_values = cfg.lambda;
    if (!cfg.dim.empty()) grid.dims = cfg.dim;
    if (cfg.t) grid.horizon = *cfg.t;
    grid.graph = cfg.graph;
    grid.form = cfg.schedule;
    grid.initial_state = cfg.start_index();
    grid.raw_switchover = cfg.switchover;

    const auto rows = run_sweep(grid, cfg.workers);
    write_sweep_csv(out, rows);
    const auto bad = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.status != SweepStatus::Ok; });
    if (bad > 0) std::cerr << "sweep: " << bad << " of " << rows.size() << " cells without a converged fit\n";
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    const auto checks = run_property_suite(cfg.seed);
    write_checks_csv(out, checks);
    bool ok = true;
    for (const auto& c : checks) {
        if (!c.passed) {
            std::cerr << "verify: " << c.name << " FAILED (worst " << csv::num(c.worst) << ")\n";
            ok = false;
        }
    }
    return ok ? kExitOk : kExitNumerical;
}

// Contraction certificate of the Q kernels along one sampled timeline.
int cmd_certify(const RunConfig& cfg, std::ostream& out) {
    const UnitarySchedule sched(cfg.generator(), cfg.schedule_params());
    RngStream rng(cfg.seed);
    const auto tl = sample_timeline(cfg.p_value(), cfg.horizon(), rng);
    const auto kernels = timeline_kernels(sched, tl);
    const auto cert = convergence_report(kernels, EquilibriumMatrix::uniform(sched.dim()));
    write_certificate_csv(out, cert);
    std::cerr << "measurements " << tl.count() << ", final deviation " << csv::num(cert.final_deviation())
              << ", product bound " << csv::num(cert.product_bound()) << '\n';
    if (!cert.hypothesis_holds() || !cert.bound_holds()) {
        std::cerr << "certify: bound violated\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
    switch (cfg.command) {
        case Command::Evolve: return cmd_evolve(cfg, out);
        case Command::Sample: return cmd_sample(cfg, out);
        case Command::OracleCheck: return cmd_oracle_check(cfg, out);
        case Command::Period: return cmd_period(cfg, out);
        case Command::Fit: return cmd_fit(cfg, out);
        case Command::Sweep: return cmd_sweep(cfg, out);
        case Command::Verify: return cmd_verify(cfg, out);
        case Command::Certify: return cmd_certify(cfg, out);
    }
    return kExitDomain;
}

struct Subcommand {
    Command command;
    const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {Command::Evolve, "exact channel evolution; CSV n,p1..pm"},
    {Command::Sample, "Monte Carlo estimate of P_t(start, .) from random measurement timelines"},
    {Command::OracleCheck, "compare path enumeration with evolution (t <= 12, dim <= 4)"},
    {Command::Period, "detected vs predicted oscillation periods"},
    {Command::Fit, "exponential and rational decay fits of P_n(start, start)"},
    {Command::Sweep, "decay-rate grid over p, zeta, lambda, dim (--table 1..6 for presets)"},
    {Command::Verify, "cross-module property suite"},
    {Command::Certify, "contraction certificate of the kernels along one sampled timeline"},
};

const char* flag_help(std::string_view key) {
    if (key == "p") return "decoherence probability in [0,1] (comma list for sweep)";
    if (key == "zeta") return "schedule exponent >= 0 (comma list for sweep)";
    if (key == "lambda") return "coupling > 0 (comma list for sweep)";
    if (key == "dim") return "number of sites, 2..64 (comma list for sweep)";
    if (key == "graph") return "full | cyclic";
    if (key == "schedule") return "exp | sqrt2x2";
    if (key == "start") return "initial site, 1-based";
    if (key == "t") return "horizon (steps)";
    if (key == "samples") return "Monte Carlo sample count";
    if (key == "seed") return "64-bit seed";
    if (key == "out") return "output CSV path (default stdout)";
    if (key == "workers") return "worker threads";
    if (key == "table") return "sweep preset 1..6";
    if (key == "switchover") return "p at which fits switch from local maxima to raw values";
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qmc: decoherent time-inhomogeneous quantum walk simulator"};
    app.require_subcommand(1);

    std::vector<std::pair<std::string, std::string>> flags;
    std::string config_path;
    std::optional<Command> chosen;
    for (const auto& sc : kSubcommands) {
        auto* sub = app.add_subcommand(std::string(to_string(sc.command)), sc.help);
        sub->callback([&chosen, c = sc.command] { chosen = c; });
        for (auto key : kConfigKeys) {
            sub->add_option_function<std::string>(
                "--" + std::string(key), [&flags, key](const std::string& v) { flags.emplace_back(key, v); },
                flag_help(key));
        }
        sub->add_option("--config", config_path, "key = value configuration file; flags take precedence");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitDomain;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = parse_config_file(config_path, cfg);
        for (const auto& [k, v] : flags) apply_setting(cfg, k, v);
        cfg.command = *chosen;

        std::ostringstream buf;
        const int code = dispatch(cfg, buf);
        if (cfg.out.empty()) {
            std::cout << buf.str() << std::flush;
        } else {
            std::ofstream f(cfg.out, std::ios::binary);
            if (!f) throw ConfigError("cannot write '" + cfg.out + "'");
            f << buf.str();
            if (!f.flush()) throw ConfigError("write to '" + cfg.out + "' failed");
        }
        return code;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
}
