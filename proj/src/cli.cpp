#include "sympint/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "sympint/diagnostics.hpp"
#include "sympint/iterative_expm.hpp"
#include "sympint/multiscale_integrator.hpp"
#include "sympint/reference_oracles.hpp"
#include "sympint/scenarios.hpp"

namespace sympint::cli {

namespace {

// Shortest round-trip decimal form; locale-independent and reproducible.
std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_or_blank(double v) { return std::isnan(v) ? "" : fmt(v); }

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

ExpBackend parse_backend(const std::string& token) {
    if (token == "symplectic") return ExpBackend::SymplecticExpm;
    if (token == "iterative") return ExpBackend::Iterative;
    if (token == "diag") return ExpBackend::DiagOracle;
    if (token == "expm-taylor" || token == "taylor")
        return ExpBackend::TaylorSquaring;
    if (token == "fine-verlet") return ExpBackend::FineVerletPhi3;
    throw CLI::ValidationError("backend", "unknown backend: " + token);
}

struct Options {
    std::string scenario = "diag1d";
    double omega = 100.0;
    double H = 0.1;
    double T = 100.0;
    int n = 10;
    std::string backend = "symplectic";
    std::string backends = "symplectic,expm-taylor,diag";
    long long df = 100;
    unsigned seed = 0;
    std::string out_path;
    std::string config_path;
    double bench_h = 0.0;
    double grid_start = 0.001;
    double grid_stop = 0.2;
    double grid_step = 0.001;
    int trials = 20;
    unsigned verify_seed = 12345;
};

// key=value per line, '#' comments. Flags given on the command line win over
// the file, so the file only establishes defaults.
std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::FileError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string()
                                          : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

void apply_config(Options& o, const std::map<std::string, std::string>& kv) {
    auto get = [&kv](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto as_double = [](const std::string& s, const char* key) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw CLI::ValidationError(key, "bad numeric value: " + s);
        }
    };
    if (const auto* v = get("scenario")) o.scenario = *v;
    if (const auto* v = get("backend")) o.backend = *v;
    if (const auto* v = get("backends")) o.backends = *v;
    if (const auto* v = get("out")) o.out_path = *v;
    if (const auto* v = get("omega")) o.omega = as_double(*v, "omega");
    if (const auto* v = get("H")) o.H = as_double(*v, "H");
    if (const auto* v = get("T")) o.T = as_double(*v, "T");
    if (const auto* v = get("n")) o.n = static_cast<int>(as_double(*v, "n"));
    if (const auto* v = get("df"))
        o.df = static_cast<long long>(as_double(*v, "df"));
    if (const auto* v = get("seed"))
        o.seed = static_cast<unsigned>(as_double(*v, "seed"));
    if (const auto* v = get("bench-h")) o.bench_h = as_double(*v, "bench-h");
    if (const auto* v = get("grid-start"))
        o.grid_start = as_double(*v, "grid-start");
    if (const auto* v = get("grid-stop"))
        o.grid_stop = as_double(*v, "grid-stop");
    if (const auto* v = get("grid-step"))
        o.grid_step = as_double(*v, "grid-step");
}

ScenarioRealization realize(const Options& o) {
    std::string name = o.scenario;
    if (name == "custom-file")
        throw CLI::ValidationError(
            "scenario",
            "custom-file requires a config file whose scenario key names a "
            "built-in scenario");
    ScenarioParams params;
    params.name = name;
    params.omega = o.omega;
    params.d_f = static_cast<Index>(o.df);
    params.seed = o.seed;
    return make_scenario(params);
}

// Writes either to the --out path or to the session stream.
class OutputTarget {
  public:
    OutputTarget(const std::string& path, std::ostream& fallback)
        : fallback_(fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_)
                throw CLI::FileError("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

  private:
    std::ofstream file_;
    std::ostream& fallback_;
};

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    ScenarioRealization sc = realize(o);

    StepperConfig cfg;
    cfg.H = o.H;
    cfg.T = o.T;
    cfg.n = o.n;
    cfg.backend = parse_backend(o.backend);
    if (sc.name == "diag1d") {
        const double omega = sc.omega;
        cfg.observable = [omega](const PhaseState& s) {
            return adiabatic_invariant_ex1(s, omega);
        };
    }

    Stepper stepper(sc.system, cfg);
    Trajectory traj = stepper.simulate(sc.initial);

    OutputTarget target(o.out_path, out);
    std::ostream& os = target.stream();

    std::vector<std::string> header{"t"};
    for (Index i = 0; i < sc.system.d_f; ++i)
        header.push_back("q_fast[" + std::to_string(i) + "]");
    for (Index i = 0; i < sc.system.d_f; ++i)
        header.push_back("p_fast[" + std::to_string(i) + "]");
    for (Index i = 0; i < sc.system.d_s; ++i)
        header.push_back("q_slow[" + std::to_string(i) + "]");
    for (Index i = 0; i < sc.system.d_s; ++i)
        header.push_back("p_slow[" + std::to_string(i) + "]");
    header.insert(header.end(), {"energy", "adiabatic_invariant", "mult_count"});
    write_row(os, header);

    for (std::size_t k = 0; k < traj.size(); ++k) {
        const PhaseState& s = traj.states[k];
        std::vector<std::string> row{fmt(traj.times[k])};
        for (Index i = 0; i < s.dim_fast(); ++i) row.push_back(fmt(s.q_fast[i]));
        for (Index i = 0; i < s.dim_fast(); ++i) row.push_back(fmt(s.p_fast[i]));
        for (Index i = 0; i < s.dim_slow(); ++i) row.push_back(fmt(s.q_slow[i]));
        for (Index i = 0; i < s.dim_slow(); ++i) row.push_back(fmt(s.p_slow[i]));
        row.push_back(fmt(traj.energies[k]));
        row.push_back(fmt_or_blank(traj.observables[k]));
        row.push_back(std::to_string(traj.mult_counts[k]));
        write_row(os, row);
    }

    if (!traj.ok()) {
        err << "error,simulate," << fmt(traj.times.back()) << ",\""
            << traj.error << "\"\n";
        return 1;
    }
    return 0;
}

int cmd_converge(const Options& o, std::ostream& out, std::ostream& err) {
    const std::vector<double> H_list{0.2, 0.1, 0.05, 0.025};
    const std::vector<double> epsilons{1e-4, 1e-6};

    const std::string name = o.scenario;
    const long long df = o.df;
    const unsigned seed = o.seed;
    const ScenarioFamily family = [name, df,
                                   seed](double eps) -> ScenarioRealizationRef {
        ScenarioParams params;
        params.name = name;
        params.omega = 1.0 / std::sqrt(eps);
        params.d_f = static_cast<Index>(df);
        params.seed = seed;
        ScenarioRealization sc = make_scenario(params);
        return {std::move(sc.system), std::move(sc.initial)};
    };

    ConvergenceOptions copts;
    copts.n = o.n;
    copts.backend = parse_backend(o.backend);

    try {
        const ConvergenceReport report =
            convergence_study(family, H_list, epsilons, o.T, copts);
        OutputTarget target(o.out_path, out);
        std::ostream& os = target.stream();
        write_row(os, {"epsilon", "H", "error", "slope", "constant"});
        for (const ConvergenceSeries& s : report.series)
            for (std::size_t i = 0; i < report.H_values.size(); ++i)
                write_row(os, {fmt(s.epsilon), fmt(report.H_values[i]),
                               fmt(s.errors[i]), fmt_or_blank(report.slope),
                               fmt_or_blank(s.constant)});
        return 0;
    } catch (const std::runtime_error& ex) {
        err << "error,converge,," << '"' << ex.what() << '"' << '\n';
        return 1;
    }
}

int cmd_resonance(const Options& o, std::ostream& out, std::ostream& err) {
    ScenarioRealization sc = realize(o);

    if (o.grid_step <= 0.0 || o.grid_start <= 0.0 ||
        o.grid_stop < o.grid_start)
        throw CLI::ValidationError("grid", "grid bounds are inconsistent");
    std::vector<double> grid;
    for (long long k = 0;; ++k) {
        const double H = o.grid_start + static_cast<double>(k) * o.grid_step;
        if (H > o.grid_stop * (1.0 + 1e-12)) break;
        grid.push_back(H);
    }

    const double bench_h = o.bench_h > 0.0 ? o.bench_h : 0.01 / sc.omega;

    ResonanceOptions ropts;
    ropts.n = o.n;
    ropts.backend = parse_backend(o.backend);

    try {
        const ResonanceReport report = resonance_scan(
            sc.system, sc.initial, grid, o.T, bench_h, ropts);
        OutputTarget target(o.out_path, out);
        std::ostream& os = target.stream();
        write_row(os, {"H", "ratio"});
        for (std::size_t i = 0; i < report.H_grid.size(); ++i)
            write_row(os, {fmt(report.H_grid[i]), fmt(report.ratios[i])});
        return 0;
    } catch (const std::runtime_error& ex) {
        err << "error,resonance,," << '"' << ex.what() << '"' << '\n';
        return 1;
    }
}

int cmd_expm_bench(const Options& o, std::ostream& out, std::ostream& err) {
    ScenarioRealization sc = realize(o);
    const Stiffness st = stiffness_at(sc.system, sc.initial.q_slow);
    const double eps = sc.system.epsilon;

    std::vector<std::string> tokens;
    std::stringstream ss(o.backends);
    std::string tok;
    while (std::getline(ss, tok, ',')) tokens.push_back(tok);
    if (tokens.empty())
        throw CLI::ValidationError("backends", "no backends given");

    OutputTarget target(o.out_path, out);
    std::ostream& os = target.stream();
    write_row(os, {"backend", "wall_seconds", "mult_count", "f3_residual"});

    for (const std::string& token : tokens) {
        const ExpBackend backend = parse_backend(token);
        if (backend == ExpBackend::FineVerletPhi3)
            throw CLI::ValidationError(
                "backends", "fine-verlet does not build exponential blocks");

        const auto tic = std::chrono::steady_clock::now();
        ExpTriple triple;
        try {
            switch (backend) {
                case ExpBackend::SymplecticExpm:
                    triple = symplectic_expm(st.K, st.dK, eps, o.H, o.n);
                    break;
                case ExpBackend::Iterative: {
                    IterState state = iter_init(st.K, st.dK, eps, o.H, o.n);
                    auto [next, tr] =
                        iter_update(std::move(state), st.K, st.dK, o.n);
                    triple = std::move(tr);
                    break;
                }
                case ExpBackend::DiagOracle: {
                    VerletSeed seed =
                        diagonalization_seed(st.K, st.dK, eps, o.H);
                    triple.F2 = std::move(seed.A);
                    triple.G2 = std::move(seed.B);
                    triple.F3 = std::move(seed.C);
                    triple.H = o.H;
                    triple.mult_count = 0;
                    break;
                }
                case ExpBackend::TaylorSquaring: {
                    StepperConfig cfg;
                    cfg.H = o.H;
                    cfg.T = o.H;
                    cfg.n = o.n;
                    cfg.backend = backend;
                    Stepper stepper(sc.system, cfg);
                    triple = stepper.exponentials_at(sc.initial.q_slow);
                    break;
                }
                default:
                    throw std::logic_error("unreachable backend");
            }
        } catch (const std::runtime_error& ex) {
            err << "error,expm-bench,," << '"' << ex.what() << '"' << '\n';
            return 1;
        }
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - tic;

        write_row(os, {token, fmt(elapsed.count()),
                       std::to_string(triple.mult_count),
                       fmt(symplectic_residual(triple.F3))});
    }
    return 0;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
    const VerificationReport report =
        run_verification(o.verify_seed, o.trials);
    OutputTarget target(o.out_path, out);
    std::ostream& os = target.stream();
    write_row(os, {"check", "residual", "bound", "comparison", "pass"});
    for (const VerificationCheck& c : report.checks)
        write_row(os, {c.name, fmt(c.residual), fmt(c.threshold),
                       c.at_least ? ">=" : "<=", c.pass ? "1" : "0"});
    if (!report.all_pass()) {
        err << "error,verify,,\"thresholds exceeded\"\n";
        return 1;
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
    Options o;

    // The config file (if any) supplies defaults before flag parsing, so
    // explicit flags always win.
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            o.config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            o.config_path = args[i].substr(9);
    }

    CLI::App app{"stiff-oscillator symplectic integrator workbench"};
    app.require_subcommand(1);

    try {
        if (!o.config_path.empty()) apply_config(o, load_config(o.config_path));

        auto add_common = [&o](CLI::App* cmd) {
            cmd->add_option("--scenario", o.scenario,
                            "diag1d | nondiag3d | toeplitz | custom-file");
            cmd->add_option("--omega", o.omega, "stiff frequency scale");
            cmd->add_option("--H", o.H, "coarse step");
            cmd->add_option("--T", o.T, "total time");
            cmd->add_option("--n", o.n, "squaring depth");
            cmd->add_option("--df", o.df, "fast dimension (toeplitz)");
            cmd->add_option("--seed", o.seed, "initial-data seed (toeplitz)");
            cmd->add_option("--out", o.out_path, "output CSV path");
            cmd->add_option("--config", o.config_path,
                            "key=value defaults file");
        };

        CLI::App* sim = app.add_subcommand("simulate", "run one trajectory");
        add_common(sim);
        sim->add_option("--backend", o.backend,
                        "symplectic | iterative | diag | expm-taylor | "
                        "fine-verlet");

        CLI::App* conv =
            app.add_subcommand("converge", "step-size refinement study");
        add_common(conv);
        conv->add_option("--backend", o.backend, "integration backend");

        CLI::App* reso =
            app.add_subcommand("resonance", "coarse-step ratio scan");
        add_common(reso);
        reso->add_option("--backend", o.backend, "integration backend");
        reso->add_option("--bench-h", o.bench_h,
                         "benchmark micro step (default 0.01/omega)");
        reso->add_option("--grid-start", o.grid_start, "first step");
        reso->add_option("--grid-stop", o.grid_stop, "last step");
        reso->add_option("--grid-step", o.grid_step, "grid increment");

        CLI::App* bench =
            app.add_subcommand("expm-bench", "exponentiation backends");
        add_common(bench);
        bench->add_option("--backends", o.backends,
                          "comma list: symplectic,iterative,diag,expm-taylor");

        CLI::App* verify =
            app.add_subcommand("verify", "structural identity suite");
        verify->add_option("--seed", o.verify_seed, "draw seed");
        verify->add_option("--trials", o.trials, "random draws per check");
        verify->add_option("--out", o.out_path, "output CSV path");

        std::vector<std::string> argv_store{"sympint"};
        argv_store.insert(argv_store.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        argv.reserve(argv_store.size());
        for (const std::string& a : argv_store) argv.push_back(a.c_str());

        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                app.exit(e, out, err);
                return 0;
            }
            err << "error,usage,," << '"' << e.what() << '"' << '\n';
            return 2;
        }

        if (sim->parsed()) return cmd_simulate(o, out, err);
        if (conv->parsed()) return cmd_converge(o, out, err);
        if (reso->parsed()) return cmd_resonance(o, out, err);
        if (bench->parsed()) return cmd_expm_bench(o, out, err);
        if (verify->parsed()) return cmd_verify(o, out, err);
        err << "error,usage,,\"no subcommand\"\n";
        return 2;
    } catch (const CLI::Error& e) {
        err << "error,usage,," << '"' << e.what() << '"' << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error,usage,," << '"' << e.what() << '"' << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error,runtime,," << '"' << e.what() << '"' << '\n';
        return 1;
    }
}

}  // namespace sympint::cli
