#include "broxopt/broxopt.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace broxopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitConfig = 2;

// A problem file, or a run config that carries one under "problem".
Problem load_problem_any(const std::string& path) {
    const auto j = read_json_file(path);
    if (j.contains("type")) return problem_from_json(j, path);
    if (j.contains("problem")) {
        const auto& pj = j["problem"];
        if (pj.is_string()) {
            fs::path p = pj.get<std::string>();
            if (p.is_relative()) p = fs::path(path).parent_path() / p;
            return load_problem(p.string());
        }
        return problem_from_json(pj, path + ".problem");
    }
    throw ConfigError(path + ": neither a problem nor a run config");
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

void print_reports(const std::vector<TheoremReport>& reports) {
    for (const auto& r : reports) {
        std::cerr << to_string(r.theorem_id) << ": " << to_string(r.verdict);
        if (r.first_violation) std::cerr << " (first violation at k=" << *r.first_violation << ")";
        if (!r.reason.empty()) std::cerr << " " << r.reason;
        std::cerr << '\n';
    }
}

struct SolveArgs {
    std::string config;
    std::optional<double> t;
    std::vector<double> x0;
    std::optional<std::uint64_t> seed;
    int replicates = 1;
    std::string out;
};

int cmd_solve(const SolveArgs& a) {
    const auto j = read_json_file(a.config);
    SolveConfig cfg = solve_config_from_json(j, fs::path(a.config).parent_path().string());
    if (a.t) cfg.schedule = RadiusSchedule::constant(*a.t);
    if (!a.x0.empty()) {
        cfg.x0 = make_vector(a.x0);
        if (cfg.x0.size() != cfg.problem.dimension()) throw ConfigError("--x0: dimension does not match the problem");
    }
    if (a.seed) cfg.seed = *a.seed;
    if (a.replicates < 1) throw ConfigError("--replicates must be >= 1");
    if (a.replicates > 1 && a.out.empty()) throw ConfigError("--out DIR is required with --replicates > 1");

    std::vector<SolveResult> results(static_cast<std::size_t>(a.replicates));
    parallel_for(results.size(), worker_count(), [&](std::size_t r) {
        SolveConfig c = cfg;
        c.seed = cfg.seed + r;
        c.budget.rng_seed = c.seed;
        results[r] = solve(c);
    });

    bool failed = false;
    for (std::size_t r = 0; r < results.size(); ++r) {
        const auto& res = results[r];
        std::string path;
        if (a.replicates == 1) {
            path = a.out;
        } else {
            ensure_dir(a.out);
            path = a.out + "/trace_r" + std::to_string(r) + ".csv";
        }
        if (path.empty()) {
            write_trace_csv(std::cout, res.trace);
        } else {
            if (a.replicates == 1) ensure_dir(fs::path(path).parent_path().string());
            save_trace(path, res.trace);
            if (!res.reports.empty()) {
                auto arr = nlohmann::json::array();
                for (const auto& rep : res.reports) arr.push_back(report_json(rep));
                std::ofstream(path + ".reports.json") << arr.dump(2) << '\n';
            }
        }
        std::cerr << res.trace.method << " seed=" << res.trace.seed << " steps=" << res.trace.steps()
                  << " f=" << format_double(res.trace.final_value())
                  << " reason=" << to_string(res.trace.terminated_reason) << '\n';
        print_reports(res.reports);
        failed = failed || res.verification_failed();
    }
    return failed ? kExitVerifyFail : kExitOk;
}

struct EnvelopeArgs {
    std::string config;
    double t = 1.0;
    double lo = -5.0;
    double hi = 5.0;
    int n = 101;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_envelope(const EnvelopeArgs& a) {
    const Problem p = load_problem_any(a.config);
    if (p.dimension() > 2) throw ConfigError("envelope: grid output supports dimension 1 or 2");
    if (a.n < 2 || !(a.hi > a.lo)) throw ConfigError("envelope: need --n >= 2 and --hi > --lo");
    if (!(a.t > 0.0)) throw ConfigError("--t must be positive");
    OracleBudget budget;
    budget.rng_seed = a.seed;
    const EnvelopeHandle env(p, a.t, budget);
    const bool with_grad = p.convex() && p.differentiable();
    const auto d = p.dimension();
    std::vector<Vector> grid;
    auto coord = [&](int i) { return a.lo + (a.hi - a.lo) * i / (a.n - 1); };
    for (int i = 0; i < a.n; ++i) {
        if (d == 1) {
            grid.push_back(scalar_vector(coord(i)));
        } else {
            for (int k = 0; k < a.n; ++k) grid.push_back(make_vector({coord(i), coord(k)}));
        }
    }
    std::vector<std::pair<double, std::optional<double>>> vals(grid.size());
    parallel_for(grid.size(), worker_count(), [&](std::size_t i) {
        vals[i].first = envelope_value(env, grid[i]);
        if (with_grad) vals[i].second = envelope_grad(env, grid[i]).norm();
    });
    std::ofstream file;
    if (!a.out.empty()) {
        ensure_dir(fs::path(a.out).parent_path().string());
        file.open(a.out);
        if (!file) throw ConfigError("cannot open " + a.out);
    }
    std::ostream& os = a.out.empty() ? std::cout : file;
    for (Eigen::Index i = 0; i < d; ++i) os << "x_" << i << ',';
    os << "envelope,grad_norm\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (Eigen::Index c = 0; c < d; ++c) os << format_double(grid[i](c)) << ',';
        os << format_double(vals[i].first) << ',' << (vals[i].second ? format_double(*vals[i].second) : "") << '\n';
    }
    return kExitOk;
}

struct VerifyArgs {
    std::string config;
    std::string trace;
    std::string theorem;
    std::string out;
};

int cmd_verify(const VerifyArgs& a) {
    const Problem p = load_problem_any(a.config);
    TheoremId id;
    try {
        id = theorem_from_string(a.theorem);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("--theorem: ") + e.what());
    }
    IterateTrace trace;
    try {
        trace = load_trace(a.trace);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    const auto rep = verify_trace(trace, p, id);
    const auto j = report_json(rep);
    if (a.out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream(a.out) << j.dump(2) << '\n';
    }
    print_reports({rep});
    return rep.verdict == Verdict::fail ? kExitVerifyFail : kExitOk;
}

struct Fig1Args {
    std::vector<double> t{0.5, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0};
    double x0 = 5.0;
    double x0_not_conn = -4.0;
    std::string out;
};

int cmd_fig1(const Fig1Args& a) {
    for (double t : a.t) {
        if (!(t > 0.0)) throw ConfigError("--t values must be positive");
    }
    ensure_dir(a.out);
    const auto s = experiment_fig1(a.t, a.x0, a.x0_not_conn, a.out);
    std::cout << "family,t,x0,final_x,steps,reached_global\n";
    for (const auto& r : s.rows) {
        std::cout << r.family << ',' << format_double(r.t) << ',' << format_double(r.x0) << ','
                  << format_double(r.final_x) << ',' << r.steps << ',' << (r.reached_global ? 1 : 0) << '\n';
    }
    std::cerr << "two_well monotone in t: " << (s.two_well_monotone ? "yes" : "no") << '\n';
    return s.two_well_monotone ? kExitOk : kExitVerifyFail;
}

struct CamelArgs {
    std::string config;
    std::vector<double> t{0.2, 0.5, 1.0, 1.5, 2.0};
    int replicates = 1000;
    std::uint64_t seed = 0;
    long max_iter = 1000;
    std::string out;
};

int cmd_camel(const CamelArgs& a) {
    OracleBudget budget;
    if (!a.config.empty()) {
        const auto j = read_json_file(a.config);
        if (j.contains("oracle")) {
            const auto& o = j["oracle"];
            budget.max_evaluations = o.value("max_evaluations", budget.max_evaluations);
            budget.restarts = o.value("restarts", budget.restarts);
            budget.inner_tolerance = o.value("inner_tolerance", budget.inner_tolerance);
        }
    }
    if (a.replicates < 1) throw ConfigError("--replicates must be >= 1");
    for (double t : a.t) {
        if (!(t > 0.0)) throw ConfigError("--t values must be positive");
    }
    const auto r = experiment_camel(a.t, a.replicates, a.seed, budget, a.max_iter);
    if (!a.out.empty()) {
        ensure_dir(a.out);
        write_camel_outputs(a.out, r);
    }
    std::cout << "t,successes,n_starts,rate\n";
    for (std::size_t i = 0; i < r.t_values.size(); ++i) {
        std::cout << format_double(r.t_values[i]) << ',' << r.successes[i] << ',' << r.n_starts << ','
                  << format_double(static_cast<double>(r.successes[i]) / static_cast<double>(r.n_starts)) << '\n';
    }
    std::cerr << "success counts nondecreasing in t: " << (r.monotone() ? "yes" : "no") << '\n';
    return r.monotone() ? kExitOk : kExitVerifyFail;
}

struct ThresholdArgs {
    std::string config;
    double x0 = 5.0;
    double t_lo = 0.5;
    double t_hi = 10.0;
};

int cmd_threshold(const ThresholdArgs& a) {
    const Problem p = a.config.empty() ? two_well_problem() : load_problem_any(a.config);
    const auto* pwl = p.as_pwl();
    if (!pwl) throw ConfigError("threshold: problem must be of type pwl1d");
    double t_star = 0.0;
    try {
        t_star = find_escape_threshold(*pwl, a.x0, a.t_lo, a.t_hi);
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    std::cout << format_double(t_star) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ball-proximal point methods: solve, verify, and reproduce experiments"};
    app.require_subcommand(1);

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "Run a method from a JSON run config");
    solve_cmd->add_option("--config", sa.config, "Run config JSON")->required();
    solve_cmd->add_option("--t", sa.t, "Override with a constant radius");
    solve_cmd->add_option("--x0", sa.x0, "Override the start point")->delimiter(',');
    solve_cmd->add_option("--seed", sa.seed, "Base seed; replicate r uses seed + r");
    solve_cmd->add_option("--replicates", sa.replicates, "Number of replicates");
    solve_cmd->add_option("--out", sa.out, "Trace CSV path (a directory with --replicates > 1)");

    EnvelopeArgs ea;
    auto* env_cmd = app.add_subcommand("envelope", "Tabulate the ball envelope on a grid");
    env_cmd->add_option("--config", ea.config, "Problem JSON or run config")->required();
    env_cmd->add_option("--t", ea.t, "Radius");
    env_cmd->add_option("--lo", ea.lo, "Grid lower bound per coordinate");
    env_cmd->add_option("--hi", ea.hi, "Grid upper bound per coordinate");
    env_cmd->add_option("--n", ea.n, "Grid points per coordinate");
    env_cmd->add_option("--seed", ea.seed, "Oracle seed (black-box problems)");
    env_cmd->add_option("--out", ea.out, "Output CSV (stdout when omitted)");

    VerifyArgs va;
    auto* verify_cmd = app.add_subcommand("verify", "Check a saved trace against a theorem");
    verify_cmd->add_option("--config", va.config, "Problem JSON or run config")->required();
    verify_cmd->add_option("--trace", va.trace, "Trace CSV (sidecar .meta.json is read when present)")->required();
    verify_cmd->add_option("--theorem", va.theorem, "Theorem id, e.g. CONV_LIN_I")->required();
    verify_cmd->add_option("--out", va.out, "Report JSON path (stdout when omitted)");

    Fig1Args fa;
    auto* fig1_cmd = app.add_subcommand("fig1", "Escape-local-minima sweep over constant radii");
    fig1_cmd->add_option("--t", fa.t, "Radii")->delimiter(',');
    fig1_cmd->add_option("--x0", fa.x0, "Start on the two-well function");
    fig1_cmd->add_option("--x0-not-conn", fa.x0_not_conn, "Start on the disconnected-minimizer example");
    fig1_cmd->add_option("--out", fa.out, "Output directory");

    CamelArgs ca;
    auto* camel_cmd = app.add_subcommand("camel", "Six-Hump Camel success counts over radii");
    camel_cmd->add_option("--config", ca.config, "Optional JSON with an \"oracle\" budget block");
    camel_cmd->add_option("--t", ca.t, "Radii")->delimiter(',');
    camel_cmd->add_option("--replicates", ca.replicates, "Number of random starts");
    camel_cmd->add_option("--seed", ca.seed, "Base seed; start i uses seed + i");
    camel_cmd->add_option("--max-iter", ca.max_iter, "BPM iteration cap per run");
    camel_cmd->add_option("--out", ca.out, "Output directory");

    ThresholdArgs ta;
    auto* thr_cmd = app.add_subcommand("threshold", "Bisect the escape radius of a 1-D piecewise-linear problem");
    thr_cmd->add_option("--config", ta.config, "pwl1d problem JSON (two-well stand-in when omitted)");
    thr_cmd->add_option("--x0", ta.x0, "Start point");
    thr_cmd->add_option("--t-lo", ta.t_lo, "Lower radius");
    thr_cmd->add_option("--t-hi", ta.t_hi, "Upper radius");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*solve_cmd) return cmd_solve(sa);
        if (*env_cmd) return cmd_envelope(ea);
        if (*verify_cmd) return cmd_verify(va);
        if (*fig1_cmd) return cmd_fig1(fa);
        if (*camel_cmd) return cmd_camel(ca);
        if (*thr_cmd) return cmd_threshold(ta);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const RunError& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitVerifyFail;
    } catch (const Error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
