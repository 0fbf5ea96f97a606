#pragma once

#include "broxopt/envelope.hpp"
#include "broxopt/problem_json.hpp"
#include "broxopt/theory.hpp"
#include "broxopt/trace_io.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

namespace broxopt {

/// Worker count: BROXOPT_THREADS when set (>= 1), else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("BROXOPT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
        throw ConfigError("BROXOPT_THREADS must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots so the output does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t n, unsigned threads, const Job& job) {
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(1, n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Escape threshold and Fig. 1 stand-in.

/// BPM with constant radius and the exact oracle; true when the final iterate
/// is a global minimizer.
inline bool reaches_global(const Problem& problem, double x0, double t, long max_iter = 10000) {
    StopRule stop;
    stop.max_iter = max_iter;
    const auto trace = run_bpm(problem, exact_oracle(problem), scalar_vector(x0), RadiusSchedule::constant(t), stop);
    return trace.rows.back().dist_opt.value_or(kInf) <= 1e-9;
}

/// Smallest constant radius (to 1e-6) for which BPM from x0 reaches the
/// global minimizer. Returns 0 when t_lo already succeeds.
inline double find_escape_threshold(const PiecewiseLinear1D& f, double x0, double t_lo, double t_hi,
                                    double tolerance = 1e-6) {
    require_positive_radius(t_lo, "find_escape_threshold");
    if (!(t_hi > t_lo)) throw PreconditionError("find_escape_threshold: need t_lo < t_hi");
    const Problem p(f);
    if (!p.metadata().minimizer_set) throw PreconditionError("find_escape_threshold: f is unbounded below");
    if (reaches_global(p, x0, t_lo)) return 0.0;
    if (!reaches_global(p, x0, t_hi)) {
        throw PreconditionError("find_escape_threshold: endpoints not monotone (t_hi does not reach the global minimizer)");
    }
    double lo = t_lo, hi = t_hi;
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        (reaches_global(p, x0, mid) ? hi : lo) = mid;
    }
    return hi;
}

struct Fig1Row {
    std::string family;
    double t = 0.0;
    double x0 = 0.0;
    double final_x = 0.0;
    long steps = 0;
    bool reached_global = false;
};

struct Fig1Summary {
    std::vector<Fig1Row> rows;
    /// reached_global is nondecreasing in t on the two-well family.
    bool two_well_monotone = true;
};

/// BPM with the exact PWL oracle for each t on the two-well family (from
/// x0_two_well) and on the nonconvex textbook example (from x0_not_conn).
/// Traces go to out_dir when given.
inline Fig1Summary experiment_fig1(std::vector<double> t_values, double x0_two_well = 5.0, double x0_not_conn = -4.0,
                                   const std::string& out_dir = "") {
    std::sort(t_values.begin(), t_values.end());
    Fig1Summary s;
    const std::vector<std::pair<std::string, std::pair<Problem, double>>> families{
        {"two_well", {two_well_problem(), x0_two_well}}, {"not_conn", {not_connected_example(), x0_not_conn}}};
    for (const auto& [name, pr] : families) {
        const auto& [problem, x0] = pr;
        bool prev = false;
        for (double t : t_values) {
            StopRule stop;
            stop.max_iter = 10000;
            const auto trace =
                run_bpm(problem, exact_oracle(problem), scalar_vector(x0), RadiusSchedule::constant(t), stop);
            Fig1Row row{name, t, x0, trace.final_point()(0), static_cast<long>(trace.steps()),
                        trace.rows.back().dist_opt.value_or(kInf) <= 1e-9};
            if (name == "two_well" && prev && !row.reached_global) s.two_well_monotone = false;
            prev = prev || row.reached_global;
            if (!out_dir.empty()) {
                save_trace(out_dir + "/fig1_" + name + "_t" + format_double(t) + ".csv", trace);
            }
            s.rows.push_back(row);
        }
    }
    if (!out_dir.empty()) {
        std::ofstream os(out_dir + "/fig1_summary.csv");
        os << "family,t,x0,final_x,steps,reached_global\n";
        for (const auto& r : s.rows) {
            os << r.family << ',' << format_double(r.t) << ',' << format_double(r.x0) << ','
               << format_double(r.final_x) << ',' << r.steps << ',' << (r.reached_global ? 1 : 0) << '\n';
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Six-Hump Camel.

inline constexpr double kCamelSuccessTol = 1e-3;
inline constexpr double kCamelReportedFStar = -1.0316;

struct CamelRun {
    double t = 0.0;
    std::size_t start = 0;
    Vector x0;
    Vector final_x;
    double final_f = 0.0;
    long steps = 0;
    bool success = false;
};

struct CamelResult {
    std::vector<double> t_values;
    std::vector<long> successes;
    long n_starts = 0;
    std::vector<CamelRun> runs;
    OracleBudget budget;
    bool monotone() const {
        for (std::size_t i = 1; i < successes.size(); ++i) {
            if (successes[i] < successes[i - 1]) return false;
        }
        return true;
    }
};

/// Uniform starts in the disk of radius 4 (start i seeded with seed + i); BPM
/// with the black-box oracle; success when the final value is within 1e-3 of
/// the reported optimum -1.0316.
inline CamelResult experiment_camel(std::vector<double> t_values, long n_starts, std::uint64_t seed,
                                    OracleBudget budget = {}, long max_iter = 1000, unsigned threads = 0) {
    if (n_starts < 1) throw PreconditionError("experiment_camel: n_starts must be >= 1");
    const Problem camel = six_hump_camel();
    std::vector<Vector> starts;
    for (long i = 0; i < n_starts; ++i) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(i));
        starts.push_back(detail::uniform_in_ball(rng, Vector::Zero(2), 4.0));
    }
    CamelResult res;
    res.t_values = t_values;
    res.n_starts = n_starts;
    res.budget = budget;
    const std::size_t jobs = t_values.size() * static_cast<std::size_t>(n_starts);
    res.runs.resize(jobs);
    parallel_for(jobs, threads == 0 ? worker_count() : threads, [&](std::size_t j) {
        const std::size_t ti = j / static_cast<std::size_t>(n_starts);
        const std::size_t si = j % static_cast<std::size_t>(n_starts);
        OracleBudget b = budget;
        b.rng_seed = seed + si;
        StopRule stop;
        stop.max_iter = max_iter;
        const auto trace = run_bpm(camel, blackbox_oracle(camel, b), starts[si], RadiusSchedule::constant(t_values[ti]), stop);
        CamelRun run{t_values[ti], si, starts[si], trace.final_point(), trace.final_value(),
                     static_cast<long>(trace.steps()), false};
        run.success = run.final_f <= kCamelReportedFStar + kCamelSuccessTol;
        res.runs[j] = run;
    });
    res.successes.assign(t_values.size(), 0);
    for (const auto& r : res.runs) {
        const auto ti = static_cast<std::size_t>(std::find(t_values.begin(), t_values.end(), r.t) - t_values.begin());
        if (r.success) ++res.successes[ti];
    }
    return res;
}

inline void write_camel_outputs(const std::string& out_dir, const CamelResult& r) {
    std::ofstream hist(out_dir + "/camel_histogram.csv");
    hist << "t,successes,n_starts,rate\n";
    for (std::size_t i = 0; i < r.t_values.size(); ++i) {
        hist << format_double(r.t_values[i]) << ',' << r.successes[i] << ',' << r.n_starts << ','
             << format_double(static_cast<double>(r.successes[i]) / static_cast<double>(r.n_starts)) << '\n';
    }
    std::ofstream runs(out_dir + "/camel_runs.csv");
    runs << "t,start,x0_0,x0_1,final_0,final_1,final_f,steps,success\n";
    for (const auto& run : r.runs) {
        runs << format_double(run.t) << ',' << run.start << ',' << format_double(run.x0(0)) << ','
             << format_double(run.x0(1)) << ',' << format_double(run.final_x(0)) << ','
             << format_double(run.final_x(1)) << ',' << format_double(run.final_f) << ',' << run.steps << ','
             << (run.success ? 1 : 0) << '\n';
    }
    nlohmann::json meta;
    meta["oracle_budget"] = {{"max_evaluations", r.budget.max_evaluations},
                             {"restarts", r.budget.restarts},
                             {"inner_tolerance", r.budget.inner_tolerance}};
    meta["success_tolerance"] = kCamelSuccessTol;
    meta["reported_f_star"] = kCamelReportedFStar;
    meta["monotone"] = r.monotone();
    std::ofstream(out_dir + "/camel_meta.json") << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// solve: dispatch a run configuration over the methods module.

struct SolveConfig {
    Problem problem{QuadraticProblem(Matrix::Identity(1, 1), Vector::Zero(1))};
    std::string method = "bpm";
    Vector x0;
    RadiusSchedule schedule;
    StopRule stop;
    std::uint64_t seed = 0;
    OracleBudget budget;
    std::optional<BregmanGenerator> bregman;
    std::vector<TheoremId> verify;
};

struct SolveResult {
    IterateTrace trace;
    std::vector<TheoremReport> reports;
    bool verification_failed() const {
        for (const auto& r : reports) {
            if (r.verdict == Verdict::fail) return true;
        }
        return false;
    }
};

namespace detail {

inline RadiusSchedule schedule_from_json(const nlohmann::json& j, const std::string& where) {
    const auto kind = j.value("kind", std::string("constant"));
    if (kind == "constant") return RadiusSchedule::constant(field_as<double>(j, "t", where));
    if (kind == "explicit_list" || kind == "list") return RadiusSchedule::list(field_as<std::vector<double>>(j, "t", where));
    if (kind == "polyak") {
        return RadiusSchedule::polyak(j.contains("f_star") ? std::optional<double>(field_as<double>(j, "f_star", where))
                                                           : std::nullopt);
    }
    if (kind == "pth_order") return RadiusSchedule::pth_order(field_as<int>(j, "p", where), field_as<double>(j, "gamma", where));
    throw ConfigError(where + ".kind: unknown schedule kind '" + kind + "'");
}

}  // namespace detail

/// Parses a run configuration. Relative problem paths are resolved against base_dir.
inline SolveConfig solve_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".") {
    SolveConfig c;
    const auto& pj = detail::require_field(j, "problem", "config");
    if (pj.is_string()) {
        std::filesystem::path p = pj.get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        c.problem = load_problem(p.string());
    } else {
        c.problem = problem_from_json(pj, "config.problem");
    }
    c.method = j.value("method", std::string("bpm"));
    if (j.contains("x0")) c.x0 = detail::json_vector(j["x0"], "config.x0");
    else throw ConfigError("config: missing field 'x0'");
    if (c.x0.size() != c.problem.dimension()) throw ConfigError("config.x0: dimension does not match the problem");
    try {
        if (j.contains("schedule")) c.schedule = detail::schedule_from_json(j["schedule"], "config.schedule");
        if (j.contains("stop")) {
            const auto& s = j["stop"];
            c.stop.max_iter = s.value("max_iter", c.stop.max_iter);
            c.stop.f_tol = s.value("f_tol", c.stop.f_tol);
            c.stop.step_tol = s.value("step_tol", c.stop.step_tol);
            c.stop.validate();
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("oracle")) {
        const auto& o = j["oracle"];
        c.budget.max_evaluations = o.value("max_evaluations", c.budget.max_evaluations);
        c.budget.restarts = o.value("restarts", c.budget.restarts);
        c.budget.inner_tolerance = o.value("inner_tolerance", c.budget.inner_tolerance);
    }
    c.budget.rng_seed = c.seed;
    if (j.contains("bregman")) {
        const auto& b = j["bregman"];
        c.bregman = BregmanGenerator::quadratic(detail::json_matrix(detail::require_field(b, "Q", "config.bregman"), "config.bregman.Q"));
    }
    if (j.contains("verify")) {
        for (const auto& v : j["verify"]) {
            try {
                c.verify.push_back(theorem_from_string(v.get<std::string>()));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("config.verify: ") + e.what());
            }
        }
    }
    static const std::vector<std::string> methods{"bpm", "ngd", "abpm", "bpm_pth", "sbpm", "sbpm_adversarial", "bregbpm", "ppm", "envelope_gd"};
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) {
        throw ConfigError("config.method: unknown method '" + c.method + "'");
    }
    return c;
}

inline SolveResult solve(const SolveConfig& c) {
    SolveResult r;
    const auto& m = c.method;
    const double t = c.schedule.kind == RadiusSchedule::Kind::constant ? c.schedule.t_const : 1.0;
    if (m == "bpm") {
        r.trace = run_bpm(c.problem, default_oracle(c.problem, c.budget), c.x0, c.schedule, c.stop);
    } else if (m == "ngd") {
        r.trace = run_normalized_gd(c.problem, c.x0, c.schedule, c.stop);
    } else if (m == "abpm") {
        r.trace = run_abpm(c.problem, c.x0, c.stop);
    } else if (m == "bpm_pth") {
        r.trace = run_bpm_pth(c.problem, c.x0, c.schedule.gamma, c.schedule.p_order, c.stop);
    } else if (m == "sbpm" || m == "sbpm_adversarial") {
        r.trace = run_sbpm(c.problem, c.x0, t, c.stop, c.seed, m == "sbpm" ? Selection::lexicographic : Selection::farthest);
    } else if (m == "bregbpm") {
        const BregmanGenerator h = c.bregman ? *c.bregman : BregmanGenerator::euclidean(c.problem.dimension());
        r.trace = run_bregbpm(c.problem, h, c.x0, t, c.stop, c.budget);
    } else if (m == "ppm") {
        r.trace = run_ppm(c.problem, c.x0, c.schedule, c.stop);
    } else if (m == "envelope_gd") {
        r.trace = run_gd_on_envelope(EnvelopeHandle(c.problem, t, c.budget), c.x0, c.stop);
    }
    r.trace.seed = c.seed;
    for (auto id : c.verify) r.reports.push_back(verify_trace(r.trace, c.problem, id));
    return r;
}

inline nlohmann::json report_json(const TheoremReport& r) {
    nlohmann::json j;
    j["theorem_id"] = to_string(r.theorem_id);
    j["verdict"] = to_string(r.verdict);
    j["tolerance_used"] = r.tolerance_used;
    j["reason"] = r.reason;
    if (r.first_violation) j["first_violation"] = *r.first_violation;
    auto slacks = nlohmann::json::array();
    for (const auto& [k, s] : r.per_step_slacks) slacks.push_back({k, s});
    j["per_step_slacks"] = slacks;
    return j;
}

}  // namespace broxopt
