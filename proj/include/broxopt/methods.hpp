#pragma once

#include "broxopt/oracles.hpp"
#include "broxopt/trace.hpp"

namespace broxopt {

struct RadiusSchedule {
    enum class Kind { constant, explicit_list, polyak, pth_order };

    Kind kind = Kind::constant;
    double t_const = 1.0;
    /// Radii for k = 0, 1, ...; the last entry is reused past the end.
    std::vector<double> t_list;
    int p_order = 1;
    double gamma = 1.0;
    std::optional<double> f_star_hint;

    static RadiusSchedule constant(double t) {
        RadiusSchedule s;
        s.t_const = t;
        s.validate();
        return s;
    }
    static RadiusSchedule list(std::vector<double> ts) {
        RadiusSchedule s;
        s.kind = Kind::explicit_list;
        s.t_list = std::move(ts);
        s.validate();
        return s;
    }
    static RadiusSchedule polyak(std::optional<double> f_star = std::nullopt) {
        RadiusSchedule s;
        s.kind = Kind::polyak;
        s.f_star_hint = f_star;
        return s;
    }
    static RadiusSchedule pth_order(int p, double gamma) {
        RadiusSchedule s;
        s.kind = Kind::pth_order;
        s.p_order = p;
        s.gamma = gamma;
        s.validate();
        return s;
    }

    void validate() const {
        switch (kind) {
            case Kind::constant:
                require_positive_radius(t_const, "RadiusSchedule");
                break;
            case Kind::explicit_list:
                if (t_list.empty()) throw PreconditionError("RadiusSchedule: empty radius list");
                for (double t : t_list) require_positive_radius(t, "RadiusSchedule");
                break;
            case Kind::polyak:
                break;
            case Kind::pth_order:
                if (p_order < 1) throw PreconditionError("RadiusSchedule: p must be >= 1");
                if (!(gamma > 0.0)) throw PreconditionError("RadiusSchedule: gamma must be positive");
                break;
        }
    }

    std::string name() const {
        switch (kind) {
            case Kind::constant: return "constant";
            case Kind::explicit_list: return "explicit_list";
            case Kind::polyak: return "polyak";
            case Kind::pth_order: return "pth_order";
        }
        return "";
    }

    bool is_constant() const { return kind == Kind::constant; }

    /// Radius for step k at x. Polyak radii can be 0 (x optimal or stationary).
    double radius(std::size_t k, const Problem& problem, const Vector& x) const {
        switch (kind) {
            case Kind::constant:
                return t_const;
            case Kind::explicit_list:
                return t_list[std::min(k, t_list.size() - 1)];
            case Kind::polyak: {
                const auto fs = f_star_hint ? f_star_hint : problem.metadata().f_star;
                if (!fs) throw PreconditionError("Polyak radius needs f_star");
                const double gn = problem.gradient(x).norm();
                if (gn == 0.0) return 0.0;
                return std::max(0.0, problem.value(x) - *fs) / gn;
            }
            case Kind::pth_order:
                throw PreconditionError("pth_order radii are produced by run_bpm_pth");
        }
        return 0.0;
    }
};

struct StopRule {
    long max_iter = 1000;
    /// Stop once f - f_star <= f_tol (when f_star is known).
    double f_tol = 0.0;
    double step_tol = 0.0;

    void validate() const {
        if (max_iter < 1) throw PreconditionError("StopRule: max_iter must be >= 1");
        if (f_tol < 0.0 || step_tol < 0.0) throw PreconditionError("StopRule: tolerances must be >= 0");
    }
};

enum class Selection { lexicographic, farthest };

/// Raised when an oracle fails mid-run; carries the rows computed so far.
class RunError : public Error {
public:
    RunError(const std::string& what, IterateTrace partial) : Error(what), partial_(std::move(partial)) {}
    const IterateTrace& partial_trace() const { return partial_; }

private:
    IterateTrace partial_;
};

namespace detail {

inline TraceRow start_row(const Problem& problem, long k, const Vector& x) {
    TraceRow row;
    row.k = k;
    row.x = x;
    row.f = problem.value(x);
    if (problem.metadata().minimizer_set) row.dist_opt = problem.metadata().minimizer_set->distance(x);
    return row;
}

inline bool reached_f_tol(const Problem& problem, double f, const StopRule& stop) {
    const auto& fs = problem.metadata().f_star;
    return fs && f - *fs <= stop.f_tol;
}

inline double fixed_point_tol(const StopRule& stop, const Vector& x) {
    return std::max(stop.step_tol, 1e-12 * (1.0 + x.norm()));
}

/// Index of the selected brox point. A point equal to x is preferred (fixed point).
inline std::size_t select_point(const BroxResult& r, const Vector& x, Selection sel) {
    if (sel == Selection::farthest) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < r.points.size(); ++i) {
            const double d = (r.points[i] - x).norm();
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        if (r.points[i] == x) return i;
    }
    return 0;
}

inline TerminationReason fixed_point_reason(const Problem& problem, double f, bool exact) {
    const auto& fs = problem.metadata().f_star;
    if (fs) return f - *fs <= 1e-9 * (1.0 + std::abs(*fs)) ? TerminationReason::optimum_reached : TerminationReason::stalled;
    return exact ? TerminationReason::optimum_reached : TerminationReason::stalled;
}

}  // namespace detail

inline IterateTrace run_bpm_pth(const Problem& problem, const Vector& x0, double gamma, int p, const StopRule& stop);

/// Ball-proximal point method: x_{k+1} in brox_{t_k}(x_k).
inline IterateTrace run_bpm(const Problem& problem, const BroxOracle& oracle, const Vector& x0,
                            const RadiusSchedule& schedule, const StopRule& stop,
                            Selection selection = Selection::lexicographic) {
    require_dimension(x0, problem.dimension(), "run_bpm");
    schedule.validate();
    stop.validate();
    if (schedule.kind == RadiusSchedule::Kind::pth_order) {
        return run_bpm_pth(problem, x0, schedule.gamma, schedule.p_order, stop);
    }
    IterateTrace trace;
    trace.method = "bpm";
    trace.params["schedule_constant"] = schedule.is_constant() ? 1.0 : 0.0;
    if (schedule.is_constant()) trace.params["t"] = schedule.t_const;
    Vector x = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(problem, k, x);
        if (detail::reached_f_tol(problem, row.f, stop)) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::optimum_reached;
            break;
        }
        if (k >= stop.max_iter) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::max_iter;
            break;
        }
        const double t = schedule.radius(static_cast<std::size_t>(k), problem, x);
        if (!(t > 0.0)) {
            trace.append(std::move(row));
            trace.terminated_reason = detail::fixed_point_reason(problem, row.f, true);
            break;
        }
        BroxResult res;
        try {
            res = oracle(x, t);
        } catch (const std::exception& e) {
            trace.append(std::move(row));
            throw RunError(std::string("run_bpm: oracle failure at k=") + std::to_string(k) + ": " + e.what(),
                           trace);
        }
        trace.exact_oracle = trace.exact_oracle && res.exact;
        const std::size_t idx = detail::select_point(res, x, selection);
        const Vector u = res.points[idx];
        const double c = res.multipliers[idx];
        const double step = (u - x).norm();
        trace.max_oracle_residual = std::max(trace.max_oracle_residual, res.stationarity_residual);
        if (c > 0.0) trace.max_oracle_residual = std::max(trace.max_oracle_residual, res.boundary_residual);
        if (step < detail::fixed_point_tol(stop, x) && c == 0.0) {
            trace.append(std::move(row));
            trace.terminated_reason = detail::fixed_point_reason(problem, problem.value(x), res.exact);
            break;
        }
        const double fu = problem.value(u);
        if (!res.exact && fu >= row.f - 1e-12 * (1.0 + std::abs(row.f))) {
            trace.append(std::move(row));
            trace.terminated_reason = detail::fixed_point_reason(problem, problem.value(x), false);
            break;
        }
        row.t = t;
        row.step_len = step;
        row.c = c;
        if (problem.differentiable()) row.grad_norm_next = problem.gradient(u).norm();
        trace.append(std::move(row));
        x = u;
    }
    return trace;
}

inline IterateTrace run_bpm(const Problem& problem, const Vector& x0, const RadiusSchedule& schedule,
                            const StopRule& stop, const OracleBudget& budget = {}) {
    IterateTrace trace = run_bpm(problem, default_oracle(problem, budget), x0, schedule, stop);
    trace.seed = budget.rng_seed;
    return trace;
}

/// Linearized BPM, i.e. normalized gradient descent.
inline IterateTrace run_normalized_gd(const Problem& problem, const Vector& x0, const RadiusSchedule& schedule,
                                      const StopRule& stop) {
    require_dimension(x0, problem.dimension(), "run_normalized_gd");
    if (!problem.differentiable()) throw PreconditionError("run_normalized_gd: problem must be differentiable");
    schedule.validate();
    stop.validate();
    IterateTrace trace;
    trace.method = "ngd";
    trace.params["schedule_constant"] = schedule.is_constant() ? 1.0 : 0.0;
    trace.params["schedule_polyak"] = schedule.kind == RadiusSchedule::Kind::polyak ? 1.0 : 0.0;
    if (schedule.is_constant()) trace.params["t"] = schedule.t_const;
    Vector x = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(problem, k, x);
        const Vector g = problem.gradient(x);
        const double gn = g.norm();
        TerminationReason reason = TerminationReason::max_iter;
        bool done = false;
        if (detail::reached_f_tol(problem, row.f, stop)) {
            reason = TerminationReason::optimum_reached;
            done = true;
        } else if (gn == 0.0) {
            reason = TerminationReason::stalled;
            done = true;
        } else if (k >= stop.max_iter) {
            done = true;
        }
        double t = 0.0;
        if (!done) {
            t = schedule.radius(static_cast<std::size_t>(k), problem, x);
            if (!(t > 0.0)) {
                reason = detail::fixed_point_reason(problem, row.f, true);
                done = true;
            }
        }
        if (done) {
            trace.append(std::move(row));
            trace.terminated_reason = reason;
            break;
        }
        const Vector u = x - t * g / gn;
        // Independent computation: exact brox of the linearization at x.
        const QuadraticProblem lin(Matrix::Zero(x.size(), x.size()), g, row.f - g.dot(x));
        const BroxResult res = brox_quadratic(lin, x, t);
        const double dev = (res.point() - u).norm() / std::max(1.0, x.norm());
        trace.max_equivalence_residual = std::max(trace.max_equivalence_residual, dev);
        row.t = t;
        row.step_len = (u - x).norm();
        row.c = gn / t;
        row.grad_norm_next = problem.gradient(u).norm();
        trace.append(std::move(row));
        x = u;
    }
    return trace;
}

/// Accelerated BPM, realized through the prox forms of its linear and
/// quadratic models with gamma_k = k / (2L).
inline IterateTrace run_abpm(const Problem& problem, const Vector& x0, const StopRule& stop,
                             std::optional<double> L_override = std::nullopt) {
    require_dimension(x0, problem.dimension(), "run_abpm");
    stop.validate();
    const auto L = L_override ? L_override : problem.metadata().L;
    if (!L || !(*L > 0.0)) throw PreconditionError("run_abpm: smoothness constant L is required");
    if (!problem.convex()) throw PreconditionError("run_abpm: f must be convex");
    if (!problem.differentiable()) throw PreconditionError("run_abpm: f must be differentiable");
    IterateTrace trace;
    trace.method = "abpm";
    trace.params["L"] = *L;
    const Eigen::Index d = x0.size();
    const Matrix I = Matrix::Identity(d, d);
    Vector x = x0;
    Vector y = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(problem, k, x);
        trace.aux_points.push_back(y);
        if (detail::reached_f_tol(problem, row.f, stop) && k > 0) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::optimum_reached;
            break;
        }
        if (k >= stop.max_iter) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::max_iter;
            break;
        }
        const double gamma = static_cast<double>(k + 1) / (2.0 * *L);
        const Vector g = problem.gradient(y);
        const double fy = problem.value(y);
        const Vector x_next = x - gamma * g;
        const Vector y_next = (x_next + gamma * *L * y - gamma * g) / (1.0 + gamma * *L);
        const double tx = (x_next - x).norm();
        const double ty = (y_next - x_next).norm();
        const double scale = std::max(1.0, std::max(x.norm(), y.norm()));
        if (tx > 0.0) {
            const QuadraticProblem lower(Matrix::Zero(d, d), g, fy - g.dot(y));
            const double dev = (brox_quadratic(lower, x, tx).point() - x_next).norm() / scale;
            trace.max_equivalence_residual = std::max(trace.max_equivalence_residual, dev);
        }
        if (ty > 0.0) {
            const QuadraticProblem upper(*L * I, g - *L * y, fy - g.dot(y) + 0.5 * *L * y.squaredNorm());
            const double dev = (brox_quadratic(upper, x_next, ty).point() - y_next).norm() / scale;
            trace.max_equivalence_residual = std::max(trace.max_equivalence_residual, dev);
        }
        if (trace.max_equivalence_residual > 1e-10) {
            trace.append(std::move(row));
            throw RunError("run_abpm: brox-of-model identity violated", trace);
        }
        row.t = tx;
        row.step_len = tx;
        row.c = tx > 0.0 ? 1.0 / gamma : 0.0;
        row.grad_norm_next = problem.gradient(x_next).norm();
        trace.append(std::move(row));
        x = x_next;
        y = y_next;
    }
    return trace;
}

/// p-th order BPM: each step is the PPM^p step, and the radius
/// t_k = ||x_{k+1} - x_k|| is recorded and checked against t_k^p = gamma ||grad f(x_{k+1})||
/// and against the exact brox with that radius.
inline IterateTrace run_bpm_pth(const Problem& problem, const Vector& x0, double gamma, int p, const StopRule& stop) {
    require_dimension(x0, problem.dimension(), "run_bpm_pth");
    stop.validate();
    if (!problem.convex() || !problem.differentiable()) {
        throw PreconditionError("run_bpm_pth: f must be convex and differentiable");
    }
    IterateTrace trace;
    trace.method = "bpm_pth";
    trace.params["gamma"] = gamma;
    trace.params["p"] = p;
    const bool exact = has_exact_oracle(problem);
    Vector x = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(problem, k, x);
        if (detail::reached_f_tol(problem, row.f, stop)) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::optimum_reached;
            break;
        }
        if (k >= stop.max_iter) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::max_iter;
            break;
        }
        Vector z;
        try {
            z = prox_p(problem, x, gamma, p);
        } catch (const std::exception& e) {
            trace.append(std::move(row));
            throw RunError(std::string("run_bpm_pth: ") + e.what(), trace);
        }
        const double t = (z - x).norm();
        if (t < detail::fixed_point_tol(stop, x)) {
            trace.append(std::move(row));
            trace.terminated_reason = detail::fixed_point_reason(problem, row.f, true);
            break;
        }
        const double gz = problem.gradient(z).norm();
        const double scale = std::max(1.0, x.norm());
        // Radius identity in power form; the p-th root amplifies gradient rounding near the optimum.
        double dev = std::abs(std::pow(t, p) - gamma * gz) / std::pow(scale, p);
        if (exact) dev = std::max(dev, (brox(problem, x, t).point() - z).norm() / scale);
        trace.max_equivalence_residual = std::max(trace.max_equivalence_residual, dev);
        row.t = t;
        row.step_len = t;
        row.c = gz / t;
        row.grad_norm_next = gz;
        trace.append(std::move(row));
        x = z;
    }
    return trace;
}

/// Proximal point method baseline; the schedule supplies gamma_k.
inline IterateTrace run_ppm(const Problem& problem, const Vector& x0, const RadiusSchedule& gamma_schedule,
                            const StopRule& stop) {
    require_dimension(x0, problem.dimension(), "run_ppm");
    gamma_schedule.validate();
    stop.validate();
    if (!problem.convex()) throw PreconditionError("run_ppm: f must be convex");
    IterateTrace trace;
    trace.method = "ppm";
    const auto& meta = problem.metadata();
    const bool contraction = meta.mu && *meta.mu > 0.0 && meta.minimizer_set;
    double min_slack = kInf;
    Vector x = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(problem, k, x);
        if (detail::reached_f_tol(problem, row.f, stop)) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::optimum_reached;
            break;
        }
        if (k >= stop.max_iter) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::max_iter;
            break;
        }
        const double gamma = gamma_schedule.radius(static_cast<std::size_t>(k), problem, x);
        const Vector z = prox(problem, x, gamma);
        const double step = (z - x).norm();
        if (step < detail::fixed_point_tol(stop, x)) {
            trace.append(std::move(row));
            trace.terminated_reason = detail::fixed_point_reason(problem, row.f, true);
            break;
        }
        if (contraction) {
            const double d0 = *row.dist_opt;
            const double d1 = meta.minimizer_set->distance(z);
            min_slack = std::min(min_slack, d0 * d0 / (1.0 + gamma * *meta.mu) - d1 * d1);
        }
        row.t = gamma;
        row.step_len = step;
        if (problem.differentiable()) row.grad_norm_next = problem.gradient(z).norm();
        trace.append(std::move(row));
        x = z;
    }
    if (contraction && std::isfinite(min_slack)) trace.params["contraction_min_slack"] = min_slack;
    return trace;
}

struct EquivalenceReport {
    bool skipped = false;
    std::string reason;
    Vector brox_point;
    double gamma = 0.0;
    Vector prox_point;
    double residual = 0.0;
};

/// For convex differentiable f: the brox point u (when not optimal) equals
/// prox_{gamma f}(x) with gamma = t / ||grad f(u)||.
inline EquivalenceReport brox_prox_equivalence_check(const Problem& problem, const Vector& x, double t) {
    if (!problem.convex() || !problem.differentiable()) {
        throw PreconditionError("brox_prox_equivalence_check: f must be convex and differentiable");
    }
    EquivalenceReport rep;
    const BroxResult res = brox(problem, x, t);
    rep.brox_point = res.point();
    const double gn = problem.gradient(rep.brox_point).norm();
    const auto& fs = problem.metadata().f_star;
    if (gn <= 1e-12 * (1.0 + problem.gradient(x).norm()) ||
        (fs && problem.value(rep.brox_point) - *fs <= 1e-14 * (1.0 + std::abs(*fs)))) {
        rep.skipped = true;
        rep.reason = "brox point is optimal";
        return rep;
    }
    rep.gamma = t / gn;
    rep.prox_point = prox(problem, x, rep.gamma);
    rep.residual = (rep.prox_point - rep.brox_point).norm();
    return rep;
}

// ---------------------------------------------------------------------------
// Stochastic BPM.

namespace detail {

struct ClientSet {
    Problem problem;
    MinimizerSet argmin;
    double L = 0.0;
};

/// Point of (argmin ∩ ball) farthest from x; ties go to the lexicographically largest.
inline Vector farthest_in_argmin_ball(const MinimizerSet& m, const Vector& x, double t) {
    const Vector p = m.project(x);
    const double d = (p - x).norm();
    const double r = std::sqrt(std::max(0.0, t * t - d * d));
    std::vector<Vector> cands;
    if (const auto* a = std::get_if<AffineSet>(&m.shape())) {
        if (a->basis.cols() == 0) return p;
        cands = {p + r * a->basis.col(0), p - r * a->basis.col(0)};
    } else if (const auto* iv = std::get_if<IntervalUnion>(&m.shape())) {
        for (const auto& [lo, hi] : iv->intervals) {
            const double a = std::max(lo, x(0) - t);
            const double b = std::min(hi, x(0) + t);
            if (a <= b) {
                cands.push_back(scalar_vector(a));
                cands.push_back(scalar_vector(b));
            }
        }
    } else {
        for (const auto& q : std::get<PointSet>(m.shape()).points) {
            if ((q - x).norm() <= t) cands.push_back(q);
        }
    }
    Vector best = p;
    double best_d = -1.0;
    for (const auto& c : cands) {
        const double dc = (c - x).norm();
        if (dc > best_d + 1e-15 || (std::abs(dc - best_d) <= 1e-15 && lex_less(best, c))) {
            best = c;
            best_d = dc;
        }
    }
    return best;
}

}  // namespace detail

/// Stochastic BPM on a finite sum. With Selection::lexicographic the step is
/// the projection of x_k onto the client's brox set; Selection::farthest is
/// the unprojected update with the adversarial choice of brox point.
inline IterateTrace run_sbpm(const Problem& problem, const Vector& x0, double t, const StopRule& stop,
                             std::uint64_t seed, Selection selection = Selection::lexicographic) {
    require_positive_radius(t, "run_sbpm");
    stop.validate();
    const auto* fs = problem.as_finite_sum();
    if (!fs) throw PreconditionError("run_sbpm: problem must be a finite sum");
    require_dimension(x0, problem.dimension(), "run_sbpm");
    std::vector<detail::ClientSet> clients;
    double L_max = 0.0;
    for (const auto& c : fs->clients) {
        const auto flat = c.flattened();
        if (!flat || !(flat->as_quadratic() || flat->as_pwl())) {
            throw PreconditionError("run_sbpm: clients must be quadratic or 1-D piecewise linear");
        }
        if (!flat->convex()) throw PreconditionError("run_sbpm: clients must be convex");
        const auto& m = flat->metadata().minimizer_set;
        if (!m) throw PreconditionError("run_sbpm: client has no minimizer");
        const double L = flat->metadata().L.value_or(0.0);
        L_max = std::max(L_max, L);
        clients.push_back({*flat, *m, L});
    }
    IterateTrace trace;
    trace.method = selection == Selection::farthest ? "sbpm_adversarial" : "sbpm";
    trace.seed = seed;
    trace.params["t"] = t;
    trace.params["schedule_constant"] = 1.0;
    trace.params["L_max"] = L_max;

    // Common minimizer (interpolation regime): f_star of the sum equals the
    // mean of client minima.
    const auto& meta = problem.metadata();
    if (meta.minimizer_set && meta.f_star) {
        double mean_min = 0.0;
        for (const auto& c : clients) mean_min += *c.problem.metadata().f_star;
        mean_min /= static_cast<double>(clients.size());
        trace.params["interpolation"] = std::abs(mean_min - *meta.f_star) <= 1e-9 * (1.0 + std::abs(*meta.f_star)) ? 1.0 : 0.0;
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(clients.size()) - 1);
    Vector x = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(problem, k, x);
        if (detail::reached_f_tol(problem, row.f, stop)) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::optimum_reached;
            break;
        }
        if (k >= stop.max_iter) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::max_iter;
            break;
        }
        const int i = pick(rng);
        const auto& cl = clients[static_cast<std::size_t>(i)];
        Vector u;
        double c = 0.0;
        if (cl.argmin.distance(x) <= t) {
            u = selection == Selection::farthest ? detail::farthest_in_argmin_ball(cl.argmin, x, t) : cl.argmin.project(x);
        } else {
            const BroxResult res = brox(cl.problem, x, t);
            const std::size_t idx = detail::select_point(res, x, selection);
            u = res.points[idx];
            c = res.multipliers[idx];
            trace.max_oracle_residual = std::max(trace.max_oracle_residual, res.stationarity_residual);
        }
        row.t = t;
        row.step_len = (u - x).norm();
        row.c = c;
        row.client = i;
        if (problem.differentiable()) row.grad_norm_next = problem.gradient(u).norm();
        trace.append(std::move(row));
        x = u;
    }
    return trace;
}

// ---------------------------------------------------------------------------

/// Bregman BPM: x_{k+1} = argmin { f(z) : D_h(z, x_k) <= t^2 }.
inline IterateTrace run_bregbpm(const Problem& problem, const BregmanGenerator& h, const Vector& x0, double t,
                                const StopRule& stop, const OracleBudget& budget = {}) {
    require_positive_radius(t, "run_bregbpm");
    require_dimension(x0, problem.dimension(), "run_bregbpm");
    stop.validate();
    IterateTrace trace;
    trace.method = "bregbpm";
    trace.seed = budget.rng_seed;
    trace.params["t"] = t;
    trace.params["schedule_constant"] = 1.0;
    const auto& meta = problem.metadata();
    if (meta.minimizer_set) trace.params["breg_D0"] = bregman_div(h, meta.minimizer_set->project(x0), x0);
    double max_gap = 0.0;
    Vector x = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(problem, k, x);
        if (detail::reached_f_tol(problem, row.f, stop)) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::optimum_reached;
            break;
        }
        if (k >= stop.max_iter) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::max_iter;
            break;
        }
        BroxResult res;
        try {
            res = breg_brox(problem, h, x, t, budget);
        } catch (const std::exception& e) {
            trace.append(std::move(row));
            throw RunError(std::string("run_bregbpm: ") + e.what(), trace);
        }
        trace.exact_oracle = trace.exact_oracle && res.exact;
        const std::size_t idx = detail::select_point(res, x, Selection::lexicographic);
        const Vector u = res.points[idx];
        const double c = res.multipliers[idx];
        const double step = (u - x).norm();
        trace.max_oracle_residual = std::max(trace.max_oracle_residual, res.stationarity_residual);
        if (step < detail::fixed_point_tol(stop, x) && c == 0.0) {
            trace.append(std::move(row));
            trace.terminated_reason = detail::fixed_point_reason(problem, row.f, res.exact);
            break;
        }
        if (c > 0.0) max_gap = std::max(max_gap, std::abs(bregman_div(h, u, x) - t * t));
        row.t = t;
        row.step_len = step;
        row.c = c;
        if (problem.differentiable()) row.grad_norm_next = problem.gradient(u).norm();
        trace.append(std::move(row));
        x = u;
    }
    trace.params["bregman_boundary_residual"] = max_gap;
    return trace;
}

}  // namespace broxopt
