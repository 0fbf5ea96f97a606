#pragma once

#include "broxopt/methods.hpp"

#include <array>
#include <numeric>

namespace broxopt {

enum class TheoremId {
    CONV_LIN_I,
    CONV_LIN_II,
    CONV_LIN_III,
    CONV_LIN_IV,
    CONV_LIN_V,
    COR_LIN_RATE,
    SUBLINEAR,
    WEAK_LIN,
    SBPM_RATE,
    SBPM_DESCENT,
    ABPM_RATE,
    PPMP_RATE,
    BREG_RATE,
    NGD_NBHD,
    NGD_ADA,
};

inline constexpr std::array<std::pair<TheoremId, const char*>, 15> kTheoremNames{{
    {TheoremId::CONV_LIN_I, "CONV_LIN_I"},
    {TheoremId::CONV_LIN_II, "CONV_LIN_II"},
    {TheoremId::CONV_LIN_III, "CONV_LIN_III"},
    {TheoremId::CONV_LIN_IV, "CONV_LIN_IV"},
    {TheoremId::CONV_LIN_V, "CONV_LIN_V"},
    {TheoremId::COR_LIN_RATE, "COR_LIN_RATE"},
    {TheoremId::SUBLINEAR, "SUBLINEAR"},
    {TheoremId::WEAK_LIN, "WEAK_LIN"},
    {TheoremId::SBPM_RATE, "SBPM_RATE"},
    {TheoremId::SBPM_DESCENT, "SBPM_DESCENT"},
    {TheoremId::ABPM_RATE, "ABPM_RATE"},
    {TheoremId::PPMP_RATE, "PPMP_RATE"},
    {TheoremId::BREG_RATE, "BREG_RATE"},
    {TheoremId::NGD_NBHD, "NGD_NBHD"},
    {TheoremId::NGD_ADA, "NGD_ADA"},
}};

inline const char* to_string(TheoremId id) {
    for (const auto& [k, name] : kTheoremNames) {
        if (k == id) return name;
    }
    return "UNKNOWN";
}

inline TheoremId theorem_from_string(const std::string& s) {
    for (const auto& [k, name] : kTheoremNames) {
        if (s == name) return k;
    }
    throw Error("unknown theorem id: " + s);
}

enum class Verdict { pass, fail, skipped };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::skipped: return "skipped";
    }
    return "unknown";
}

struct TheoremReport {
    TheoremId theorem_id{};
    std::vector<std::pair<long, double>> per_step_slacks;
    Verdict verdict = Verdict::skipped;
    std::optional<long> first_violation;
    std::string reason;
    double tolerance_used = 0.0;

    double min_slack() const {
        double m = kInf;
        for (const auto& [k, s] : per_step_slacks) m = std::min(m, s);
        return m;
    }
};

namespace detail {

inline TheoremReport skipped(TheoremId id, std::string why, double tol) {
    TheoremReport r;
    r.theorem_id = id;
    r.verdict = Verdict::skipped;
    r.reason = std::move(why);
    r.tolerance_used = tol;
    return r;
}

inline TheoremReport finalize(TheoremReport r) {
    r.verdict = Verdict::pass;
    for (const auto& [k, s] : r.per_step_slacks) {
        if (!(s >= -r.tolerance_used)) {
            r.verdict = Verdict::fail;
            r.first_violation = k;
            r.reason = "slack " + std::to_string(s) + " at k=" + std::to_string(k);
            break;
        }
    }
    if (r.verdict == Verdict::pass && r.per_step_slacks.empty()) r.reason = "no applicable steps";
    return r;
}

/// The constant radius of a trace, or nullopt when radii vary.
inline std::optional<double> constant_radius(const IterateTrace& trace) {
    std::optional<double> t;
    for (const auto& row : trace.rows) {
        if (!row.t) continue;
        if (t && *row.t != *t) return std::nullopt;
        t = row.t;
    }
    if (!t) return trace.param("t");
    return t;
}

inline bool ball_convex_for(const Problem& problem, const IterateTrace& trace) {
    if (problem.convex()) return true;
    const auto& b = problem.metadata().ball_convex_radius;
    const auto t = constant_radius(trace);
    return b && t && std::abs(*b - *t) <= 1e-12 * std::max(1.0, *b);
}

inline bool weak_ball_convex_for(const Problem& problem, const IterateTrace& trace) {
    if (ball_convex_for(problem, trace)) return true;
    const auto& b = problem.metadata().weak_ball_convex_radius;
    const auto t = constant_radius(trace);
    return b && t && std::abs(*b - *t) <= 1e-12 * std::max(1.0, *b);
}

inline bool has_dist(const IterateTrace& trace) {
    for (const auto& row : trace.rows) {
        if (!row.dist_opt) return false;
    }
    return !trace.rows.empty();
}

}  // namespace detail

/// Evaluates the named inequality at every applicable k. Tolerance is
/// 1e-9 + 10 * (largest oracle residual recorded in the trace).
inline TheoremReport verify_trace(const IterateTrace& trace, const Problem& problem, TheoremId id) {
    const double tol = 1e-9 + 10.0 * trace.max_oracle_residual;
    const auto& meta = problem.metadata();
    auto skip = [&](const std::string& why) { return detail::skipped(id, why, tol); };
    if (trace.rows.empty()) return skip("empty trace");
    if (!meta.f_star) return skip("f_star unknown");
    const double fs = *meta.f_star;
    const auto& rows = trace.rows;
    const std::size_t n = rows.size();
    auto h = [&](std::size_t k) { return rows[k].f - fs; };
    auto d = [&](std::size_t k) { return *rows[k].dist_opt; };

    TheoremReport r;
    r.theorem_id = id;
    r.tolerance_used = tol;
    auto add = [&](std::size_t k, double s) { r.per_step_slacks.emplace_back(static_cast<long>(k), s); };

    const bool bpm_like = trace.method == "bpm";
    switch (id) {
        case TheoremId::CONV_LIN_I:
        case TheoremId::CONV_LIN_II:
        case TheoremId::CONV_LIN_III:
        case TheoremId::CONV_LIN_IV:
        case TheoremId::CONV_LIN_V:
        case TheoremId::COR_LIN_RATE:
        case TheoremId::SUBLINEAR: {
            if (!bpm_like) return skip("trace is not a BPM trace");
            if (!detail::ball_convex_for(problem, trace)) return skip("problem not convex or ball-convex for this radius");
            if (!detail::has_dist(trace)) return skip("distance to the minimizer set unavailable");
            const double d0 = d(0);
            const double h0 = h(0);
            if (id == TheoremId::CONV_LIN_I) {
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    if (d(k) <= *rows[k].t) add(k, -h(k + 1));
                }
            } else if (id == TheoremId::CONV_LIN_II) {
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    const double t = *rows[k].t;
                    if (d(k) > t + tol) {
                        const double s1 = -std::abs(*rows[k].step_len - t);
                        const double s2 = d(k) * d(k) - t * t - d(k + 1) * d(k + 1);
                        add(k, std::min(s1, s2));
                    }
                }
            } else if (id == TheoremId::CONV_LIN_III) {
                double sum = 0.0;
                for (std::size_t K = 1; K < n; ++K) {
                    const double t = *rows[K - 1].t;
                    sum += t * t;
                    if (sum >= d0 * d0 * (1.0 - 1e-12)) add(K, -d(K));
                }
                if (r.per_step_slacks.empty() && trace.terminated_reason == TerminationReason::optimum_reached) {
                    add(n - 1, -d(n - 1));
                }
            } else if (id == TheoremId::CONV_LIN_IV) {
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    const double t = *rows[k].t;
                    const double dn = d(k + 1);
                    const double bound = dn > 0.0 ? h(k) / (1.0 + t / dn) : 0.0;
                    add(k, bound - h(k + 1));
                }
            } else if (id == TheoremId::CONV_LIN_V) {
                std::vector<double> g;  // g[k] = norm of a (sub)gradient at x_k
                if (problem.differentiable()) {
                    g.push_back(problem.gradient(rows[0].x).norm());
                    for (std::size_t k = 0; k + 1 < n; ++k) g.push_back(*rows[k].grad_norm_next);
                } else {
                    // subgradient c_k (x_k - x_{k+1}) at x_{k+1}, supplied by the oracle
                    g.push_back(kInf);
                    for (std::size_t k = 0; k + 1 < n; ++k) g.push_back(*rows[k].c * *rows[k].step_len);
                }
                double sum = 0.0;
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    if (std::isfinite(g[k])) add(k, g[k] - g[k + 1]);
                    sum += *rows[k].t * g[k + 1];
                    add(k + 1, h0 - sum);
                }
            } else if (id == TheoremId::COR_LIN_RATE) {
                if (d0 == 0.0) return skip("x0 is optimal");
                double prod = 1.0;
                for (std::size_t K = 1; K < n; ++K) {
                    prod /= 1.0 + *rows[K - 1].t / d0;
                    add(K, prod * h0 - h(K));
                }
            } else {
                const auto t = detail::constant_radius(trace);
                if (!t) return skip("radius is not constant");
                for (std::size_t K = 1; K < n; ++K) {
                    const double bound =
                        (2.0 * d0 / (2.0 * d0 + *t)) * (d0 * d0 / (2.0 * static_cast<double>(K) * *t * *t)) * h0;
                    add(K, bound - h(K));
                }
            }
            return detail::finalize(std::move(r));
        }
        case TheoremId::WEAK_LIN: {
            if (!bpm_like) return skip("trace is not a BPM trace");
            if (!detail::weak_ball_convex_for(problem, trace)) return skip("problem not weakly ball-convex for this radius");
            const auto t = detail::constant_radius(trace);
            if (!t) return skip("radius is not constant");
            Vector xs;
            if (meta.designated_minimizer) xs = *meta.designated_minimizer;
            else if (meta.minimizer_set) xs = meta.minimizer_set->project(rows[0].x);
            else return skip("no minimizer known");
            const double d0 = (rows[0].x - xs).norm();
            if (d0 == 0.0) return skip("x0 is optimal");
            for (std::size_t K = 1; K < n; ++K) {
                const double e = std::ceil((static_cast<double>(K) - 1.0) / 2.0);
                add(K, std::pow(1.0 + *t / d0, -e) * h(0) - h(K));
            }
            return detail::finalize(std::move(r));
        }
        case TheoremId::SBPM_RATE:
        case TheoremId::SBPM_DESCENT: {
            if (trace.method != "sbpm") return skip("trace is not a projected SBPM trace");
            if (trace.param("interpolation").value_or(0.0) != 1.0) return skip("no common minimizer");
            if (!problem.convex()) return skip("clients not convex");
            if (!detail::has_dist(trace)) return skip("distance to the common minimizer unavailable");
            if (id == TheoremId::SBPM_DESCENT) {
                for (std::size_t k = 0; k + 1 < n; ++k) add(k, d(k) - d(k + 1));
                return detail::finalize(std::move(r));
            }
            if (!problem.differentiable()) return skip("clients not smooth");
            const double L = trace.param("L_max").value_or(0.0);
            const double t = trace.param("t").value_or(0.0);
            if (!(L > 0.0) || !(t > 0.0)) return skip("L_max or t missing");
            const double d0 = d(0);
            double sum = 0.0;
            for (std::size_t K = 1; K < n; ++K) {
                sum += h(K - 1);
                const double bound = L * (1.0 + d0 * d0 / (t * t)) * d0 * d0 / (2.0 * static_cast<double>(K));
                add(K, bound - sum / static_cast<double>(K));
            }
            return detail::finalize(std::move(r));
        }
        case TheoremId::ABPM_RATE: {
            if (trace.method != "abpm") return skip("trace is not an A-BPM trace");
            if (!problem.convex()) return skip("problem not convex");
            const auto L = trace.param("L");
            if (!L) return skip("L missing");
            if (!detail::has_dist(trace)) return skip("distance unavailable");
            const double d0 = d(0);
            for (std::size_t K = 1; K < n; ++K) {
                const double Kd = static_cast<double>(K);
                add(K, 2.0 * *L * d0 * d0 / (Kd * (Kd + 1.0)) - h(K));
            }
            return detail::finalize(std::move(r));
        }
        case TheoremId::PPMP_RATE: {
            if (trace.method != "bpm_pth") return skip("trace is not a p-th order BPM trace");
            if (!problem.convex()) return skip("problem not convex");
            const auto p = trace.param("p");
            if (!p) return skip("p missing");
            std::vector<double> lx, ly;
            bool all_small = true;
            for (std::size_t K = 5; K < n && K <= 100; ++K) {
                if (h(K) > 0.0) {
                    lx.push_back(std::log(static_cast<double>(K)));
                    ly.push_back(std::log(h(K)));
                }
                all_small = all_small && h(K) <= tol;
            }
            if (lx.size() < 2) {
                if (n > 5 && all_small) {
                    add(5, 0.0);
                    r.reason = "suboptimality below tolerance on K in [5, 100]";
                    r.verdict = Verdict::pass;
                    return r;
                }
                if (trace.terminated_reason == TerminationReason::optimum_reached) {
                    add(n - 1, -h(n - 1));
                    return detail::finalize(std::move(r));
                }
                return skip("fewer than two positive suboptimality values in K in [5, 100]");
            }
            const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
            const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t i = 0; i < lx.size(); ++i) {
                sxy += (lx[i] - mx) * (ly[i] - my);
                sxx += (lx[i] - mx) * (lx[i] - mx);
            }
            const double slope = sxx > 0.0 ? sxy / sxx : -kInf;
            // Slack in slope units; no residual scaling for a fitted exponent.
            r.tolerance_used = 0.0;
            add(static_cast<long>(std::min<std::size_t>(n - 1, 100)), (-*p + 0.1) - slope);
            r.reason = "fitted slope " + std::to_string(slope);
            auto out = detail::finalize(std::move(r));
            if (out.verdict == Verdict::pass) out.reason = "fitted slope " + std::to_string(slope);
            return out;
        }
        case TheoremId::BREG_RATE: {
            if (trace.method != "bregbpm") return skip("trace is not a Bregman BPM trace");
            if (!problem.convex()) return skip("problem not convex");
            const auto D0 = trace.param("breg_D0");
            const auto t = trace.param("t");
            if (!D0 || !t) return skip("D_h(x*, x0) or t missing");
            for (std::size_t K = 1; K < n; ++K) {
                add(K, h(0) * *D0 / (static_cast<double>(K) * *t * *t) - h(K));
            }
            return detail::finalize(std::move(r));
        }
        case TheoremId::NGD_NBHD: {
            if (trace.method != "ngd") return skip("trace is not a normalized GD trace");
            if (!problem.convex()) return skip("problem not convex");
            const auto t = trace.param("t");
            if (trace.param("schedule_constant").value_or(0.0) != 1.0 || !t) return skip("radius is not constant");
            if (!detail::has_dist(trace)) return skip("distance unavailable");
            const double d0 = d(0);
            double G = 0.0, sum = 0.0;
            for (std::size_t K = 1; K <= n; ++K) {
                G = std::max(G, problem.gradient(rows[K - 1].x).norm());
                sum += h(K - 1);
                const double Kd = static_cast<double>(K);
                add(K, G * d0 * d0 / (2.0 * *t * Kd) + G * *t / 2.0 - sum / Kd);
            }
            return detail::finalize(std::move(r));
        }
        case TheoremId::NGD_ADA: {
            if (trace.method != "ngd") return skip("trace is not a normalized GD trace");
            if (trace.param("schedule_polyak").value_or(0.0) != 1.0) return skip("radii are not Polyak radii");
            if (!problem.convex()) return skip("problem not convex");
            if (!detail::has_dist(trace)) return skip("distance unavailable");
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const double t = *rows[k].t;
                add(k, d(k) * d(k) - t * t - d(k + 1) * d(k + 1));
            }
            return detail::finalize(std::move(r));
        }
    }
    throw Error("verify_trace: unknown theorem id");
}

// ---------------------------------------------------------------------------
// Ball-convexity scans.

struct BallConvexityViolation {
    Vector x;
    Vector y;
    Vector u;
    double slack;
};

struct BallConvexityReport {
    double t = 0.0;
    long tested_pairs = 0;
    std::vector<std::pair<Vector, double>> c_values;
    std::vector<BallConvexityViolation> violations;
    bool pass() const { return violations.empty(); }
};

inline constexpr double kBallConvexitySlackTol = 1e-7;

/// f(y) >= f(u) + c_t(x) <x - u, y - u> for every u in brox_t(x), with c_t(x)
/// taken from the exact oracle.
inline BallConvexityReport check_ball_convexity(const Problem& problem, double t, const std::vector<Vector>& grid_x,
                                                const std::vector<Vector>& grid_y) {
    require_positive_radius(t, "check_ball_convexity");
    if (!has_exact_oracle(problem)) throw PreconditionError("check_ball_convexity: refused for approximate oracles");
    BallConvexityReport rep;
    rep.t = t;
    std::vector<double> fy;
    for (const auto& y : grid_y) fy.push_back(problem.value(y));
    for (const auto& x : grid_x) {
        const BroxResult res = brox(problem, x, t);
        const double c = res.multiplier_c;
        rep.c_values.emplace_back(x, c);
        for (const auto& u : res.points) {
            const double fu = problem.value(u);
            for (std::size_t j = 0; j < grid_y.size(); ++j) {
                ++rep.tested_pairs;
                const double slack = fy[j] - fu - c * (x - u).dot(grid_y[j] - u);
                if (slack < -kBallConvexitySlackTol) rep.violations.push_back({x, grid_y[j], u, slack});
            }
        }
    }
    return rep;
}

/// Two-inequality variant against a designated minimizer x_star:
/// f(u) - f_star <= c <x - u, u - x_star> and f(x) - f(u) >= c ||x - u||^2.
/// The y field of a violation holds x_star.
inline BallConvexityReport check_weak_ball_convexity(const Problem& problem, double t,
                                                     const std::vector<Vector>& grid_x,
                                                     std::optional<Vector> x_star = std::nullopt) {
    require_positive_radius(t, "check_weak_ball_convexity");
    if (!has_exact_oracle(problem)) throw PreconditionError("check_weak_ball_convexity: refused for approximate oracles");
    const auto& meta = problem.metadata();
    if (!x_star) x_star = meta.designated_minimizer;
    if (!x_star && meta.minimizer_set) x_star = meta.minimizer_set->representatives().front();
    if (!x_star) throw PreconditionError("check_weak_ball_convexity: no minimizer known");
    const double fs = problem.value(*x_star);
    BallConvexityReport rep;
    rep.t = t;
    for (const auto& x : grid_x) {
        const BroxResult res = brox(problem, x, t);
        const double c = res.multiplier_c;
        rep.c_values.emplace_back(x, c);
        const double fx = problem.value(x);
        for (const auto& u : res.points) {
            ++rep.tested_pairs;
            const double fu = problem.value(u);
            const double s1 = c * (x - u).dot(u - *x_star) - (fu - fs);
            const double s2 = (fx - fu) - c * (x - u).squaredNorm();
            const double slack = std::min(s1, s2);
            if (slack < -kBallConvexitySlackTol) rep.violations.push_back({x, *x_star, u, slack});
        }
    }
    return rep;
}

struct BroxPropertyReport {
    long points_tested = 0;
    std::vector<std::string> violations;
    bool pass() const { return violations.empty(); }
};

/// Grid checks of the structural consequences of ball-convexity: single
/// value and boundary law off the reachable region, brox of convex
/// combinations of minimizers, strict descent, and the two-sided c bounds.
inline BroxPropertyReport check_brox_properties(const Problem& problem, double t, const std::vector<Vector>& grid_x,
                                                std::uint64_t seed = 0) {
    require_positive_radius(t, "check_brox_properties");
    if (!has_exact_oracle(problem)) throw PreconditionError("check_brox_properties: refused for approximate oracles");
    const auto& meta = problem.metadata();
    if (!meta.minimizer_set || !meta.f_star) throw PreconditionError("check_brox_properties: minimizer set unknown");
    const auto& X = *meta.minimizer_set;
    const double fs = *meta.f_star;
    const double tol = 1e-9;
    BroxPropertyReport rep;
    auto fail = [&](const std::string& what, const Vector& x) {
        std::string s = what + " at x=(";
        for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x(i));
        rep.violations.push_back(s + ")");
    };
    for (const auto& x : grid_x) {
        ++rep.points_tested;
        const BroxResult res = brox(problem, x, t);
        const double dist = X.distance(x);
        const double fx = problem.value(x);
        if (dist > t + tol) {
            if (res.points.size() != 1) fail("brox not single-valued", x);
            if (std::abs((res.point() - x).norm() - t) > 1e-10 * std::max(1.0, t)) fail("boundary law", x);
        }
        const double c = res.multiplier_c;
        for (const auto& u : res.points) {
            const double fu = problem.value(u);
            const double step = (u - x).norm();
            if (dist > tol && !(fu < fx)) fail("no strict descent", x);
            if (c * step * step > fx - fu + tol * (1.0 + std::abs(fx))) fail("c upper bound", x);
            const Vector xs = X.project(u);
            const double du = (u - xs).norm();
            if (dist > tol && du > 0.0 && step > 0.0) {
                const double lower = (fu - fs) / (step * du);
                if (c < lower - tol * (1.0 + lower)) fail("c lower bound", x);
            }
        }
    }
    // Convex combinations of known minimizers map into the minimizer set.
    const auto reps = X.representatives();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, reps.size() - 1);
    const std::array<double, 5> lambdas{0.0, 0.25, 0.5, 0.75, 1.0};
    const std::size_t pairs = std::min<std::size_t>(20, reps.size() * reps.size());
    for (std::size_t i = 0; i < pairs; ++i) {
        const Vector& a = reps[pairs == reps.size() * reps.size() ? i / reps.size() : pick(rng)];
        const Vector& b = reps[pairs == reps.size() * reps.size() ? i % reps.size() : pick(rng)];
        for (double lam : lambdas) {
            const Vector z = lam * a + (1.0 - lam) * b;
            ++rep.points_tested;
            for (const auto& u : brox(problem, z, t).points) {
                if (X.distance(u) > tol) fail("convex combination of minimizers leaves the minimizer set", z);
            }
        }
    }
    return rep;
}

}  // namespace broxopt
