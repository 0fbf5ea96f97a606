#pragma once

#include "broxopt/problems.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cstring>
#include <functional>
#include <random>

namespace broxopt {

/// Minimizer(s) of f over a ball together with an optimality certificate.
struct BroxResult {
    std::vector<Vector> points;
    /// One multiplier per point; multiplier_c mirrors multipliers.front().
    std::vector<double> multipliers;
    double multiplier_c = 0.0;
    double boundary_residual = 0.0;
    double stationarity_residual = 0.0;
    bool exact = true;
    long evaluations_used = 0;
    bool budget_exhausted = false;

    const Vector& point() const { return points.front(); }
};

struct OracleBudget {
    long max_evaluations = 20000;
    int restarts = 16;
    double inner_tolerance = 1e-10;
    std::uint64_t rng_seed = 0;
};

namespace detail {

inline std::pair<double, double> bracket_root(const std::function<double(double)>& f, double lo, double hi,
                                              double flo, double fhi) {
    if (flo == 0.0) return {lo, lo};
    if (fhi == 0.0) return {hi, hi};
    boost::uintmax_t iters = 200;
    return boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52),
                                             iters);
}

/// Root of a monotone scalar function on [lo, hi] with opposite signs at the ends.
inline double solve_monotone(const std::function<double(double)>& f, double lo, double hi) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if ((flo > 0.0) == (fhi > 0.0) && flo != 0.0 && fhi != 0.0) {
        throw ConvergenceError("root bracket does not change sign");
    }
    const auto [a, b] = bracket_root(f, lo, hi, flo, fhi);
    return 0.5 * (a + b);
}

inline double tie_tolerance(double fmin) { return 1e-12 * (1.0 + std::abs(fmin)); }

/// Smallest c >= 0 with c * s in [lo, hi] (s != 0); 0 when no such c exists.
inline double minimal_compatible_multiplier(double s, double lo, double hi) {
    if (lo <= 0.0 && 0.0 <= hi) return 0.0;
    const double a = lo / s;
    const double b = hi / s;
    const double cmin = std::min(a, b);
    const double cmax = std::max(a, b);
    if (cmax < 0.0) return 0.0;
    return std::max(0.0, cmin);
}

/// Finalize residual fields for a point on or inside a Euclidean ball.
inline void fill_ball_certificate(BroxResult& r, const Vector& x, double t, const std::function<Vector(const Vector&)>& grad) {
    const Vector& u = r.point();
    r.multiplier_c = r.multipliers.front();
    r.boundary_residual = std::abs((u - x).norm() - t);
    if (grad) r.stationarity_residual = (grad(u) - r.multiplier_c * (x - u)).norm();
}

}  // namespace detail

/// Exact brox for a 1-D piecewise-linear function by candidate enumeration.
/// Ties within 1e-12 (1 + |f_min|) are all returned, ascending.
inline BroxResult brox_pwl1d(const PiecewiseLinear1D& f, double x, double t) {
    require_positive_radius(t, "brox_pwl1d");
    struct Candidate {
        double z;
        double value;
        bool boundary;
    };
    std::vector<Candidate> cands;
    cands.push_back({x - t, f.value(x - t), true});
    cands.push_back({x + t, f.value(x + t), true});
    cands.push_back({x, f.value(x), false});
    for (double b : f.breakpoints()) {
        if (b > x - t && b < x + t) cands.push_back({b, f.value(b), false});
    }
    double fmin = kInf;
    for (const auto& c : cands) fmin = std::min(fmin, c.value);
    const double tol = detail::tie_tolerance(fmin);
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.z < b.z; });

    BroxResult r;
    r.exact = true;
    r.evaluations_used = static_cast<long>(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        if (c.value > fmin + tol) continue;
        if (!r.points.empty() && r.points.back()(0) == c.z) continue;
        double mult = 0.0;
        if (c.boundary) {
            const double s = x - c.z;
            const double sl = f.slope_left(c.z);
            const double sr = f.slope_right(c.z);
            mult = detail::minimal_compatible_multiplier(s, std::min(sl, sr), std::max(sl, sr));
        }
        r.points.push_back(scalar_vector(c.z));
        r.multipliers.push_back(mult);
    }
    r.multiplier_c = r.multipliers.front();
    r.boundary_residual = std::abs(std::abs(r.point()(0) - x) - t);
    r.stationarity_residual = 0.0;
    return r;
}

/// Exact brox for a quadratic: the trust-region subproblem solved in the
/// eigenbasis of A, including the hard case.
inline BroxResult brox_quadratic(const QuadraticProblem& f, const Vector& x, double t) {
    require_positive_radius(t, "brox_quadratic");
    require_dimension(x, f.dimension(), "brox_quadratic");
    const Vector& lam = f.eigenvalues();
    const Matrix& Q = f.eigenvectors();
    const Eigen::Index d = f.dimension();
    const Vector g = f.gradient(x);
    Vector gh = Q.transpose() * g;
    const double eig_tol = f.eigen_tolerance();
    const double lam1 = lam(0);

    // Leading eigenspace and whether g is (numerically) orthogonal to it.
    // Relative to |g|, floored at the rounding noise of evaluating A x + b.
    const double g_tol = 1e-10 * g.norm() +
                         64.0 * std::numeric_limits<double>::epsilon() * (f.smoothness() * x.norm() + f.linear().norm());
    Eigen::Index lead = 0;
    while (lead < d && lam(lead) <= lam1 + eig_tol) ++lead;
    bool degenerate = true;
    for (Eigen::Index i = 0; i < lead; ++i) degenerate = degenerate && std::abs(gh(i)) <= g_tol;
    if (degenerate) {
        for (Eigen::Index i = 0; i < lead; ++i) gh(i) = 0.0;
    }
    // PSD with zero eigenvalues beyond the leading block are also checked for range membership.
    auto step_at = [&](double mu) {
        Vector s = Vector::Zero(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            if (gh(i) == 0.0) continue;
            const double den = lam(i) + mu;
            s(i) = den > 0.0 ? -gh(i) / den : -std::copysign(kInf, gh(i));
        }
        return s;
    };

    BroxResult r;
    r.exact = true;
    auto finish = [&](std::vector<Vector> hat_steps, double mu) {
        for (auto& sh : hat_steps) r.points.push_back(x + Q * sh);
        sort_lex(r.points);
        r.multipliers.assign(r.points.size(), mu);
        detail::fill_ball_certificate(r, x, t, [&](const Vector& z) { return f.gradient(z); });
        return r;
    };

    const bool psd = lam1 >= -eig_tol;
    if (psd && (lam1 > eig_tol || degenerate)) {
        // Unconstrained minimizer exists; the min-norm step is the projection
        // of x onto the argmin set.
        Vector s0 = Vector::Zero(d);
        bool in_range = true;
        for (Eigen::Index i = 0; i < d; ++i) {
            if (lam(i) > eig_tol) s0(i) = -gh(i) / lam(i);
            else if (std::abs(gh(i)) > g_tol) in_range = false;
        }
        if (in_range && s0.norm() <= t) return finish({s0}, 0.0);
    }

    const double mu_lo = std::max(0.0, -lam1);
    if (degenerate && lam1 < -eig_tol) {
        const Vector s_star = step_at(mu_lo);
        const double ns = s_star.norm();
        if (ns <= t) {
            const double tau = std::sqrt(std::max(0.0, t * t - ns * ns));
            Vector e = Vector::Zero(d);
            e(0) = 1.0;
            if (tau == 0.0) return finish({s_star}, mu_lo);
            return finish({s_star + tau * e, s_star - tau * e}, mu_lo);
        }
    }

    const double gn = gh.norm();
    double mu_hi = std::max(mu_lo, gn / t - lam1);
    auto phi = [&](double mu) {
        const double n = step_at(mu).norm();
        if (!std::isfinite(n)) return -1.0 / t;
        if (n == 0.0) return kInf;
        return 1.0 / n - 1.0 / t;
    };
    double mu;
    const double phi_lo = phi(mu_lo);
    if (phi_lo >= 0.0) {
        mu = mu_lo;
    } else {
        // At gn / t - lam1 the step is no longer than t up to rounding; widen past it.
        for (int i = 0; i < 64 && phi(mu_hi) < 0.0; ++i) mu_hi += std::max(1e-12, 1e-12 * std::abs(mu_hi)) * std::ldexp(1.0, i);
        mu = detail::solve_monotone(phi, mu_lo, mu_hi);
        // eps_tolerance brackets can end exactly on the pole; step off it.
        if (!std::isfinite(step_at(mu).norm())) mu = std::nextafter(mu, kInf);
    }
    Vector s = step_at(mu);
    const double ns = s.norm();
    if (ns > 0.0 && std::abs(ns - t) <= 1e-8 * t) s *= t / ns;
    return finish({s}, mu);
}

namespace detail {

inline Vector project_ball(const Vector& z, const Vector& center, double t) {
    const Vector v = z - center;
    const double n = v.norm();
    if (n <= t) return z;
    return center + v * (t / n);
}

inline std::mt19937_64 oracle_rng(std::uint64_t seed, const Vector& x, double t) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    auto push_double = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        words.push_back(static_cast<std::uint32_t>(bits));
        words.push_back(static_cast<std::uint32_t>(bits >> 32));
    };
    for (Eigen::Index i = 0; i < x.size(); ++i) push_double(x(i));
    push_double(t);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

inline Vector uniform_in_ball(std::mt19937_64& rng, const Vector& center, double t) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector dir(center.size());
    double n = 0.0;
    while (n == 0.0) {
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
        n = dir.norm();
    }
    const double radius = t * std::pow(unif(rng), 1.0 / static_cast<double>(center.size()));
    return center + dir * (radius / n);
}

struct SpgOutcome {
    Vector z;
    double value;
    long evaluations;
};

/// Spectral projected gradient with nonmonotone Armijo backtracking.
template <class Value, class Grad, class Project>
SpgOutcome spg(const Value& value, const Grad& grad, const Project& project, Vector z, long budget,
               double tolerance, double alpha0) {
    constexpr int kMemory = 10;
    constexpr double kArmijo = 1e-4;
    long evals = 0;
    z = project(z);
    double fz = value(z);
    Vector gz = grad(z);
    ++evals;
    std::vector<double> history{fz};
    double alpha = std::clamp(alpha0, 1e-10, 1e10);
    while (evals < budget) {
        const Vector d = project(z - alpha * gz) - z;
        if (d.norm() < tolerance) break;
        const double gd = gz.dot(d);
        if (gd >= 0.0) break;
        const double fref = *std::max_element(history.begin(), history.end());
        double step = 1.0;
        Vector zn;
        double fn;
        bool accepted = false;
        while (evals < budget) {
            zn = z + step * d;
            fn = value(zn);
            ++evals;
            if (fn <= fref + kArmijo * step * gd) {
                accepted = true;
                break;
            }
            step *= 0.5;
            if (step * d.norm() < 1e-3 * tolerance) break;
        }
        if (!accepted) break;
        const Vector gn = grad(zn);
        const Vector sv = zn - z;
        const Vector yv = gn - gz;
        const double sy = sv.dot(yv);
        alpha = sy > 0.0 ? std::clamp(sv.squaredNorm() / sy, 1e-10, 1e10) : 1e10;
        z = zn;
        fz = fn;
        gz = gn;
        history.push_back(fz);
        if (static_cast<int>(history.size()) > kMemory) history.erase(history.begin());
    }
    return {z, fz, evals};
}

}  // namespace detail

/// Approximate brox of a smooth black-box function: multi-start SPG inside the
/// ball from the center, the normalized-gradient boundary point and
/// `restarts` seeded uniform points. Certificates are reported, never assumed.
inline BroxResult brox_blackbox(const BlackBoxSmooth& f, const Vector& x, double t, const OracleBudget& budget) {
    require_positive_radius(t, "brox_blackbox");
    require_dimension(x, f.dimension(), "brox_blackbox");
    if (budget.max_evaluations <= 0 || budget.restarts < 0 || !(budget.inner_tolerance > 0.0)) {
        throw PreconditionError("brox_blackbox: invalid budget");
    }
    auto rng = detail::oracle_rng(budget.rng_seed, x, t);
    const Vector g0 = f.gradient(x);
    std::vector<Vector> starts{x};
    if (g0.norm() > 0.0) starts.push_back(x - t * g0 / g0.norm());
    for (int i = 0; i < budget.restarts; ++i) starts.push_back(detail::uniform_in_ball(rng, x, t));

    const long per_start = std::max<long>(1, budget.max_evaluations / (budget.restarts + 2));
    const double fx = f.value(x);
    auto value = [&](const Vector& z) { return f.value(z); };
    auto gradient = [&](const Vector& z) { return f.gradient(z); };
    auto project = [&](const Vector& z) { return detail::project_ball(z, x, t); };
    const double alpha0 = g0.norm() > 0.0 ? t / g0.norm() : 1.0;

    Vector best = x;
    double best_f = fx;
    long evals = 2;
    for (const auto& s : starts) {
        auto out = detail::spg(value, gradient, project, s, per_start, budget.inner_tolerance, alpha0);
        evals += out.evaluations;
        if (out.value < best_f || (out.value == best_f && lex_less(out.z, best))) {
            best = out.z;
            best_f = out.value;
        }
    }

    BroxResult r;
    r.exact = false;
    r.evaluations_used = evals;
    r.budget_exhausted = best_f >= fx && evals >= budget.max_evaluations;
    r.points = {best};
    const Vector gu = f.gradient(best);
    const Vector v = x - best;
    const double dist = v.norm();
    double c = 0.0;
    if (dist >= t * (1.0 - 1e-6) && dist > 0.0) c = std::max(0.0, gu.dot(v) / (dist * dist));
    r.multipliers = {c};
    r.multiplier_c = c;
    r.boundary_residual = std::abs(dist - t);
    r.stationarity_residual = (gu - c * v).norm();
    return r;
}

/// Dispatch to the exact oracle when the problem class has one, otherwise to
/// the black-box oracle.
inline BroxResult brox(const Problem& problem, const Vector& x, double t, const OracleBudget& budget = {}) {
    require_dimension(x, problem.dimension(), "brox");
    if (const auto* p = problem.as_pwl()) return brox_pwl1d(*p, x(0), t);
    if (const auto* q = problem.as_quadratic()) return brox_quadratic(*q, x, t);
    if (const auto* b = problem.as_blackbox()) return brox_blackbox(*b, x, t, budget);
    if (const auto flat = problem.flattened()) return brox(*flat, x, t, budget);
    BlackBoxSmooth wrapped([problem](const Vector& z) { return problem.value(z); },
                           BlackBoxSmooth::GradFn([problem](const Vector& z) { return problem.gradient(z); }),
                           problem.dimension());
    return brox_blackbox(wrapped, x, t, budget);
}

/// True when `brox` is exact for this problem.
inline bool has_exact_oracle(const Problem& problem) {
    if (problem.as_pwl() || problem.as_quadratic()) return true;
    if (problem.as_finite_sum()) return problem.flattened().has_value();
    return false;
}

using BroxOracle = std::function<BroxResult(const Vector&, double)>;

inline BroxOracle exact_oracle(const Problem& problem) {
    if (!has_exact_oracle(problem)) throw PreconditionError("exact_oracle: no exact brox for this problem class");
    const Problem flat = *problem.flattened();
    return [flat](const Vector& x, double t) { return brox(flat, x, t); };
}

inline BroxOracle blackbox_oracle(const Problem& problem, OracleBudget budget = {}) {
    return [problem, budget](const Vector& x, double t) {
        if (const auto* b = problem.as_blackbox()) return brox_blackbox(*b, x, t, budget);
        BlackBoxSmooth wrapped([problem](const Vector& z) { return problem.value(z); },
                               BlackBoxSmooth::GradFn([problem](const Vector& z) { return problem.gradient(z); }),
                               problem.dimension());
        return brox_blackbox(wrapped, x, t, budget);
    };
}

inline BroxOracle default_oracle(const Problem& problem, OracleBudget budget = {}) {
    if (has_exact_oracle(problem)) return exact_oracle(problem);
    return blackbox_oracle(problem, budget);
}

// ---------------------------------------------------------------------------
// Proximal operators.

namespace detail {

inline double prox_pwl_convex(const PiecewiseLinear1D& f, double x, double gamma) {
    const auto& bp = f.breakpoints();
    const auto& sl = f.slopes();
    // Interior of piece i: z = x - gamma * slope_i.
    for (std::size_t i = 0; i < sl.size(); ++i) {
        const double lo = i == 0 ? -kInf : bp[i - 1];
        const double hi = i == bp.size() ? kInf : bp[i];
        const double z = x - gamma * sl[i];
        if (z > lo && z < hi) return z;
    }
    for (std::size_t j = 0; j < bp.size(); ++j) {
        const double v = (x - bp[j]) / gamma;
        if (v >= sl[j] && v <= sl[j + 1]) return bp[j];
    }
    throw ConvergenceError("prox: no optimality candidate found");
}

}  // namespace detail

/// Prox_{gamma f}(x) for convex f.
inline Vector prox(const Problem& problem, const Vector& x, double gamma) {
    if (!(gamma > 0.0)) throw PreconditionError("prox: gamma must be positive");
    require_dimension(x, problem.dimension(), "prox");
    if (!problem.convex()) throw PreconditionError("prox: refused for nonconvex f");
    if (const auto* q = problem.as_quadratic()) {
        const Vector rhs = q->eigenvectors().transpose() * (x - gamma * q->linear());
        const Vector den = (1.0 + gamma * q->eigenvalues().array()).matrix();
        return q->eigenvectors() * rhs.cwiseQuotient(den);
    }
    if (const auto* p = problem.as_pwl()) return scalar_vector(detail::prox_pwl_convex(*p, x(0), gamma));
    if (problem.as_finite_sum()) {
        if (const auto flat = problem.flattened()) {
            return prox(flat->with_metadata(problem.metadata()), x, gamma);
        }
    }
    if (problem.dimension() != 1 || !problem.differentiable()) {
        throw PreconditionError("prox: only quadratic, convex PWL and 1-D differentiable problems are supported");
    }
    const double x0 = x(0);
    const double g = problem.gradient(x).value();
    if (g == 0.0) return x;
    auto phi = [&](double z) { return z + gamma * problem.gradient(scalar_vector(z))(0) - x0; };
    const double other = x0 - gamma * g;
    return scalar_vector(detail::solve_monotone(phi, std::min(x0, other), std::max(x0, other)));
}

/// p-th order proximal step: argmin_z gamma f(z) + ||z - x||^{p+1} / (p+1).
/// Solved as a 1-D root find on r = ||z - x|| with z = prox_{gamma / r^{p-1}}(x).
inline Vector prox_p(const Problem& problem, const Vector& x, double gamma, int p) {
    if (!(gamma > 0.0)) throw PreconditionError("prox_p: gamma must be positive");
    if (p < 1) throw PreconditionError("prox_p: p must be >= 1");
    if (p == 1) return prox(problem, x, gamma);
    if (!problem.differentiable()) throw PreconditionError("prox_p: f must be differentiable");
    if (problem.gradient(x).norm() == 0.0) return x;
    const double pm1 = static_cast<double>(p - 1);
    auto step_for = [&](double r) { return prox(problem, x, gamma / std::pow(r, pm1)); };
    auto psi = [&](double r) { return (step_for(r) - x).norm() - r; };
    double hi = 1.0;
    while (psi(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e300) throw ConvergenceError("prox_p: could not bracket the radius");
    }
    double lo = hi;
    while (psi(lo) <= 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) return x;
    }
    const double r = detail::solve_monotone(psi, lo, hi);
    return step_for(r);
}

// ---------------------------------------------------------------------------
// Bregman brox: min f(z) s.t. D_h(z, x) <= t^2.

namespace detail {

inline Matrix sym_sqrt(const Matrix& Q, bool inverse) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    Vector ev = es.eigenvalues().cwiseSqrt();
    if (inverse) ev = ev.cwiseInverse();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline void fill_bregman_certificate(BroxResult& r, const Problem& f, const BregmanGenerator& h, const Vector& x,
                                     double t) {
    const Vector& u = r.point();
    r.multiplier_c = r.multipliers.front();
    r.boundary_residual = std::abs(bregman_div(h, u, x) - t * t);
    if (f.differentiable()) {
        r.stationarity_residual = (f.gradient(u) - r.multiplier_c * (h.h_grad(x) - h.h_grad(u))).norm();
    }
}

/// Point on the segment [x, y] where D_h(., x) reaches t^2 (y outside the set).
inline Vector bregman_retract(const BregmanGenerator& h, const Vector& x, const Vector& y, double t) {
    if (bregman_div(h, y, x) <= t * t) return y;
    auto phi = [&](double theta) { return bregman_div(h, x + theta * (y - x), x) - t * t; };
    const double theta = solve_monotone(phi, 0.0, 1.0);
    Vector z = x + theta * (y - x);
    // stay feasible
    if (bregman_div(h, z, x) > t * t) z = x + std::nextafter(theta, 0.0) * (y - x);
    return z;
}

/// Approximate minimizer of f(z) + c D_h(z, x) by gradient descent with
/// Barzilai-Borwein steps and Armijo backtracking. Stops early once the
/// iterate leaves a generous neighbourhood of the ball (c too small).
inline Vector minimize_bregman_penalty(const Problem& f, const BregmanGenerator& h, const Vector& x, double t,
                                       double c, Vector z, long& evals, const OracleBudget& budget) {
    const Vector hx = h.h_grad(x);
    auto phi = [&](const Vector& w) { return f.value(w) + c * bregman_div(h, w, x); };
    auto dphi = [&](const Vector& w) -> Vector { return f.gradient(w) + c * (h.h_grad(w) - hx); };
    double fz = phi(z);
    Vector g = dphi(z);
    double alpha = 1.0 / (1.0 + c * h.lambda_min);
    for (int it = 0; it < 5000 && evals < budget.max_evaluations; ++it) {
        if (g.norm() <= budget.inner_tolerance * (1.0 + std::abs(fz))) break;
        double step = alpha;
        Vector zn;
        double fn = kInf;
        while (evals < budget.max_evaluations) {
            zn = z - step * g;
            fn = phi(zn);
            ++evals;
            if (fn <= fz - 1e-4 * step * g.squaredNorm()) break;
            step *= 0.5;
            if (step < 1e-20) return z;
        }
        const Vector gn = dphi(zn);
        const Vector dz = zn - z, dg = gn - g;
        if (dz.norm() <= 1e-15 * (1.0 + z.norm())) break;
        const double curv = dz.dot(dg);
        alpha = curv > 0.0 ? dz.squaredNorm() / curv : 2.0 * step;
        z = zn;
        fz = fn;
        g = gn;
        if (bregman_div(h, z, x) > 1e6 * t * t) break;
    }
    return z;
}

}  // namespace detail

inline BroxResult breg_brox(const Problem& problem, const BregmanGenerator& h, const Vector& x, double t,
                            const OracleBudget& budget = {}) {
    require_positive_radius(t, "breg_brox");
    require_dimension(x, problem.dimension(), "breg_brox");
    if (!h.certified()) throw PreconditionError("breg_brox: h is not certified strictly convex");
    const Problem f = problem.flattened().value_or(problem);

    if (h.quadratic_form && (f.as_quadratic() || f.as_blackbox())) {
        const Matrix& Qh = *h.quadratic_form;
        require_dimension(x, Qh.rows(), "breg_brox");
        const Matrix S = detail::sym_sqrt(Qh, true);  // Q^{-1/2}
        const double radius = t * std::sqrt(2.0);
        BroxResult inner;
        if (const auto* q = f.as_quadratic()) {
            Matrix At = S * q->matrix() * S;
            At = (0.5 * (At + At.transpose())).eval();
            const QuadraticProblem qt(At, S * q->gradient(x), q->value(x));
            inner = brox_quadratic(qt, Vector::Zero(x.size()), radius);
        } else {
            const auto* b = f.as_blackbox();
            BlackBoxSmooth wt([b, S, x](const Vector& w) { return b->value(x + S * w); },
                              BlackBoxSmooth::GradFn([b, S, x](const Vector& w) -> Vector { return S * b->gradient(x + S * w); }),
                              x.size());
            inner = brox_blackbox(wt, Vector::Zero(x.size()), radius, budget);
        }
        BroxResult r = inner;
        r.points.clear();
        for (const auto& w : inner.points) r.points.push_back(x + S * w);
        sort_lex(r.points);
        detail::fill_bregman_certificate(r, f, h, x, t);
        return r;
    }

    if (const auto* p = f.as_pwl()) {
        auto D = [&](double z) { return bregman_div(h, scalar_vector(z), x) - t * t; };
        auto edge = [&](double dir) {
            double step = t;
            while (D(x(0) + dir * step) < 0.0) {
                step *= 2.0;
                if (step > 1e300) throw ConvergenceError("breg_brox: Bregman ball is unbounded");
            }
            return detail::solve_monotone([&](double s) { return D(x(0) + dir * s); }, 0.0, step);
        };
        const double a = x(0) - edge(-1.0);
        const double b = x(0) + edge(1.0);
        struct Candidate {
            double z;
            double value;
            bool boundary;
        };
        std::vector<Candidate> cands{{a, p->value(a), true}, {b, p->value(b), true}, {x(0), p->value(x(0)), false}};
        for (double bp : p->breakpoints()) {
            if (bp > a && bp < b) cands.push_back({bp, p->value(bp), false});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) { return l.z < r.z; });
        double fmin = kInf;
        for (const auto& c : cands) fmin = std::min(fmin, c.value);
        BroxResult r;
        r.evaluations_used = static_cast<long>(cands.size());
        const double hx = h.h_grad(x)(0);
        for (const auto& c : cands) {
            if (c.value > fmin + detail::tie_tolerance(fmin)) continue;
            if (!r.points.empty() && r.points.back()(0) == c.z) continue;
            double mult = 0.0;
            if (c.boundary) {
                const double s = hx - h.h_grad(scalar_vector(c.z))(0);
                const double sl = p->slope_left(c.z), sr = p->slope_right(c.z);
                mult = detail::minimal_compatible_multiplier(s, std::min(sl, sr), std::max(sl, sr));
            }
            r.points.push_back(scalar_vector(c.z));
            r.multipliers.push_back(mult);
        }
        r.multiplier_c = r.multipliers.front();
        r.boundary_residual = std::abs(bregman_div(h, r.point(), x) - t * t);
        return r;
    }

    if (!f.differentiable()) throw PreconditionError("breg_brox: unsupported problem class");
    // General path: projected gradient with the radial retraction onto the Bregman ball.
    Vector z = x;
    double fz = f.value(z);
    long evals = 1;
    double alpha = 1.0;
    const Vector g0 = f.gradient(x);
    if (g0.norm() > 0.0) alpha = t / g0.norm();
    const long phase1 = std::max(1L, budget.max_evaluations / 4);
    while (evals < phase1) {
        const Vector g = f.gradient(z);
        double step = alpha;
        bool moved = false;
        while (evals < phase1 && step > 1e-16) {
            const Vector zn = detail::bregman_retract(h, x, z - step * g, t);
            const double fn = f.value(zn);
            ++evals;
            if (fn < fz) {
                moved = (zn - z).norm() >= budget.inner_tolerance;
                z = zn;
                fz = fn;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        alpha = step * 2.0;
    }
    const Vector v = h.h_grad(x) - h.h_grad(z);
    const double vn2 = v.squaredNorm();
    const bool on_boundary = bregman_div(h, z, x) >= t * t * (1.0 - 1e-6);
    double c = on_boundary && vn2 > 0.0 ? std::max(0.0, f.gradient(z).dot(v) / vn2) : 0.0;

    // The retraction is not a projection, so the first phase can stall on the
    // boundary. Refine by bisecting the multiplier of the penalized problem.
    if (on_boundary && c > 0.0) {
        Vector warm = z;
        auto excess = [&](double cc) {
            warm = detail::minimize_bregman_penalty(f, h, x, t, cc, warm, evals, budget);
            return bregman_div(h, warm, x) - t * t;
        };
        double lo = c, hi = c;
        while (excess(hi) > 0.0 && hi < 1e12) hi *= 2.0;
        Vector best = warm;
        while (excess(lo) < 0.0 && lo > 1e-12) {
            best = warm;
            lo *= 0.5;
        }
        for (int it = 0; it < 80 && hi - lo > 1e-14 * hi && evals < budget.max_evaluations; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (excess(mid) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
                best = warm;
            }
        }
        best = detail::bregman_retract(h, x, best, t);
        if (bregman_div(h, best, x) <= t * t * (1.0 + 1e-12) && f.value(best) < fz) {
            z = best;
            fz = f.value(z);
            c = hi;
        }
    }

    BroxResult r;
    r.exact = false;
    r.evaluations_used = evals;
    r.points = {z};
    r.multipliers = {c};
    detail::fill_bregman_certificate(r, f, h, x, t);
    return r;
}

}  // namespace broxopt
