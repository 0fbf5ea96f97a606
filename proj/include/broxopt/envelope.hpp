#pragma once

#include "broxopt/methods.hpp"

namespace broxopt {

/// N(x) = min over B_t(x) of f.
class EnvelopeHandle {
public:
    EnvelopeHandle(Problem base, double t, BroxOracle oracle)
        : base_(std::move(base)), t_(t), oracle_(std::move(oracle)) {
        require_positive_radius(t_, "EnvelopeHandle");
    }
    EnvelopeHandle(Problem base, double t, const OracleBudget& budget = {})
        : EnvelopeHandle(base, t, default_oracle(base, budget)) {}

    const Problem& base() const { return base_; }
    double radius() const { return t_; }
    const BroxOracle& oracle() const { return oracle_; }

private:
    Problem base_;
    double t_;
    BroxOracle oracle_;
};

inline double envelope_value(const EnvelopeHandle& env, const Vector& x) {
    return env.base().value(env.oracle()(x, env.radius()).point());
}

/// grad N(x) = grad f(u) for the unique brox point u; refused when the brox
/// set is not a singleton.
inline Vector envelope_grad(const EnvelopeHandle& env, const Vector& x) {
    const auto& f = env.base();
    if (!f.convex() || !f.differentiable()) {
        throw PreconditionError("envelope_grad: base problem must be convex and differentiable");
    }
    const BroxResult r = env.oracle()(x, env.radius());
    if (r.points.size() != 1) throw PreconditionError("envelope_grad: brox set is not a singleton");
    return f.gradient(r.point());
}

struct EnvelopeViolation {
    Vector x;
    double value;
    double dist;
};

struct EnvelopeMinimizerReport {
    long samples = 0;
    long skipped_near_boundary = 0;
    std::vector<EnvelopeViolation> violations;
    bool pass() const { return violations.empty(); }
};

/// Samples points around the minimizer set and checks
/// N(x) = f_star  <=>  dist(x, argmin f) <= t.
/// Points with |dist - t| inside a band of 1e-3 max(1, t) are not classified.
inline EnvelopeMinimizerReport envelope_minimizer_check(const EnvelopeHandle& env, long samples, std::uint64_t seed) {
    const auto& meta = env.base().metadata();
    if (!meta.minimizer_set || !meta.f_star) throw PreconditionError("envelope_minimizer_check: unknown minimizer set");
    const double t = env.radius();
    const double band = 1e-3 * std::max(1.0, t);
    const auto reps = meta.minimizer_set->representatives();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, reps.size() - 1);
    EnvelopeMinimizerReport rep;
    for (long i = 0; i < samples; ++i) {
        const Vector& center = reps[pick(rng)];
        const Vector x = detail::uniform_in_ball(rng, center, 3.0 * t + 1.0);
        ++rep.samples;
        const double dist = meta.minimizer_set->distance(x);
        if (std::abs(dist - t) <= band) {
            ++rep.skipped_near_boundary;
            continue;
        }
        const double n = envelope_value(env, x);
        const bool at_min = std::abs(n - *meta.f_star) <= 1e-8 * (1.0 + std::abs(*meta.f_star));
        const bool inside = dist <= t + 1e-8;
        if (at_min != inside) rep.violations.push_back({x, n, dist});
    }
    return rep;
}

/// Normalized gradient descent on the envelope with step t. Also runs BPM on
/// the base problem and records the largest pointwise deviation over the
/// common prefix in params["bpm_max_deviation"].
inline IterateTrace run_gd_on_envelope(const EnvelopeHandle& env, const Vector& x0, const StopRule& stop) {
    const auto& f = env.base();
    require_dimension(x0, f.dimension(), "run_gd_on_envelope");
    if (!f.convex() || !f.differentiable()) {
        throw PreconditionError("run_gd_on_envelope: base problem must be convex and differentiable");
    }
    stop.validate();
    const double t = env.radius();
    IterateTrace trace;
    trace.method = "envelope_gd";
    trace.params["t"] = t;
    trace.params["schedule_constant"] = 1.0;
    Vector x = x0;
    for (long k = 0;; ++k) {
        TraceRow row = detail::start_row(f, k, x);
        if (k >= stop.max_iter) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::max_iter;
            break;
        }
        const BroxResult r = env.oracle()(x, t);
        if (r.points.size() != 1) throw PreconditionError("run_gd_on_envelope: brox set is not a singleton");
        const Vector gN = f.gradient(r.point());
        const double gn = gN.norm();
        if (r.multiplier_c == 0.0 || gn <= 1e-14 * (1.0 + f.gradient(x).norm())) {
            trace.append(std::move(row));
            trace.terminated_reason = TerminationReason::optimum_reached;
            break;
        }
        const Vector u = x - t * gN / gn;
        row.t = t;
        row.step_len = (u - x).norm();
        row.c = gn / t;
        row.grad_norm_next = f.gradient(u).norm();
        trace.append(std::move(row));
        x = u;
    }
    const IterateTrace bpm = run_bpm(f, env.oracle(), x0, RadiusSchedule::constant(t), stop);
    const std::size_t n = std::min(bpm.rows.size(), trace.rows.size());
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, (bpm.rows[i].x - trace.rows[i].x).norm());
    trace.params["bpm_max_deviation"] = dev;
    trace.params["bpm_rows"] = static_cast<double>(bpm.rows.size());
    return trace;
}

}  // namespace broxopt
