// Acceptance suite: one line per criterion, exit status 1 if any criterion fails.
// Usage: broxopt_acceptance [criterion numbers...]

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace broxopt;
using testkit::Vector;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct SuiteRun {
    Problem problem;
    Vector x0;
    double t;
    IterateTrace trace;
};

// 50 random convex PWL-1D and 50 random convex quadratics, BPM with t constant.
std::vector<SuiteRun> convex_suite() {
    std::vector<SuiteRun> out;
    std::mt19937_64 rng(12345);
    for (int i = 0; i < 100; ++i) {
        Problem p = i < 50 ? testkit::random_convex_pwl(rng) : testkit::random_convex_quadratic(rng);
        const Vector x0 = testkit::uniform_vector(rng, p.dimension(), -10.0, 10.0);
        const double t = testkit::uniform(rng, 0.2, 2.0);
        const double d0 = p.metadata().minimizer_set->distance(x0);
        StopRule stop;
        stop.max_iter = static_cast<long>(std::ceil(d0 * d0 / (t * t))) + 50;
        IterateTrace tr = run_bpm(p, exact_oracle(p), x0, RadiusSchedule::constant(t), stop);
        out.push_back({p, x0, t, std::move(tr)});
    }
    return out;
}

Outcome criterion1() {
    const auto t0 = Clock::now();
    const auto suite = convex_suite();
    Outcome o;
    int checked = 0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        for (auto id : {TheoremId::CONV_LIN_I, TheoremId::CONV_LIN_II, TheoremId::CONV_LIN_III, TheoremId::CONV_LIN_IV,
                        TheoremId::CONV_LIN_V}) {
            const auto rep = verify_trace(suite[i].trace, suite[i].problem, id);
            ++checked;
            if (rep.verdict != Verdict::pass) {
                if (o.pass) o.detail = "instance " + std::to_string(i) + " " + to_string(id) + ": " + to_string(rep.verdict) + " " + rep.reason;
                o.pass = false;
            }
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 10.0) {
        o.pass = false;
        o.detail += " runtime " + std::to_string(secs) + " s";
    }
    if (o.pass) o.detail = std::to_string(checked) + " checks passed in " + std::to_string(secs) + " s";
    return o;
}

Outcome criterion2() {
    const auto suite = convex_suite();
    Outcome o;
    long worst_margin = std::numeric_limits<long>::max();
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto& s = suite[i];
        const double d0 = s.problem.metadata().minimizer_set->distance(s.x0);
        const long bound = static_cast<long>(std::ceil(d0 * d0 / (s.t * s.t)));
        const long K = static_cast<long>(s.trace.steps());
        const bool optimal = s.trace.terminated_reason == TerminationReason::optimum_reached;
        worst_margin = std::min(worst_margin, bound - K);
        if (!optimal || K > bound) {
            if (o.pass) {
                o.detail = "instance " + std::to_string(i) + ": K=" + std::to_string(K) + " bound=" + std::to_string(bound) +
                           " reason=" + to_string(s.trace.terminated_reason);
            }
            o.pass = false;
        }
    }
    if (o.pass) o.detail = "100/100 terminated at optimum; min(bound - K) = " + std::to_string(worst_margin);
    return o;
}

Outcome criterion3() {
    const auto suite = convex_suite();
    Outcome o;
    double worst = kInf;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto rep = verify_trace(suite[i].trace, suite[i].problem, TheoremId::COR_LIN_RATE);
        if (rep.verdict == Verdict::skipped) continue;
        worst = std::min(worst, rep.min_slack());
        if (rep.verdict != Verdict::pass || rep.min_slack() < -1e-9) {
            if (o.pass) o.detail = "instance " + std::to_string(i) + ": " + rep.reason;
            o.pass = false;
        }
    }
    if (o.pass) o.detail = "min slack " + format_double(worst);
    return o;
}

Outcome criterion4() {
    Outcome o;
    std::ostringstream msg;
    std::mt19937_64 rng(777);
    // (a) linearized BPM vs closed-form normalized GD.
    double worst_a = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Problem p = testkit::random_convex_quadratic(rng);
        const Vector x0 = testkit::uniform_vector(rng, p.dimension(), -5.0, 5.0);
        StopRule stop;
        stop.max_iter = 50;
        const auto tr = run_normalized_gd(p, x0, RadiusSchedule::constant(testkit::uniform(rng, 0.1, 1.0)), stop);
        worst_a = std::max(worst_a, tr.max_equivalence_residual);
    }
    if (worst_a > 1e-12) o.pass = false;
    msg << "(a) max dev " << format_double(worst_a);
    // (b) brox = prox with gamma = t / |grad f(u)|.
    double worst_b = 0.0;
    int tested_b = 0;
    for (int i = 0; i < 50; ++i) {
        const Problem p = testkit::random_convex_quadratic(rng);
        const Vector x = testkit::uniform_vector(rng, p.dimension(), -10.0, 10.0);
        const auto rep = brox_prox_equivalence_check(p, x, testkit::uniform(rng, 0.1, 2.0));
        if (rep.skipped) continue;
        ++tested_b;
        worst_b = std::max(worst_b, rep.residual);
    }
    if (worst_b > 1e-8 || tested_b == 0) o.pass = false;
    msg << "; (b) " << tested_b << " instances, max residual " << format_double(worst_b);
    // (c) GD on the envelope vs BPM.
    double worst_c = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Problem p = testkit::random_convex_quadratic(rng);
        const Vector x0 = testkit::uniform_vector(rng, p.dimension(), -10.0, 10.0);
        StopRule stop;
        stop.max_iter = 500;
        const auto tr = run_gd_on_envelope(EnvelopeHandle(p, testkit::uniform(rng, 0.2, 2.0)), x0, stop);
        worst_c = std::max(worst_c, *tr.param("bpm_max_deviation"));
        const double extra = *tr.param("bpm_rows") - static_cast<double>(tr.rows.size());
        if (extra != 0.0 && extra != 1.0) o.pass = false;
    }
    if (worst_c > 1e-9) o.pass = false;
    msg << "; (c) max pointwise dev " << format_double(worst_c);
    o.detail = msg.str();
    return o;
}

Outcome criterion5() {
    Outcome o;
    std::ostringstream msg;
    std::mt19937_64 rng(4242);
    double worst = kInf;
    for (int i = 0; i < 20; ++i) {
        const Problem p = testkit::random_convex_quadratic(rng);
        const Vector x0 = testkit::uniform_vector(rng, p.dimension(), -10.0, 10.0);
        StopRule stop;
        stop.max_iter = 100;
        const auto tr = run_abpm(p, x0, stop);
        const auto rep = verify_trace(tr, p, TheoremId::ABPM_RATE);
        if (rep.verdict != Verdict::pass) {
            o.pass = false;
            msg << "abpm instance " << i << ": " << rep.reason << "; ";
        }
        worst = std::min(worst, rep.min_slack());
    }
    msg << "A-BPM min slack " << format_double(worst);
    for (int p : {2, 3}) {
        std::vector<std::pair<Problem, Vector>> cases{{Problem(QuadraticProblem(Matrix::Identity(1, 1), Vector::Zero(1))),
                                                       scalar_vector(4.0)}};
        for (int i = 0; i < 5; ++i) {
            const Problem q = testkit::random_convex_quadratic(rng);
            cases.emplace_back(q, testkit::uniform_vector(rng, q.dimension(), -5.0, 5.0));
        }
        double eq = 0.0;
        for (const auto& [prob, x0] : cases) {
            StopRule stop;
            stop.max_iter = 100;
            const auto tr = run_bpm_pth(prob, x0, 1.0, p, stop);
            eq = std::max(eq, tr.max_equivalence_residual);
            const auto rep = verify_trace(tr, prob, TheoremId::PPMP_RATE);
            if (rep.verdict != Verdict::pass) {
                o.pass = false;
                msg << "; p=" << p << ": " << to_string(rep.verdict) << " " << rep.reason;
            }
        }
        if (eq > 1e-8) o.pass = false;
        msg << "; p=" << p << " equivalence " << format_double(eq);
    }
    o.detail = msg.str();
    return o;
}

Outcome criterion6() {
    Outcome o;
    std::ostringstream msg;
    const Problem valley = testkit::orthogonal_valley();
    StopRule stop;
    stop.max_iter = 200;
    for (double t : {1.0, 10.0}) {
        const auto tr = run_sbpm(valley, make_vector({3.0, 4.0}), t, stop, 7);
        const double dist = tr.final_point().norm();
        const auto rate = verify_trace(tr, valley, TheoremId::SBPM_RATE);
        const auto desc = verify_trace(tr, valley, TheoremId::SBPM_DESCENT);
        if (dist > 1e-6 || rate.verdict != Verdict::pass || desc.verdict != Verdict::pass) o.pass = false;
        msg << "t=" << t << ": dist " << format_double(dist) << ", rate " << to_string(rate.verdict) << ", descent "
            << to_string(desc.verdict) << "; ";
    }
    StopRule adv_stop;
    adv_stop.max_iter = 150;
    const auto adv = run_sbpm(valley, make_vector({3.0, 4.0}), 5.0, adv_stop, 7, Selection::farthest);
    double min_dist = kInf;
    for (const auto& row : adv.rows) min_dist = std::min(min_dist, row.x.norm());
    const bool witness = adv.steps() >= 100 && min_dist >= 1e-3;
    if (!witness) o.pass = false;
    msg << "adversarial: " << adv.steps() << " steps, min dist " << format_double(min_dist);
    o.detail = msg.str();
    return o;
}

Outcome criterion7() {
    Outcome o;
    std::ostringstream msg;
    std::mt19937_64 rng(99);
    double worst_dev = 0.0;
    for (int i = 0; i < 10; ++i) {
        const Problem p = i % 2 ? testkit::random_convex_quadratic(rng) : testkit::random_convex_pwl(rng);
        const Vector x0 = testkit::uniform_vector(rng, p.dimension(), -8.0, 8.0);
        const double t = testkit::uniform(rng, 0.2, 1.5);
        StopRule stop;
        stop.max_iter = 300;
        const auto breg = run_bregbpm(p, BregmanGenerator::euclidean(p.dimension()), x0, t, stop);
        const auto bpm = run_bpm(p, exact_oracle(p), x0, RadiusSchedule::constant(t * std::sqrt(2.0)), stop);
        if (breg.rows.size() != bpm.rows.size()) {
            o.pass = false;
            msg << "instance " << i << ": length " << breg.rows.size() << " vs " << bpm.rows.size() << "; ";
            continue;
        }
        for (std::size_t k = 0; k < bpm.rows.size(); ++k) {
            worst_dev = std::max(worst_dev, (breg.rows[k].x - bpm.rows[k].x).norm());
        }
    }
    if (worst_dev > 1e-9) o.pass = false;
    msg << "euclidean vs BPM(t*sqrt2) max dev " << format_double(worst_dev);
    double worst_slack = kInf;
    for (int i = 0; i < 10; ++i) {
        const Problem p = testkit::random_convex_quadratic(rng, 2);
        const Matrix Q = testkit::with_spectrum(rng, testkit::uniform_vector(rng, 2, 0.5, 4.0));
        const Vector x0 = testkit::uniform_vector(rng, 2, -6.0, 6.0);
        StopRule stop;
        stop.max_iter = 200;
        const auto tr = run_bregbpm(p, BregmanGenerator::quadratic(Q), x0, testkit::uniform(rng, 0.3, 1.5), stop);
        const auto rep = verify_trace(tr, p, TheoremId::BREG_RATE);
        if (rep.verdict != Verdict::pass) {
            o.pass = false;
            msg << "; elliptic instance " << i << ": " << to_string(rep.verdict) << " " << rep.reason;
        }
        worst_slack = std::min(worst_slack, rep.min_slack());
    }
    msg << "; elliptic min slack " << format_double(worst_slack);
    o.detail = msg.str();
    return o;
}

Outcome criterion8() {
    Outcome o;
    std::ostringstream msg;
    const Problem nc = not_connected_example();
    const auto gx = testkit::grid_1d(-5.0, 5.0, 401);
    const auto gy = testkit::grid_1d(-6.0, 6.0, 481);
    const auto rep = check_ball_convexity(nc, 1.0, gx, gy);
    int table_mismatch = 0;
    for (const auto& [x, c] : rep.c_values) {
        if (std::abs(c - testkit::not_conn_c_table(x(0))) > 1e-12) ++table_mismatch;
    }
    if (!rep.pass() || table_mismatch) o.pass = false;
    msg << "not_conn: " << (rep.pass() ? "pass" : "fail") << ", c-table mismatches " << table_mismatch;

    const Problem tw = two_well_problem();
    const double t_star = find_escape_threshold(two_well_pwl(), 5.0, 0.5, 10.0);
    const auto tw_rep = check_ball_convexity(tw, 1.0, testkit::grid_1d(-2.0, 7.0, 361), testkit::grid_1d(-3.0, 8.0, 441));
    if (tw_rep.pass() || 1.0 >= t_star) o.pass = false;
    msg << "; two_well t=1 (threshold " << format_double(t_star) << "): ";
    if (tw_rep.pass()) {
        msg << "unexpected pass";
    } else {
        const auto& w = tw_rep.violations.front();
        msg << "witness x=" << format_double(w.x(0)) << " y=" << format_double(w.y(0)) << " u=" << format_double(w.u(0))
            << " slack " << format_double(w.slack);
    }

    int weak_runs = 0, weak_pass = 0;
    for (double x0 : {-4.5, -3.0, -2.2, 2.7, 3.5, 5.0}) {
        StopRule stop;
        stop.max_iter = 100;
        const auto tr = run_bpm(nc, exact_oracle(nc), scalar_vector(x0), RadiusSchedule::constant(1.0), stop);
        const auto r = verify_trace(tr, nc, TheoremId::WEAK_LIN);
        ++weak_runs;
        if (r.verdict == Verdict::pass) ++weak_pass;
    }
    if (weak_pass != weak_runs) o.pass = false;
    msg << "; weak rate certified on " << weak_pass << "/" << weak_runs << " runs";
    o.detail = msg.str();
    return o;
}

Outcome criterion9() {
    const auto t0 = Clock::now();
    Outcome o;
    std::ostringstream msg;
    const std::vector<double> ts{0.2, 0.5, 1.0, 1.5, 2.0};
    const auto r = experiment_camel(ts, 1000, 0);
    const double secs = seconds_since(t0);
    msg << "successes";
    for (std::size_t i = 0; i < ts.size(); ++i) msg << " t=" << ts[i] << ":" << r.successes[i];
    const double rate2 = static_cast<double>(r.successes.back()) / 1000.0;
    bool values_ok = true;
    for (const auto& run : r.runs) {
        if (run.success && std::abs(run.final_f - kCamelReportedFStar) > kCamelSuccessTol) values_ok = false;
    }
    if (!r.monotone() || rate2 < 0.99 || !values_ok || secs > 300.0) o.pass = false;
    msg << "; monotone " << (r.monotone() ? "yes" : "no") << "; t=2 rate " << rate2 << "; runtime " << secs << " s";
    o.detail = msg.str();
    return o;
}

Outcome criterion10() {
    Outcome o;
    std::ostringstream msg;
    std::mt19937_64 rng(31337);
    double worst_bb = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Problem p = testkit::random_convex_quadratic(rng);
        const auto& q = *p.as_quadratic();
        const BlackBoxSmooth bb([q](const Vector& z) { return q.value(z); },
                                BlackBoxSmooth::GradFn([q](const Vector& z) -> Vector { return q.gradient(z); }),
                                q.dimension());
        const Vector x = testkit::uniform_vector(rng, q.dimension(), -10.0, 10.0);
        const double t = testkit::uniform(rng, 0.1, 3.0);
        OracleBudget budget;
        budget.rng_seed = static_cast<std::uint64_t>(i);
        const auto exact = brox_quadratic(q, x, t);
        const auto approx = brox_blackbox(bb, x, t, budget);
        worst_bb = std::max(worst_bb, (exact.point() - approx.point()).norm());
    }
    if (worst_bb > 1e-5) o.pass = false;
    msg << "blackbox vs exact max dev " << format_double(worst_bb);

    int agree = 0;
    double worst_val = 0.0, worst_pt = 0.0;
    const auto cases = testkit::crafted_indefinite_instances();
    for (const auto& c : cases) {
        const auto ref = testkit::brute_force_trs_2d(c.A, c.b, c.x, c.t);
        const auto got = brox_quadratic(QuadraticProblem(c.A, c.b), c.x, c.t);
        auto f = [&](const Vector& z) { return 0.5 * z.dot(c.A * z) + c.b.dot(z); };
        bool ok = true;
        for (const auto& u : got.points) {
            worst_val = std::max(worst_val, std::abs(f(u) - ref.value));
            ok = ok && (u - c.x).norm() <= c.t + 1e-10 && std::abs(f(u) - ref.value) <= 1e-9 * (1.0 + std::abs(ref.value));
        }
        if (ref.minimizers.size() <= 2) {
            for (const auto& m : ref.minimizers) {
                double best = kInf;
                for (const auto& u : got.points) best = std::min(best, (u - m).norm());
                worst_pt = std::max(worst_pt, best);
                ok = ok && best <= 1e-6;
            }
        }
        if (ok) ++agree;
        else msg << "; mismatch on '" << c.label << "'";
    }
    if (agree != static_cast<int>(cases.size())) o.pass = false;
    msg << "; indefinite suite " << agree << "/" << cases.size() << " (max value gap " << format_double(worst_val)
        << ", max point gap " << format_double(worst_pt) << ")";
    o.detail = msg.str();
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
