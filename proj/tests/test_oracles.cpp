#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace broxopt;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> xs(const BroxResult& r) {
    std::vector<double> out;
    for (const auto& p : r.points) out.push_back(p(0));
    return out;
}

Problem half_square(Eigen::Index d) { return Problem(QuadraticProblem(Matrix::Identity(d, d), Vector::Zero(d))); }

}  // namespace

TEST_CASE("PWL brox on the disconnected example") {
    const Problem p = not_connected_example();
    const auto& f = *p.as_pwl();
    CHECK(xs(brox_pwl1d(f, 3.0, 1.0)) == std::vector<double>{2.0});
    CHECK(xs(brox_pwl1d(f, 0.0, 1.0)) == std::vector<double>{-1.0, 1.0});
    CHECK(xs(brox_pwl1d(f, -1.0, 1.0)) == std::vector<double>{-1.0});
    CHECK(xs(brox_pwl1d(f, -3.5, 1.0)) == std::vector<double>{-2.5});
    CHECK(xs(brox_pwl1d(f, 1.5, 1.0)) == std::vector<double>{1.0});
    // Multipliers follow the table c = 1 for |x| > 2, 0 otherwise.
    for (double x = -5.0; x <= 5.0; x += 0.125) {
        const auto r = brox_pwl1d(f, x, 1.0);
        for (double c : r.multipliers) CHECK(c == testkit::not_conn_c_table(x));
    }
}

TEST_CASE("PWL brox on the two-well function") {
    const auto f = two_well_pwl();
    CHECK(xs(brox_pwl1d(f, 5.0, 0.5)) == std::vector<double>{4.5});
    CHECK(xs(brox_pwl1d(f, 4.5, 0.5)) == std::vector<double>{4.0});
    CHECK(xs(brox_pwl1d(f, 4.0, 0.5)) == std::vector<double>{4.0});
    // At t = 3 the ball around 4 reaches 1 where f = -1 as well: a tie.
    CHECK(xs(brox_pwl1d(f, 4.0, 3.0)) == std::vector<double>{1.0, 4.0});
    CHECK_THROWS_AS(brox_pwl1d(f, 0.0, 0.0), PreconditionError);
}

TEST_CASE("PWL brox matches dense enumeration") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const Problem p = testkit::random_convex_pwl(rng);
        const auto& f = *p.as_pwl();
        const double x = testkit::uniform(rng, -8.0, 8.0);
        const double t = testkit::uniform(rng, 0.1, 3.0);
        const auto r = brox_pwl1d(f, x, t);
        double grid_min = kInf;
        for (int i = 0; i <= 20000; ++i) grid_min = std::min(grid_min, f.value(x - t + 2.0 * t * i / 20000));
        for (const auto& u : r.points) {
            CHECK(std::abs(u(0) - x) <= t + 1e-12);
            CHECK(f.value(u(0)) <= grid_min + 1e-12);
        }
        CHECK(std::is_sorted(r.points.begin(), r.points.end(), lex_less));
    }
}

TEST_CASE("trust-region brox: spherical quadratic") {
    const auto q = *half_square(2).as_quadratic();
    const auto r = brox_quadratic(q, make_vector({3.0, 4.0}), 1.0);
    REQUIRE(r.points.size() == 1);
    CHECK((r.point() - make_vector({2.4, 3.2})).norm() < 1e-14);
    CHECK_THAT(r.multiplier_c, WithinAbs(4.0, 1e-12));
    CHECK(r.boundary_residual < 1e-14);
    CHECK(r.stationarity_residual < 1e-12);

    const auto inside = brox_quadratic(q, make_vector({3.0, 4.0}), 10.0);
    CHECK(inside.point().norm() < 1e-14);
    CHECK(inside.multiplier_c == 0.0);
}

TEST_CASE("trust-region brox: saddle against brute force") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = -1.0;
    A(1, 1) = 1.0;
    const Vector x = make_vector({0.0, 1.0});
    const auto ref = testkit::brute_force_trs_2d(A, Vector::Zero(2), x, 1.0);
    const auto r = brox_quadratic(QuadraticProblem(A, Vector::Zero(2)), x, 1.0);
    for (const auto& u : r.points) {
        CHECK_THAT((u - x).norm(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(0.5 * u.dot(A * u), WithinAbs(ref.value, 1e-9));
    }
    REQUIRE(ref.minimizers.size() == r.points.size());
    for (const auto& m : ref.minimizers) {
        double best = kInf;
        for (const auto& u : r.points) best = std::min(best, (u - m).norm());
        CHECK(best < 1e-6);
    }
}

TEST_CASE("trust-region brox: crafted indefinite and hard cases") {
    for (const auto& c : testkit::crafted_indefinite_instances()) {
        INFO(c.label);
        const auto ref = testkit::brute_force_trs_2d(c.A, c.b, c.x, c.t);
        const auto r = brox_quadratic(QuadraticProblem(c.A, c.b), c.x, c.t);
        auto f = [&](const Vector& z) { return 0.5 * z.dot(c.A * z) + c.b.dot(z); };
        for (const auto& u : r.points) {
            CHECK((u - c.x).norm() <= c.t + 1e-10);
            CHECK_THAT(f(u), WithinAbs(ref.value, 1e-9 * (1 + std::abs(ref.value))));
        }
        // Second-order condition: A + c I is PSD.
        Eigen::SelfAdjointEigenSolver<Matrix> es(c.A + r.multiplier_c * Matrix::Identity(2, 2));
        CHECK(es.eigenvalues()(0) >= -1e-9);
        if (ref.minimizers.size() <= 2) {
            for (const auto& m : ref.minimizers) {
                double best = kInf;
                for (const auto& u : r.points) best = std::min(best, (u - m).norm());
                CHECK(best < 1e-6);
            }
        }
    }
}

TEST_CASE("trust-region brox: random indefinite instances against brute force") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 8; ++trial) {
        const Matrix A = testkit::with_spectrum(rng, make_vector({testkit::uniform(rng, -3, -0.1), testkit::uniform(rng, -1, 3)}));
        const Vector b = testkit::uniform_vector(rng, 2, -2, 2);
        const Vector x = testkit::uniform_vector(rng, 2, -2, 2);
        const double t = testkit::uniform(rng, 0.2, 2.0);
        const auto ref = testkit::brute_force_trs_2d(A, b, x, t);
        const auto r = brox_quadratic(QuadraticProblem(A, b), x, t);
        CHECK_THAT(0.5 * r.point().dot(A * r.point()) + b.dot(r.point()), WithinAbs(ref.value, 1e-9 * (1 + std::abs(ref.value))));
    }
}

TEST_CASE("trust-region brox: linear objective steps against the gradient") {
    const QuadraticProblem lin(Matrix::Zero(3, 3), make_vector({1e-10, -2e-10, 2e-10}));
    const Vector x = make_vector({1.0, 1.0, 1.0});
    const auto r = brox_quadratic(lin, x, 0.3);
    const Vector expect = x - 0.3 * lin.linear().normalized();
    CHECK((r.point() - expect).norm() < 1e-14);
}

TEST_CASE("black-box brox") {
    const Problem camel = six_hump_camel();
    const auto& bb = *camel.as_blackbox();
    OracleBudget budget;

    const auto far = brox_blackbox(bb, make_vector({-1.9, 0.0}), 1.2, budget);
    double grid_best = kInf;
    for (int i = 0; i <= 800; ++i) {
        for (int j = 0; j <= 800; ++j) {
            const Vector z = make_vector({-3.1 + 2.4 * i / 800, -1.2 + 2.4 * j / 800});
            if ((z - make_vector({-1.9, 0.0})).norm() <= 1.2) grid_best = std::min(grid_best, camel.value(z));
        }
    }
    CHECK(camel.value(far.point()) <= grid_best + 1e-9);
    CHECK((far.point() - make_vector({-1.9, 0.0})).norm() <= 1.2 + 1e-12);
    CHECK_FALSE(far.exact);

    const Vector xmin = make_vector({kCamelMinX, kCamelMinY});
    const auto at_min = brox_blackbox(bb, xmin, 0.2, budget);
    CHECK((at_min.point() - xmin).norm() < 1e-6);

    const BlackBoxSmooth sq([](const Vector& z) { return 0.5 * z.squaredNorm(); }, std::nullopt, 2);
    const auto r = brox_blackbox(sq, make_vector({3.0, 4.0}), 1.0, budget);
    CHECK((r.point() - make_vector({2.4, 3.2})).norm() < 1e-6);
    CHECK_THAT(r.multiplier_c, WithinAbs(4.0, 1e-4));

    // Deterministic for a fixed seed.
    const auto again = brox_blackbox(bb, make_vector({-1.9, 0.0}), 1.2, budget);
    CHECK(again.point() == far.point());
    CHECK(again.evaluations_used == far.evaluations_used);

    OracleBudget bad;
    bad.max_evaluations = 0;
    CHECK_THROWS_AS(brox_blackbox(bb, xmin, 0.2, bad), PreconditionError);
}

TEST_CASE("oracle handles dispatch by problem class") {
    CHECK(has_exact_oracle(not_connected_example()));
    CHECK(has_exact_oracle(half_square(3)));
    CHECK_FALSE(has_exact_oracle(six_hump_camel()));
    CHECK_THROWS_AS(exact_oracle(six_hump_camel()), PreconditionError);
    CHECK(default_oracle(half_square(2))(make_vector({3.0, 4.0}), 1.0).exact);
}

TEST_CASE("prox") {
    const Problem h1 = half_square(1);
    CHECK_THAT(prox(h1, scalar_vector(4.0), 1.0)(0), WithinAbs(2.0, 1e-14));
    CHECK(std::abs(prox(h1, scalar_vector(4.0), 1e6)(0)) < 1e-5);
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    A(1, 1) = 2.0;
    const Problem q(QuadraticProblem(A, Vector::Zero(2)));
    CHECK((prox(q, make_vector({2.0, 3.0}), 1.0) - make_vector({1.0, 1.0})).norm() < 1e-14);

    // Convex PWL: prox of |x| is soft thresholding.
    const Problem absx(PiecewiseLinear1D({0.0}, {-1.0, 1.0}, 0.0));
    CHECK_THAT(prox(absx, scalar_vector(3.0), 1.0)(0), WithinAbs(2.0, 1e-14));
    CHECK(prox(absx, scalar_vector(0.5), 1.0)(0) == 0.0);

    CHECK_THROWS_AS(prox(not_connected_example(), scalar_vector(0.0), 1.0), PreconditionError);
    CHECK_THROWS_AS(prox(h1, scalar_vector(0.0), 0.0), PreconditionError);
}

TEST_CASE("p-th order prox") {
    const Problem h1 = half_square(1);
    CHECK_THAT(prox_p(h1, scalar_vector(4.0), 1.0, 1)(0), WithinAbs(2.0, 1e-12));
    const double z2 = prox_p(h1, scalar_vector(4.0), 1.0, 2)(0);
    CHECK_THAT(z2, WithinAbs(testkit::prox_p_reference_half_square(4.0, 1.0, 2), 1e-7));
    CHECK_THAT(z2, WithinAbs(4.0 - (std::sqrt(17.0) - 1.0) / 2.0, 1e-12));
    CHECK_THAT(prox_p(h1, scalar_vector(-3.0), 0.5, 3)(0), WithinAbs(testkit::prox_p_reference_half_square(-3.0, 0.5, 3), 1e-7));
    CHECK(std::abs(prox_p(h1, scalar_vector(4.0), 1e-9, 2)(0) - 4.0) < 1e-3);
    CHECK_THROWS_AS(prox_p(h1, scalar_vector(4.0), 1.0, 0), PreconditionError);
}

TEST_CASE("Bregman brox") {
    const Problem sq = half_square(2);
    const Vector x = make_vector({3.0, 4.0});
    const auto e = BregmanGenerator::euclidean(2);
    const auto r = breg_brox(sq, e, x, 1.0);
    CHECK((r.point() - x * (1.0 - std::sqrt(2.0) / 5.0)).norm() < 1e-12);
    CHECK_THAT(bregman_div(e, r.point(), x), WithinAbs(1.0, 1e-12));

    Matrix Q = Matrix::Zero(2, 2);
    Q(0, 0) = 2.0;
    Q(1, 1) = 1.0;
    const auto h = BregmanGenerator::quadratic(Q);
    const Vector x2 = make_vector({2.0, 2.0});
    const auto r2 = breg_brox(sq, h, x2, 1.0);
    CHECK((r2.point() - testkit::ellipse_boundary_reference(Q, x2, 1.0)).norm() < 1e-6);
    CHECK_THAT(bregman_div(h, r2.point(), x2), WithinAbs(1.0, 1e-10));

    // Minimizer inside the Bregman ball.
    const auto r3 = breg_brox(sq, h, make_vector({0.5, 0.5}), 1.0);
    CHECK(r3.point().norm() < 1e-12);
    CHECK(r3.multiplier_c == 0.0);
}

TEST_CASE("Bregman brox with a non-quadratic generator") {
    // h(x) = sum x_i^2 / 2 + x_i^4 / 12: strictly convex with lambda_min 1.
    BregmanGenerator h;
    h.h_value = [](const Vector& z) { return 0.5 * z.squaredNorm() + z.array().pow(4).sum() / 12.0; };
    h.h_grad = [](const Vector& z) -> Vector { return z + z.array().pow(3).matrix() / 3.0; };
    h.lambda_min = 1.0;
    const Problem sq = half_square(2);
    const Vector x = make_vector({1.5, -1.0});
    const double t = 0.5;
    const auto r = breg_brox(sq, h, x, t);
    CHECK(bregman_div(h, r.point(), x) <= t * t + 1e-8);
    // Reference: dense sweep of the Bregman sphere along rays from x.
    double best = kInf;
    for (int i = 0; i < 20000; ++i) {
        const double th = 2.0 * M_PI * i / 20000;
        const Vector dir = make_vector({std::cos(th), std::sin(th)});
        double lo = 0.0, hi = 10.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (bregman_div(h, x + mid * dir, x) <= t * t ? lo : hi) = mid;
        }
        best = std::min(best, sq.value(x + lo * dir));
    }
    CHECK(sq.value(r.point()) <= best + 1e-7);
}

TEST_CASE("membership of returned points") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const Problem p = testkit::random_convex_quadratic(rng);
        const Vector x = testkit::uniform_vector(rng, p.dimension(), -5, 5);
        const double t = testkit::uniform(rng, 0.05, 4.0);
        for (const auto& u : brox(p, x, t).points) CHECK((u - x).norm() <= t + 1e-10);
    }
}
