#pragma once

// Instance generators and independent reference oracles shared by the unit
// tests and the acceptance binary. Nothing here calls the library's solvers.

#include "broxopt/broxopt.hpp"

#include <cmath>
#include <random>

namespace testkit {

using broxopt::Matrix;
using broxopt::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vector uniform_vector(std::mt19937_64& rng, Eigen::Index d, double lo, double hi) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = uniform(rng, lo, hi);
    return v;
}

inline Matrix random_orthogonal(std::mt19937_64& rng, Eigen::Index d) {
    Matrix M(d, d);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) M(i, j) = n(rng);
    Eigen::HouseholderQR<Matrix> qr(M);
    return qr.householderQ() * Matrix::Identity(d, d);
}

/// Q diag(lam) Q^T, symmetrized.
inline Matrix with_spectrum(std::mt19937_64& rng, const Vector& lam) {
    const Matrix Q = random_orthogonal(rng, lam.size());
    Matrix A = Q * lam.asDiagonal() * Q.transpose();
    return 0.5 * (A + A.transpose());
}

/// Convex quadratic with eigenvalues in [0.1, 10] and dimension 1..5.
inline broxopt::Problem random_convex_quadratic(std::mt19937_64& rng, Eigen::Index d = 0) {
    if (d == 0) d = std::uniform_int_distribution<Eigen::Index>(1, 5)(rng);
    const Vector lam = uniform_vector(rng, d, 0.1, 10.0);
    return broxopt::Problem(broxopt::QuadraticProblem(with_spectrum(rng, lam), uniform_vector(rng, d, -5.0, 5.0)));
}

/// Convex, bounded-below PWL with 1..6 breakpoints in [-5, 5]; sometimes with
/// a flat minimizing segment.
inline broxopt::Problem random_convex_pwl(std::mt19937_64& rng) {
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<double> bp;
    while (static_cast<int>(bp.size()) < n) {
        const double b = std::round(uniform(rng, -5.0, 5.0) * 64.0) / 64.0;
        if (std::find(bp.begin(), bp.end(), b) == bp.end()) bp.push_back(b);
    }
    std::sort(bp.begin(), bp.end());
    std::vector<double> sl(static_cast<std::size_t>(n) + 1);
    for (auto& s : sl) s = std::round(uniform(rng, -3.0, 3.0) * 16.0) / 16.0;
    std::sort(sl.begin(), sl.end());
    sl.front() = std::min(sl.front(), -0.25);
    sl.back() = std::max(sl.back(), 0.25);
    if (n >= 2 && uniform(rng, 0.0, 1.0) < 0.3) {
        for (std::size_t j = 1; j + 1 < sl.size(); ++j) {
            if (sl[j - 1] <= 0.0 && sl[j + 1] >= 0.0) {
                sl[j] = 0.0;
                break;
            }
        }
    }
    return broxopt::Problem(broxopt::PiecewiseLinear1D(bp, sl, std::round(uniform(rng, -3.0, 3.0) * 8.0) / 8.0));
}

inline std::vector<Vector> grid_1d(double lo, double hi, int n) {
    std::vector<Vector> g;
    for (int i = 0; i < n; ++i) g.push_back(broxopt::scalar_vector(lo + (hi - lo) * i / (n - 1)));
    return g;
}

// ---------------------------------------------------------------------------
// Reference oracles.

/// Golden-section minimization of a unimodal-near-the-bracket function.
template <class F>
double golden_min(const F& f, double a, double b, int iters = 200) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct BruteResult {
    double value;
    std::vector<Vector> minimizers;  // local refinements whose value ties the best
};

/// Minimizes a 2-D quadratic over the disk |z - x| <= t: a 2001 x 2001 grid
/// over the disk plus a dense boundary sweep, each refined locally.
inline BruteResult brute_force_trs_2d(const Matrix& A, const Vector& b, const Vector& x, double t) {
    auto f = [&](const Vector& z) { return 0.5 * z.dot(A * z) + b.dot(z); };
    auto on_circle = [&](double th) {
        Vector z(2);
        z << x(0) + t * std::cos(th), x(1) + t * std::sin(th);
        return z;
    };
    // Boundary: local minima of theta -> f(on_circle(theta)).
    const int m = 20000;
    std::vector<double> vals(m);
    for (int i = 0; i < m; ++i) vals[i] = f(on_circle(2.0 * M_PI * i / m));
    std::vector<std::pair<double, Vector>> cands;
    for (int i = 0; i < m; ++i) {
        const double prev = vals[(i + m - 1) % m], next = vals[(i + 1) % m];
        if (vals[i] <= prev && vals[i] <= next) {
            const double h = 2.0 * M_PI / m;
            const double th = golden_min([&](double s) { return f(on_circle(s)); }, 2.0 * M_PI * i / m - h,
                                         2.0 * M_PI * i / m + h);
            cands.emplace_back(f(on_circle(th)), on_circle(th));
        }
    }
    // Interior: grid, then the exact stationary point when it is a local min inside.
    const int n = 2001;
    double best_grid = broxopt::kInf;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            Vector z(2);
            z << x(0) - t + 2.0 * t * i / (n - 1), x(1) - t + 2.0 * t * k / (n - 1);
            if ((z - x).norm() <= t) best_grid = std::min(best_grid, f(z));
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    if (es.eigenvalues()(0) > 1e-12) {
        const Vector zs = A.ldlt().solve(-b);
        if ((zs - x).norm() <= t) cands.emplace_back(f(zs), zs);
    }
    double best = best_grid;
    for (const auto& c : cands) best = std::min(best, c.first);
    BruteResult r{best, {}};
    for (const auto& c : cands) {
        if (c.first <= best + 1e-9 * (1.0 + std::abs(best))) r.minimizers.push_back(c.second);
    }
    return r;
}

/// argmin over a fine 1-D grid, refined by golden section: p-th order prox of
/// f = 1/2 z^2, i.e. argmin gamma f(z) + |z - x|^{p+1} / (p+1).
inline double prox_p_reference_half_square(double x, double gamma, int p) {
    auto phi = [&](double z) { return gamma * 0.5 * z * z + std::pow(std::abs(z - x), p + 1) / (p + 1); };
    const double lo = std::min(0.0, x) - 1.0, hi = std::max(0.0, x) + 1.0;
    const int n = 200001;
    double best_z = lo, best = broxopt::kInf;
    for (int i = 0; i < n; ++i) {
        const double z = lo + (hi - lo) * i / (n - 1);
        if (phi(z) < best) {
            best = phi(z);
            best_z = z;
        }
    }
    const double h = (hi - lo) / (n - 1);
    return golden_min(phi, best_z - h, best_z + h);
}

/// min of f(z) = 1/2 |z|^2 over the ellipse boundary 1/2 (z - x)^T Q (z - x) = t^2.
inline Vector ellipse_boundary_reference(const Matrix& Q, const Vector& x, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    const Matrix Qih = es.operatorInverseSqrt();
    auto at = [&](double th) -> Vector {
        Vector w(2);
        w << std::cos(th), std::sin(th);
        return x + std::sqrt(2.0) * t * Qih * w;
    };
    const int m = 200000;
    double best = broxopt::kInf, best_th = 0.0;
    for (int i = 0; i < m; ++i) {
        const double th = 2.0 * M_PI * i / m;
        const double v = 0.5 * at(th).squaredNorm();
        if (v < best) {
            best = v;
            best_th = th;
        }
    }
    const double h = 2.0 * M_PI / m;
    return at(golden_min([&](double th) { return 0.5 * at(th).squaredNorm(); }, best_th - h, best_th + h));
}

// ---------------------------------------------------------------------------
// Crafted indefinite trust-region instances (2-D), including hard cases.

struct TrsInstance {
    Matrix A;
    Vector b;
    Vector x;
    double t;
    std::string label;
};

inline std::vector<TrsInstance> crafted_indefinite_instances() {
    std::vector<TrsInstance> out;
    auto diag = [](double a, double c) {
        Matrix A = Matrix::Zero(2, 2);
        A(0, 0) = a;
        A(1, 1) = c;
        return A;
    };
    auto v = [](double a, double c) { return broxopt::make_vector({a, c}); };
    // Easy and near-hard cases on a diagonal indefinite matrix.
    out.push_back({diag(-1, 1), v(0, 0), v(0, 1), 1.0, "saddle, x on the stable axis"});
    out.push_back({diag(-1, 1), v(0.5, 0), v(0, 0), 1.0, "saddle, gradient along the unstable axis"});
    out.push_back({diag(-2, 3), v(1, -1), v(0.3, 0.2), 0.7, "generic indefinite"});
    out.push_back({diag(-0.5, 0.5), v(1e-3, 0.2), v(0, 0), 2.0, "near hard case"});
    out.push_back({diag(-3, -1), v(0.4, 0.1), v(1, 1), 1.5, "negative definite"});
    out.push_back({diag(-1, -1), v(0, 0), v(0, 0), 1.0, "isotropic concave"});
    // Hard cases: gradient orthogonal to the leading eigenvector with the
    // shifted step strictly inside the ball.
    out.push_back({diag(-1, 2), v(0, 1), v(0, 0), 2.0, "hard case, centered"});
    out.push_back({diag(-1, 2), v(0, -1), v(0, 0.5), 1.5, "hard case, shifted center"});
    out.push_back({diag(-2, 1), v(0, 0.5), v(0, 0), 1.0, "hard case, small radius"});
    out.push_back({diag(-0.25, 4), v(0, 2), v(0, 0), 3.0, "hard case, weak curvature"});
    // Rotated copies.
    std::mt19937_64 rng(2024);
    for (int i = 0; out.size() < 20; ++i) {
        const TrsInstance& base = out[static_cast<std::size_t>(i)];
        const Matrix R = random_orthogonal(rng, 2);
        TrsInstance r{R * base.A * R.transpose(), R * base.b, R * base.x, base.t, base.label + ", rotated"};
        r.A = (0.5 * (r.A + r.A.transpose())).eval();
        out.push_back(r);
    }
    return out;
}

/// Two clients x^2 and y^2 sharing the minimizer (0, 0).
inline broxopt::Problem orthogonal_valley() {
    broxopt::FiniteSumProblem fs;
    Matrix A1 = Matrix::Zero(2, 2), A2 = Matrix::Zero(2, 2);
    A1(0, 0) = 2.0;
    A2(1, 1) = 2.0;
    fs.clients.emplace_back(broxopt::QuadraticProblem(A1, Vector::Zero(2)));
    fs.clients.emplace_back(broxopt::QuadraticProblem(A2, Vector::Zero(2)));
    return broxopt::Problem(std::move(fs));
}

/// The c table of the disconnected-minimizer example at t = 1.
inline double not_conn_c_table(double x) { return std::abs(x) > 2.0 ? 1.0 : 0.0; }

}  // namespace testkit
