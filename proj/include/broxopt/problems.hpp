#pragma once

#include "broxopt/core.hpp"
#include "broxopt/minimizer_set.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <variant>

namespace broxopt {

/// Continuous piecewise-linear function of one variable.
///
/// slopes[0] applies left of breakpoints[0], slopes[i] between
/// breakpoints[i-1] and breakpoints[i], slopes.back() right of the last
/// breakpoint. Values at breakpoints are accumulated once from the anchor so
/// that f(b[i+1]) == f(b[i]) + slopes[i+1] * (b[i+1] - b[i]) holds bit-exactly.
class PiecewiseLinear1D {
public:
    PiecewiseLinear1D(std::vector<double> breakpoints, std::vector<double> slopes, double anchor_value)
        : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)), anchor_(anchor_value) {
        if (breakpoints_.empty()) throw Error("PiecewiseLinear1D: need at least one breakpoint");
        if (slopes_.size() != breakpoints_.size() + 1) {
            throw Error("PiecewiseLinear1D: number of slopes must equal number of breakpoints + 1");
        }
        for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
            if (!(breakpoints_[i] < breakpoints_[i + 1])) {
                throw Error("PiecewiseLinear1D: breakpoints must be strictly increasing");
            }
        }
        values_.resize(breakpoints_.size());
        values_[0] = anchor_;
        for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
            values_[i + 1] = values_[i] + slopes_[i + 1] * (breakpoints_[i + 1] - breakpoints_[i]);
        }
    }

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& slopes() const { return slopes_; }
    const std::vector<double>& breakpoint_values() const { return values_; }
    double anchor_value() const { return anchor_; }

    double value(double x) const {
        const auto idx = count_le(x);
        if (idx == 0) return values_[0] + slopes_[0] * (x - breakpoints_[0]);
        return values_[idx - 1] + slopes_[idx] * (x - breakpoints_[idx - 1]);
    }

    double slope_right(double x) const { return slopes_[count_le(x)]; }

    double slope_left(double x) const {
        const auto idx = static_cast<std::size_t>(
            std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
        return slopes_[idx];
    }

    bool is_breakpoint(double x) const {
        return std::binary_search(breakpoints_.begin(), breakpoints_.end(), x);
    }

    bool bounded_below() const { return slopes_.front() <= 0.0 && slopes_.back() >= 0.0; }

    bool convex() const { return std::is_sorted(slopes_.begin(), slopes_.end()); }

    std::optional<double> min_value() const {
        if (!bounded_below()) return std::nullopt;
        return *std::min_element(values_.begin(), values_.end());
    }

    std::optional<MinimizerSet> minimizer_set() const {
        const auto fmin = min_value();
        if (!fmin) return std::nullopt;
        IntervalUnion u;
        const std::size_t n = breakpoints_.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (values_[i] == *fmin) u.intervals.emplace_back(breakpoints_[i], breakpoints_[i]);
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (slopes_[i + 1] == 0.0 && values_[i] == *fmin) u.intervals.emplace_back(breakpoints_[i], breakpoints_[i + 1]);
        }
        if (slopes_.front() == 0.0 && values_.front() == *fmin) u.intervals.emplace_back(-kInf, breakpoints_.front());
        if (slopes_.back() == 0.0 && values_.back() == *fmin) u.intervals.emplace_back(breakpoints_.back(), kInf);
        return MinimizerSet(std::move(u));
    }

private:
    std::size_t count_le(double x) const {
        return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) -
                                        breakpoints_.begin());
    }

    std::vector<double> breakpoints_;
    std::vector<double> slopes_;
    double anchor_;
    std::vector<double> values_;
};

/// f(x) = 1/2 x^T A x + b^T x + c0 with A symmetric. The spectral
/// decomposition is computed once at construction.
class QuadraticProblem {
public:
    QuadraticProblem(Matrix A, Vector b, double c0 = 0.0) : A_(std::move(A)), b_(std::move(b)), c0_(c0) {
        if (A_.rows() != A_.cols()) throw DimensionError("QuadraticProblem: matrix must be square");
        if (A_.rows() != b_.size()) throw DimensionError("QuadraticProblem: matrix/vector size mismatch");
        if (A_.rows() == 0) throw DimensionError("QuadraticProblem: empty problem");
        if ((A_ - A_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw PreconditionError("QuadraticProblem: matrix is not symmetric to 1e-12");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(A_);
        if (es.info() != Eigen::Success) throw ConvergenceError("QuadraticProblem: eigendecomposition failed");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
    }

    const Matrix& matrix() const { return A_; }
    const Vector& linear() const { return b_; }
    double constant() const { return c0_; }
    Eigen::Index dimension() const { return b_.size(); }

    /// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
    const Vector& eigenvalues() const { return eigenvalues_; }
    const Matrix& eigenvectors() const { return eigenvectors_; }

    double value(const Vector& x) const { return 0.5 * x.dot(A_ * x) + b_.dot(x) + c0_; }
    Vector gradient(const Vector& x) const { return A_ * x + b_; }

    double smoothness() const { return eigenvalues_.cwiseAbs().maxCoeff(); }
    double min_eigenvalue() const { return eigenvalues_(0); }
    double eigen_tolerance() const { return 1e-10 * std::max(1.0, smoothness()); }
    bool convex() const { return eigenvalues_(0) >= -eigen_tolerance(); }

    /// argmin set as an affine set, or nullopt when nonconvex or unbounded below.
    std::optional<MinimizerSet> minimizer_set() const {
        if (!convex()) return std::nullopt;
        const double tol = eigen_tolerance();
        const Vector bh = eigenvectors_.transpose() * b_;
        Vector coeff = Vector::Zero(dimension());
        std::vector<Eigen::Index> null_idx;
        for (Eigen::Index i = 0; i < dimension(); ++i) {
            if (eigenvalues_(i) <= tol) {
                if (std::abs(bh(i)) > 1e-10 * (1.0 + b_.norm())) return std::nullopt;
                null_idx.push_back(i);
            } else {
                coeff(i) = -bh(i) / eigenvalues_(i);
            }
        }
        AffineSet s{eigenvectors_ * coeff, Matrix(dimension(), static_cast<Eigen::Index>(null_idx.size()))};
        for (std::size_t j = 0; j < null_idx.size(); ++j) s.basis.col(static_cast<Eigen::Index>(j)) = eigenvectors_.col(null_idx[j]);
        return MinimizerSet(std::move(s));
    }

private:
    Matrix A_;
    Vector b_;
    double c0_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
};

struct KnownOptimum {
    std::vector<Vector> points;
    double value = 0.0;
};

/// A smooth function known only through callables. Without an analytic
/// gradient, a central difference with step 1e-6 * (1 + ||x||) is used.
class BlackBoxSmooth {
public:
    using ValueFn = std::function<double(const Vector&)>;
    using GradFn = std::function<Vector(const Vector&)>;

    BlackBoxSmooth(ValueFn value_fn, std::optional<GradFn> grad_fn, Eigen::Index dimension,
                   std::optional<KnownOptimum> known_optimum = std::nullopt)
        : value_fn_(std::move(value_fn)),
          grad_fn_(std::move(grad_fn)),
          dim_(dimension),
          known_(std::move(known_optimum)) {
        if (!value_fn_) throw Error("BlackBoxSmooth: value function required");
        if (dim_ <= 0) throw DimensionError("BlackBoxSmooth: dimension must be positive");
        if (known_) {
            for (const auto& p : known_->points) {
                require_dimension(p, dim_, "BlackBoxSmooth known optimum");
                if (std::abs(value_fn_(p) - known_->value) > 1e-9) {
                    throw PreconditionError("BlackBoxSmooth: known optimum value does not match f at listed point");
                }
            }
        }
    }

    Eigen::Index dimension() const { return dim_; }
    const std::optional<KnownOptimum>& known_optimum() const { return known_; }
    bool has_analytic_gradient() const { return grad_fn_.has_value(); }

    double value(const Vector& x) const { return value_fn_(x); }

    Vector gradient(const Vector& x) const {
        if (grad_fn_) return (*grad_fn_)(x);
        return central_difference(x);
    }

    Vector central_difference(const Vector& x) const {
        const double h = 1e-6 * (1.0 + x.norm());
        Vector g(dim_);
        Vector probe = x;
        for (Eigen::Index i = 0; i < dim_; ++i) {
            probe(i) = x(i) + h;
            const double fp = value_fn_(probe);
            probe(i) = x(i) - h;
            const double fm = value_fn_(probe);
            probe(i) = x(i);
            g(i) = (fp - fm) / (2.0 * h);
        }
        return g;
    }

private:
    ValueFn value_fn_;
    std::optional<GradFn> grad_fn_;
    Eigen::Index dim_;
    std::optional<KnownOptimum> known_;
};

/// h with D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>. `lambda_min` certifies
/// that h - (lambda_min/2)||.||^2 is convex on the working ball.
struct BregmanGenerator {
    std::function<double(const Vector&)> h_value;
    std::function<Vector(const Vector&)> h_grad;
    double lambda_min = 0.0;
    /// Set when h(x) = 1/2 x^T Q x; enables the exact generalized trust-region oracle.
    std::optional<Matrix> quadratic_form;
    /// Ball (center, radius) on which strict convexity is certified; unset means
    /// the default 10 * (1 + ||x0||) ball around the starting point.
    std::optional<std::pair<Vector, double>> working_ball;

    static BregmanGenerator quadratic(const Matrix& Q) {
        if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw PreconditionError("BregmanGenerator: Q must be symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
        BregmanGenerator h;
        h.h_value = [Q](const Vector& x) { return 0.5 * x.dot(Q * x); };
        h.h_grad = [Q](const Vector& x) -> Vector { return Q * x; };
        h.lambda_min = es.eigenvalues()(0);
        h.quadratic_form = Q;
        return h;
    }

    static BregmanGenerator euclidean(Eigen::Index d) { return quadratic(Matrix::Identity(d, d)); }

    bool certified() const { return lambda_min > 0.0 && h_value && h_grad; }
};

inline double bregman_div(const BregmanGenerator& h, const Vector& x, const Vector& y) {
    require_dimension(x, y.size(), "bregman_div");
    return h.h_value(x) - h.h_value(y) - h.h_grad(y).dot(x - y);
}

/// Facts about an objective that theorem checks and schedules rely on.
struct ProblemMetadata {
    std::optional<MinimizerSet> minimizer_set;
    std::optional<double> f_star;
    std::optional<double> L;
    std::optional<double> mu;
    std::optional<bool> convex;
    bool differentiable = false;
    /// f is known to be B_t-convex for this t (e.g. the nonconvex textbook example).
    std::optional<double> ball_convex_radius;
    /// f is known to be weakly B_t-convex for this t with respect to `designated_minimizer`.
    std::optional<double> weak_ball_convex_radius;
    std::optional<Vector> designated_minimizer;
    std::string name;
};

class Problem;

/// f = (1/n) sum_i f_i.
struct FiniteSumProblem {
    std::vector<Problem> clients;
};

/// An objective of one of the supported structural classes together with its metadata.
class Problem {
public:
    using Kind = std::variant<PiecewiseLinear1D, QuadraticProblem, BlackBoxSmooth, FiniteSumProblem>;

    Problem(PiecewiseLinear1D f, std::string name = "pwl1d");
    Problem(QuadraticProblem f, std::string name = "quadratic");
    Problem(BlackBoxSmooth f, std::string name = "blackbox");
    Problem(FiniteSumProblem f, std::string name = "finite_sum");

    const Kind& kind() const { return kind_; }
    const ProblemMetadata& metadata() const { return meta_; }
    Eigen::Index dimension() const;

    const PiecewiseLinear1D* as_pwl() const { return std::get_if<PiecewiseLinear1D>(&kind_); }
    const QuadraticProblem* as_quadratic() const { return std::get_if<QuadraticProblem>(&kind_); }
    const BlackBoxSmooth* as_blackbox() const { return std::get_if<BlackBoxSmooth>(&kind_); }
    const FiniteSumProblem* as_finite_sum() const { return std::get_if<FiniteSumProblem>(&kind_); }

    bool convex() const { return meta_.convex.value_or(false); }
    bool differentiable() const { return meta_.differentiable; }

    /// Returns a copy with replaced metadata; f at every minimizer
    /// representative must equal f_star to 1e-9.
    Problem with_metadata(ProblemMetadata meta) const;

    double value(const Vector& x) const;
    Vector gradient(const Vector& x) const;

    /// Equivalent single-structure problem for finite sums whose clients are all
    /// quadratic (or all 1-D PWL); nullopt otherwise.
    std::optional<Problem> flattened() const;

private:
    void fill_metadata();
    void validate_metadata() const;

    Kind kind_;
    ProblemMetadata meta_;
};

/// Gradient plus a flag telling whether x is a kink (PWL breakpoint), where the
/// returned vector is the right-hand slope.
struct Subgradient {
    Vector value;
    bool nonsmooth = false;
};

// ---------------------------------------------------------------------------

inline Problem::Problem(PiecewiseLinear1D f, std::string name) : kind_(std::move(f)) {
    meta_.name = std::move(name);
    fill_metadata();
}
inline Problem::Problem(QuadraticProblem f, std::string name) : kind_(std::move(f)) {
    meta_.name = std::move(name);
    fill_metadata();
}
inline Problem::Problem(BlackBoxSmooth f, std::string name) : kind_(std::move(f)) {
    meta_.name = std::move(name);
    fill_metadata();
}
inline Problem::Problem(FiniteSumProblem f, std::string name) : kind_(std::move(f)) {
    meta_.name = std::move(name);
    const auto& clients = std::get<FiniteSumProblem>(kind_).clients;
    if (clients.empty()) throw Error("FiniteSumProblem: need at least one client");
    for (const auto& c : clients) {
        if (c.dimension() != clients.front().dimension()) {
            throw DimensionError("FiniteSumProblem: clients must share dimension");
        }
    }
    fill_metadata();
}

inline Eigen::Index Problem::dimension() const {
    return std::visit(
        [](const auto& f) -> Eigen::Index {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PiecewiseLinear1D>) return 1;
            else if constexpr (std::is_same_v<T, FiniteSumProblem>) return f.clients.front().dimension();
            else return f.dimension();
        },
        kind_);
}

inline double Problem::value(const Vector& x) const {
    require_dimension(x, dimension(), "eval");
    return std::visit(
        [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PiecewiseLinear1D>) {
                return f.value(x(0));
            } else if constexpr (std::is_same_v<T, FiniteSumProblem>) {
                double s = 0.0;
                for (const auto& c : f.clients) s += c.value(x);
                return s / static_cast<double>(f.clients.size());
            } else {
                return f.value(x);
            }
        },
        kind_);
}

inline Vector Problem::gradient(const Vector& x) const {
    require_dimension(x, dimension(), "grad");
    return std::visit(
        [&](const auto& f) -> Vector {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PiecewiseLinear1D>) {
                return scalar_vector(f.slope_right(x(0)));
            } else if constexpr (std::is_same_v<T, FiniteSumProblem>) {
                Vector s = Vector::Zero(x.size());
                for (const auto& c : f.clients) s += c.gradient(x);
                return s / static_cast<double>(f.clients.size());
            } else {
                return f.gradient(x);
            }
        },
        kind_);
}

inline std::optional<Problem> Problem::flattened() const {
    const auto* fs = as_finite_sum();
    if (!fs) return *this;
    const double n = static_cast<double>(fs->clients.size());
    bool all_quad = true;
    bool all_pwl = true;
    for (const auto& c : fs->clients) {
        const auto flat = c.flattened();
        if (!flat) return std::nullopt;
        all_quad = all_quad && flat->as_quadratic();
        all_pwl = all_pwl && flat->as_pwl();
    }
    if (all_quad) {
        const Eigen::Index d = dimension();
        Matrix A = Matrix::Zero(d, d);
        Vector b = Vector::Zero(d);
        double c0 = 0.0;
        for (const auto& c : fs->clients) {
            const auto flat = *c.flattened();
            const auto* q = flat.as_quadratic();
            A += q->matrix();
            b += q->linear();
            c0 += q->constant();
        }
        A = (0.5 / n * (A + A.transpose())).eval();
        return Problem(QuadraticProblem(A, b / n, c0 / n), meta_.name);
    }
    if (all_pwl) {
        std::vector<double> bps;
        for (const auto& c : fs->clients) {
            const auto flat = *c.flattened();
            const auto& cb = flat.as_pwl()->breakpoints();
            bps.insert(bps.end(), cb.begin(), cb.end());
        }
        std::sort(bps.begin(), bps.end());
        bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
        std::vector<double> slopes(bps.size() + 1, 0.0);
        double anchor = 0.0;
        for (const auto& c : fs->clients) {
            const auto flat = *c.flattened();
            const auto* p = flat.as_pwl();
            anchor += p->value(bps.front());
            slopes.front() += p->slope_left(bps.front());
            for (std::size_t i = 0; i < bps.size(); ++i) slopes[i + 1] += p->slope_right(bps[i]);
        }
        for (auto& s : slopes) s /= n;
        return Problem(PiecewiseLinear1D(bps, slopes, anchor / n), meta_.name);
    }
    return std::nullopt;
}

inline void Problem::fill_metadata() {
    if (const auto* p = as_pwl()) {
        meta_.convex = p->convex();
        meta_.differentiable = false;
        meta_.minimizer_set = p->minimizer_set();
        meta_.f_star = p->min_value();
    } else if (const auto* q = as_quadratic()) {
        meta_.convex = q->convex();
        meta_.differentiable = true;
        meta_.L = q->smoothness();
        meta_.mu = std::max(0.0, q->min_eigenvalue());
        meta_.minimizer_set = q->minimizer_set();
        if (meta_.minimizer_set) meta_.f_star = q->value(meta_.minimizer_set->project(Vector::Zero(q->dimension())));
    } else if (const auto* b = as_blackbox()) {
        meta_.differentiable = true;
        if (b->known_optimum()) {
            meta_.minimizer_set = MinimizerSet::points(b->known_optimum()->points);
            meta_.f_star = b->known_optimum()->value;
        }
    } else if (const auto flat = flattened()) {
        const auto& m = flat->metadata();
        meta_.convex = m.convex;
        meta_.differentiable = m.differentiable;
        meta_.minimizer_set = m.minimizer_set;
        meta_.f_star = m.f_star;
        meta_.mu = m.mu;
        double lmax = 0.0;
        bool all_l = true;
        for (const auto& c : as_finite_sum()->clients) {
            if (c.metadata().L) lmax = std::max(lmax, *c.metadata().L);
            else all_l = false;
        }
        if (all_l) meta_.L = lmax;
    }
}

inline void Problem::validate_metadata() const {
    if (!meta_.f_star || !meta_.minimizer_set) return;
    for (const auto& p : meta_.minimizer_set->representatives()) {
        if (std::abs(value(p) - *meta_.f_star) > 1e-9) {
            throw PreconditionError("ProblemMetadata: f at a listed minimizer differs from f_star by more than 1e-9");
        }
    }
}

inline Problem Problem::with_metadata(ProblemMetadata meta) const {
    Problem out = *this;
    out.meta_ = std::move(meta);
    out.validate_metadata();
    return out;
}

// ---------------------------------------------------------------------------

inline double eval(const Problem& problem, const Vector& x) { return problem.value(x); }

inline Vector grad(const Problem& problem, const Vector& x) { return problem.gradient(x); }

inline Subgradient subgradient(const Problem& problem, const Vector& x) {
    Subgradient out{problem.gradient(x), false};
    if (const auto* p = problem.as_pwl()) out.nonsmooth = p->is_breakpoint(x(0));
    return out;
}

inline double eval(const Problem& problem, double x) { return problem.value(scalar_vector(x)); }

// ---------------------------------------------------------------------------
// Built-in instances.

/// The nonconvex but B_1-convex function with minimizers {-1, 1}:
/// -x-1 (x <= -1), x+1 (-1 < x <= 0), -x+1 (0 < x <= 1), x-1 (x > 1).
inline Problem not_connected_example() {
    Problem p(PiecewiseLinear1D({-1.0, 0.0, 1.0}, {-1.0, 1.0, -1.0, 1.0}, 0.0), "not_conn");
    auto meta = p.metadata();
    meta.ball_convex_radius = 1.0;
    meta.weak_ball_convex_radius = 1.0;
    meta.designated_minimizer = scalar_vector(-1.0);
    return p.with_metadata(meta);
}

/// Two-well stand-in: global minimum -2 at 0, ridge 0 at 2, local minimum -1 at 4.
inline PiecewiseLinear1D two_well_pwl() {
    return PiecewiseLinear1D({0.0, 2.0, 4.0}, {-1.0, 1.0, -0.5, 1.0}, -2.0);
}

inline Problem two_well_problem() { return Problem(two_well_pwl(), "two_well"); }

namespace camel_detail {
inline double value(const Vector& z) {
    const double x = z(0), y = z(1);
    const double x2 = x * x, y2 = y * y;
    return (4.0 - 2.1 * x2 + x2 * x2 / 3.0) * x2 + x * y + (-4.0 + 4.0 * y2) * y2;
}
inline Vector gradient(const Vector& z) {
    const double x = z(0), y = z(1);
    const double x2 = x * x;
    Vector g(2);
    g(0) = 8.0 * x - 8.4 * x2 * x + 2.0 * x2 * x2 * x + y;
    g(1) = x - 8.0 * y + 16.0 * y * y * y;
    return g;
}
}  // namespace camel_detail

inline constexpr double kCamelMinX = 0.0898420131003180624557926485849;
inline constexpr double kCamelMinY = -0.712656403020739633399299132279;
inline constexpr double kCamelFStar = -1.0316284534898773504221519659;

/// Six-Hump Camel with analytic gradient and both global minimizers.
inline Problem six_hump_camel() {
    KnownOptimum opt{{make_vector({-kCamelMinX, -kCamelMinY}), make_vector({kCamelMinX, kCamelMinY})}, kCamelFStar};
    BlackBoxSmooth f(camel_detail::value, BlackBoxSmooth::GradFn(camel_detail::gradient), 2, opt);
    Problem p(std::move(f), "camel");
    auto meta = p.metadata();
    meta.convex = false;
    return p.with_metadata(meta);
}

}  // namespace broxopt
