#pragma once

#include "broxopt/core.hpp"

#include <utility>
#include <variant>

namespace broxopt {

/// Finite list of points.
struct PointSet {
    std::vector<Vector> points;
};

/// origin + span(basis); basis columns are orthonormal (may be empty).
struct AffineSet {
    Vector origin;
    Matrix basis;
};

/// Union of closed intervals on the real line, sorted and disjoint.
/// Endpoints may be infinite.
struct IntervalUnion {
    std::vector<std::pair<double, double>> intervals;
};

/// Explicit description of an argmin set: finite points, an affine set,
/// or a union of intervals (1-D only).
class MinimizerSet {
public:
    using Shape = std::variant<PointSet, AffineSet, IntervalUnion>;

    MinimizerSet() = default;
    explicit MinimizerSet(PointSet s) : shape_(std::move(s)) { sort_lex(std::get<PointSet>(shape_).points); }
    explicit MinimizerSet(AffineSet s) : shape_(std::move(s)) {}
    explicit MinimizerSet(IntervalUnion s) : shape_(normalized(std::move(s))) {}

    static MinimizerSet points(std::vector<Vector> pts) { return MinimizerSet(PointSet{std::move(pts)}); }
    static MinimizerSet single(Vector p) { return points({std::move(p)}); }

    const Shape& shape() const { return shape_; }

    bool is_points() const { return std::holds_alternative<PointSet>(shape_); }
    bool is_affine() const { return std::holds_alternative<AffineSet>(shape_); }
    bool is_intervals() const { return std::holds_alternative<IntervalUnion>(shape_); }

    /// Euclidean projection; ties between equidistant components go to the
    /// lexicographically smallest candidate.
    Vector project(const Vector& x) const {
        return std::visit([&](const auto& s) { return project_impl(s, x); }, shape_);
    }

    double distance(const Vector& x) const { return (project(x) - x).norm(); }

    bool contains(const Vector& x, double tol = 1e-9) const { return distance(x) <= tol; }

    /// Finite set of members usable as test points (interval endpoints are
    /// clamped to finite values; affine sets contribute origin and origin +- basis).
    std::vector<Vector> representatives() const {
        std::vector<Vector> out;
        if (const auto* p = std::get_if<PointSet>(&shape_)) {
            out = p->points;
        } else if (const auto* a = std::get_if<AffineSet>(&shape_)) {
            out.push_back(a->origin);
            for (Eigen::Index j = 0; j < a->basis.cols(); ++j) {
                out.push_back(a->origin + a->basis.col(j));
                out.push_back(a->origin - a->basis.col(j));
            }
        } else {
            for (const auto& [lo, hi] : std::get<IntervalUnion>(shape_).intervals) {
                if (std::isfinite(lo)) out.push_back(scalar_vector(lo));
                if (std::isfinite(hi) && hi != lo) out.push_back(scalar_vector(hi));
                if (!std::isfinite(lo) && !std::isfinite(hi)) out.push_back(scalar_vector(0.0));
                else if (!std::isfinite(lo)) out.push_back(scalar_vector(hi - 1.0));
                else if (!std::isfinite(hi)) out.push_back(scalar_vector(lo + 1.0));
            }
        }
        return out;
    }

private:
    static IntervalUnion normalized(IntervalUnion s) {
        auto& iv = s.intervals;
        std::sort(iv.begin(), iv.end());
        std::vector<std::pair<double, double>> merged;
        for (const auto& seg : iv) {
            if (seg.first > seg.second) throw Error("MinimizerSet: interval with lo > hi");
            if (!merged.empty() && seg.first <= merged.back().second) {
                merged.back().second = std::max(merged.back().second, seg.second);
            } else {
                merged.push_back(seg);
            }
        }
        iv = std::move(merged);
        return s;
    }

    static Vector project_impl(const PointSet& s, const Vector& x) {
        if (s.points.empty()) throw Error("MinimizerSet: empty point set");
        const Vector* best = &s.points.front();
        double best_d = (x - *best).squaredNorm();
        for (const auto& p : s.points) {
            require_dimension(p, x.size(), "MinimizerSet::project");
            const double d = (x - p).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = &p;
            }
        }
        return *best;
    }

    static Vector project_impl(const AffineSet& s, const Vector& x) {
        require_dimension(x, s.origin.size(), "MinimizerSet::project");
        const Vector r = x - s.origin;
        if (s.basis.cols() == 0) return s.origin;
        return s.origin + s.basis * (s.basis.transpose() * r);
    }

    static Vector project_impl(const IntervalUnion& s, const Vector& x) {
        require_dimension(x, 1, "MinimizerSet::project");
        if (s.intervals.empty()) throw Error("MinimizerSet: empty interval union");
        const double v = x(0);
        double best = std::clamp(v, s.intervals.front().first, s.intervals.front().second);
        for (const auto& [lo, hi] : s.intervals) {
            const double c = std::clamp(v, lo, hi);
            if (std::abs(c - v) < std::abs(best - v)) best = c;
        }
        return scalar_vector(best);
    }

    Shape shape_{PointSet{}};
};

}  // namespace broxopt
