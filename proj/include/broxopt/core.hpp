#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace broxopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Raised when an operation is asked to work outside its hypotheses
/// (nonconvex input to prox, approximate oracle in a ball-convexity scan, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Vector scalar_vector(double v) {
    Vector out(1);
    out(0) = v;
    return out;
}

inline Vector make_vector(std::initializer_list<double> values) {
    Vector out(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) out(i++) = v;
    return out;
}

inline Vector make_vector(const std::vector<double>& values) {
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline std::vector<double> to_std(const Vector& v) {
    return {v.data(), v.data() + v.size()};
}

/// Strict coordinate-lexicographic order; the library-wide tie-break rule.
inline bool lex_less(const Vector& a, const Vector& b) {
    const auto n = std::min(a.size(), b.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a(i) < b(i)) return true;
        if (b(i) < a(i)) return false;
    }
    return a.size() < b.size();
}

inline void sort_lex(std::vector<Vector>& points) {
    std::sort(points.begin(), points.end(), lex_less);
}

inline void require_dimension(const Vector& x, Eigen::Index expected, const char* what) {
    if (x.size() != expected) {
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                             ", got " + std::to_string(x.size()));
    }
}

inline void require_positive_radius(double t, const char* what) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw PreconditionError(std::string(what) + ": radius must be positive and finite");
    }
}

}  // namespace broxopt
