#pragma once

#include "broxopt/core.hpp"

#include <map>
#include <optional>
#include <string>

namespace broxopt {

enum class TerminationReason { optimum_reached, max_iter, stalled };

inline const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::optimum_reached: return "optimum_reached";
        case TerminationReason::max_iter: return "max_iter";
        case TerminationReason::stalled: return "stalled";
    }
    return "unknown";
}

inline TerminationReason termination_from_string(const std::string& s) {
    if (s == "optimum_reached") return TerminationReason::optimum_reached;
    if (s == "max_iter") return TerminationReason::max_iter;
    if (s == "stalled") return TerminationReason::stalled;
    throw Error("unknown termination reason: " + s);
}

/// Row k describes x_k and the step x_k -> x_{k+1}. Step fields are empty on
/// the final row.
struct TraceRow {
    long k = 0;
    Vector x;
    double f = 0.0;
    std::optional<double> t;
    std::optional<double> step_len;
    std::optional<double> c;
    std::optional<double> grad_norm_next;
    std::optional<double> dist_opt;
    std::optional<int> client;
};

struct IterateTrace {
    std::string method;
    std::vector<TraceRow> rows;
    TerminationReason terminated_reason = TerminationReason::max_iter;
    std::uint64_t seed = 0;
    bool exact_oracle = true;
    /// Largest stationarity/boundary residual reported by the oracle over the run.
    double max_oracle_residual = 0.0;
    /// Largest discrepancy between the two independent computations of a step
    /// (methods that assert a reformulation identity).
    double max_equivalence_residual = 0.0;
    std::map<std::string, double> params;
    /// Auxiliary sequence (A-BPM keeps y_k here).
    std::vector<Vector> aux_points;

    void append(TraceRow row) {
        const long expected = static_cast<long>(rows.size());
        if (row.k != expected) throw Error("IterateTrace: rows must be contiguous from k = 0");
        rows.push_back(std::move(row));
    }

    std::size_t steps() const { return rows.empty() ? 0 : rows.size() - 1; }
    const Vector& final_point() const { return rows.back().x; }
    double final_value() const { return rows.back().f; }

    std::optional<double> param(const std::string& key) const {
        const auto it = params.find(key);
        if (it == params.end()) return std::nullopt;
        return it->second;
    }
};

}  // namespace broxopt
