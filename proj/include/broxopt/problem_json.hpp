#pragma once

#include "broxopt/problems.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace broxopt {

/// Malformed problem or run configuration; the message names the field.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    return j.at(key);
}

template <class T>
T field_as(const nlohmann::json& j, const std::string& key, const std::string& where) {
    const auto& v = require_field(j, key, where);
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline Vector json_vector(const nlohmann::json& j, const std::string& where) {
    try {
        return make_vector(j.get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": expected an array of numbers (" + e.what() + ")");
    }
}

inline Matrix json_matrix(const nlohmann::json& j, const std::string& where) {
    std::vector<std::vector<double>> rows;
    try {
        rows = j.get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": expected an array of rows (" + e.what() + ")");
    }
    if (rows.empty()) throw ConfigError(where + ": empty matrix");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ConfigError(where + ": ragged matrix row " + std::to_string(i));
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    return m;
}

inline nlohmann::json json_of(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline void apply_metadata(Problem& p, const nlohmann::json& j, const std::string& where) {
    ProblemMetadata m = p.metadata();
    if (j.contains("f_star")) m.f_star = field_as<double>(j, "f_star", where);
    if (j.contains("L")) m.L = field_as<double>(j, "L", where);
    if (j.contains("mu")) m.mu = field_as<double>(j, "mu", where);
    if (j.contains("convex")) m.convex = field_as<bool>(j, "convex", where);
    if (j.contains("ball_convex_radius")) m.ball_convex_radius = field_as<double>(j, "ball_convex_radius", where);
    if (j.contains("weak_ball_convex_radius")) {
        m.weak_ball_convex_radius = field_as<double>(j, "weak_ball_convex_radius", where);
    }
    if (j.contains("designated_minimizer")) m.designated_minimizer = json_vector(j["designated_minimizer"], where + ".designated_minimizer");
    if (j.contains("minimizers")) {
        std::vector<Vector> pts;
        for (const auto& q : j["minimizers"]) pts.push_back(json_vector(q, where + ".minimizers"));
        m.minimizer_set = MinimizerSet::points(std::move(pts));
    }
    try {
        p = p.with_metadata(m);
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace detail

/// Builds a Problem from its JSON description (schema in docs/problem_schema.md).
inline Problem problem_from_json(const nlohmann::json& j, const std::string& where = "problem") {
    const auto type = detail::field_as<std::string>(j, "type", where);
    std::optional<Problem> p;
    try {
        if (type == "pwl1d") {
            p = Problem(PiecewiseLinear1D(detail::field_as<std::vector<double>>(j, "breakpoints", where),
                                          detail::field_as<std::vector<double>>(j, "slopes", where),
                                          detail::field_as<double>(j, "anchor_value", where)));
        } else if (type == "quadratic") {
            const Matrix A = detail::json_matrix(detail::require_field(j, "matrix", where), where + ".matrix");
            const Vector b = j.contains("linear") ? detail::json_vector(j["linear"], where + ".linear")
                                                  : Vector::Zero(A.rows()).eval();
            p = Problem(QuadraticProblem(A, b, j.value("constant", 0.0)));
        } else if (type == "camel") {
            p = six_hump_camel();
        } else if (type == "not_conn") {
            p = not_connected_example();
        } else if (type == "two_well") {
            p = two_well_problem();
        } else if (type == "finite_sum") {
            const auto& cl = detail::require_field(j, "clients", where);
            if (!cl.is_array()) throw ConfigError(where + ".clients: expected an array");
            FiniteSumProblem fs;
            for (std::size_t i = 0; i < cl.size(); ++i) {
                fs.clients.push_back(problem_from_json(cl[i], where + ".clients[" + std::to_string(i) + "]"));
            }
            p = Problem(std::move(fs));
        } else {
            throw ConfigError(where + ".type: unknown problem type '" + type + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (j.contains("metadata")) detail::apply_metadata(*p, j["metadata"], where + ".metadata");
    return *p;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline Problem load_problem(const std::string& path) { return problem_from_json(read_json_file(path), path); }

}  // namespace broxopt
