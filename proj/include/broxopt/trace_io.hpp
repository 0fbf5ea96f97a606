#pragma once

#include "broxopt/trace.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace broxopt {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trace_csv_header(Eigen::Index dim) {
    std::string h = "k";
    for (Eigen::Index i = 0; i < dim; ++i) h += ",x_" + std::to_string(i);
    return h + ",f,t,step_len,c,grad_norm_next,dist_opt,client";
}

inline void write_trace_csv(std::ostream& os, const IterateTrace& trace) {
    const Eigen::Index dim = trace.rows.empty() ? 0 : trace.rows.front().x.size();
    os << trace_csv_header(dim) << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& row : trace.rows) {
        os << row.k;
        for (Eigen::Index i = 0; i < row.x.size(); ++i) os << ',' << format_double(row.x(i));
        os << ',' << format_double(row.f) << ',' << opt(row.t) << ',' << opt(row.step_len) << ',' << opt(row.c)
           << ',' << opt(row.grad_norm_next) << ',' << opt(row.dist_opt) << ','
           << (row.client ? std::to_string(*row.client) : std::string()) << '\n';
    }
}

inline nlohmann::json trace_meta_json(const IterateTrace& trace) {
    nlohmann::json j;
    j["method"] = trace.method;
    j["terminated_reason"] = to_string(trace.terminated_reason);
    j["seed"] = trace.seed;
    j["exact_oracle"] = trace.exact_oracle;
    j["max_oracle_residual"] = trace.max_oracle_residual;
    j["max_equivalence_residual"] = trace.max_equivalence_residual;
    j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : trace.params) j["params"][k] = v;
    if (!trace.aux_points.empty()) {
        auto aux = nlohmann::json::array();
        for (const auto& p : trace.aux_points) aux.push_back(std::vector<double>(p.data(), p.data() + p.size()));
        j["aux_points"] = aux;
    }
    return j;
}

inline std::string meta_path_for(const std::string& csv_path) { return csv_path + ".meta.json"; }

/// Writes the CSV and the sidecar <path>.meta.json.
inline void save_trace(const std::string& path, const IterateTrace& trace) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    write_trace_csv(os, trace);
    std::ofstream ms(meta_path_for(path));
    if (!ms) throw Error("cannot open " + meta_path_for(path) + " for writing");
    ms << trace_meta_json(trace).dump(2) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

}  // namespace detail

/// Reads a trace CSV; the sidecar meta file is applied when present.
inline IterateTrace load_trace(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open trace " + path);
    std::string line;
    if (!std::getline(is, line)) throw Error(path + ": empty trace file");
    const auto header = detail::split_csv_line(line);
    const std::size_t fixed = 8;
    if (header.size() < fixed + 1 || header.front() != "k") throw Error(path + ": malformed trace header");
    const std::size_t dim = header.size() - fixed;
    if (line != trace_csv_header(static_cast<Eigen::Index>(dim))) throw Error(path + ": unexpected trace header");
    IterateTrace trace;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != header.size()) {
            throw Error(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
        }
        try {
            TraceRow row;
            row.k = std::stol(f[0]);
            row.x.resize(static_cast<Eigen::Index>(dim));
            for (std::size_t i = 0; i < dim; ++i) row.x(static_cast<Eigen::Index>(i)) = std::stod(f[1 + i]);
            row.f = std::stod(f[1 + dim]);
            row.t = detail::parse_opt(f[2 + dim]);
            row.step_len = detail::parse_opt(f[3 + dim]);
            row.c = detail::parse_opt(f[4 + dim]);
            row.grad_norm_next = detail::parse_opt(f[5 + dim]);
            row.dist_opt = detail::parse_opt(f[6 + dim]);
            if (!f[7 + dim].empty()) row.client = std::stoi(f[7 + dim]);
            trace.append(std::move(row));
        } catch (const std::invalid_argument&) {
            throw Error(path + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    std::ifstream ms(meta_path_for(path));
    if (ms) {
        const auto j = nlohmann::json::parse(ms);
        trace.method = j.value("method", "");
        trace.terminated_reason = termination_from_string(j.value("terminated_reason", "max_iter"));
        trace.seed = j.value("seed", std::uint64_t{0});
        trace.exact_oracle = j.value("exact_oracle", true);
        trace.max_oracle_residual = j.value("max_oracle_residual", 0.0);
        trace.max_equivalence_residual = j.value("max_equivalence_residual", 0.0);
        if (j.contains("params")) {
            for (const auto& [k, v] : j["params"].items()) trace.params[k] = v.get<double>();
        }
        if (j.contains("aux_points")) {
            for (const auto& p : j["aux_points"]) trace.aux_points.push_back(make_vector(p.get<std::vector<double>>()));
        }
    }
    return trace;
}

}  // namespace broxopt
