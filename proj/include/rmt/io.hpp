#pragma once

// CSV and JSON writers for densities, spectra, matrices and fit/flag reports.
// Numbers are printed in shortest round-trip form so outputs are byte-stable.

#include "rmt/fitting.hpp"
#include "rmt/panel.hpp"

#include <json.hpp>

#include <fstream>

namespace rmt {

using Json = nlohmann::ordered_json;

inline Json to_json(const Atom& a) { return Json{{"position", a.position}, {"weight", a.weight}}; }

inline Json atoms_json(const SpectralDensity& d) {
    Json arr = Json::array();
    for (const auto& a : d.atoms) arr.push_back(to_json(a));
    return arr;
}

inline Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (data.size() != static_cast<std::size_t>(rows)) throw InputError("matrix JSON: row count mismatch");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = data.at(static_cast<std::size_t>(i));
        if (row.size() != static_cast<std::size_t>(cols)) throw InputError("matrix JSON: ragged row");
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = row.at(static_cast<std::size_t>(j2)).get<double>();
    }
    return m;
}

inline Json to_json(const Varma11Params& p) { return Json{{"a0", p.a0}, {"a1", p.a1}, {"b1", p.b1}}; }

inline Json to_json(const FitResult& f) {
    Json trace = Json::array();
    for (const auto& s : f.multistart_trace) {
        trace.push_back(Json{{"init", to_json(s.init)},
                             {"final", to_json(s.final_params)},
                             {"objective", std::isfinite(s.objective) ? Json(s.objective) : Json(nullptr)},
                             {"evaluations", s.evaluations}});
    }
    return Json{{"params", to_json(f.params)},
                {"objective", f.objective},
                {"ks", f.ks},
                {"evaluations", f.evaluations},
                {"converged", f.converged},
                {"multistart_trace", std::move(trace)}};
}

inline Json to_json(const SignificanceReport& r) {
    Json flagged = Json::array();
    for (const auto& f : r.flagged) {
        flagged.push_back(Json{{"rank", f.rank}, {"value", f.value}, {"edge", f.edge}, {"excess", f.excess}});
    }
    return Json{{"edge", r.edge}, {"margin", r.margin}, {"threshold_policy", r.threshold_policy},
                {"flagged", std::move(flagged)}};
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

inline void write_json(const std::string& path, const Json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

/// lambda,rho
inline void write_density_csv(const std::string& path, const SpectralDensity& d) {
    auto out = open_output(path);
    out << "lambda,rho\n";
    for (std::size_t k = 0; k < d.lambdas.size(); ++k) {
        out << detail::format_double(d.lambdas[k]) << ',' << detail::format_double(d.rho[k]) << '\n';
    }
}

/// Single column with a header.
inline void write_values_csv(const std::string& path, std::span<const double> values, const std::string& header) {
    auto out = open_output(path);
    out << header << '\n';
    for (double v : values) out << detail::format_double(v) << '\n';
}

/// Row-major, no header.
inline void write_matrix_csv(const std::string& path, const Matrix& m) {
    auto out = open_output(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::format_double(m(i, j));
        out << '\n';
    }
}

}  // namespace rmt
