#pragma once

// Multivariate time-series panels: CSV ingestion, stationarity transforms,
// outlier cleaning and row standardization.

#include "rmt/core.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <regex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rmt {

/// N x T panel, one row per series.
struct TimePanel {
    std::vector<std::string> labels;
    Matrix values;
    std::vector<std::string> time_index;  // empty, or one entry per column

    std::size_t n_series() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_obs() const noexcept { return static_cast<std::size_t>(values.cols()); }

    /// Throws InputError unless labels/time index match the matrix and all entries are finite.
    void validate() const {
        if (values.cols() < 2) throw InputError("panel needs at least 2 observations per series");
        if (labels.size() != n_series()) throw InputError("panel label count does not match row count");
        if (!time_index.empty() && time_index.size() != n_obs()) {
            throw InputError("panel time index length does not match column count");
        }
        if (!values.allFinite()) throw InputError("panel contains NaN or infinite entries");
    }

    friend bool operator==(const TimePanel& a, const TimePanel& b) {
        return a.labels == b.labels && a.time_index == b.time_index && a.values.rows() == b.values.rows() &&
               a.values.cols() == b.values.cols() && (a.values.array() == b.values.array()).all();
    }
};

/// Builds a panel with default labels s0..s{N-1}.
inline TimePanel make_panel(Matrix values) {
    TimePanel p;
    p.labels.reserve(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) p.labels.push_back("s" + std::to_string(i));
    p.values = std::move(values);
    return p;
}

enum class Orientation { rows_are_series, columns_are_series };

inline Orientation parse_orientation(std::string_view s) {
    if (s == "rows") return Orientation::rows_are_series;
    if (s == "cols" || s == "columns") return Orientation::columns_are_series;
    throw InputError("orientation must be 'rows' or 'cols', got '" + std::string(s) + "'");
}

enum class TransformKind { none, first_difference, log_first_difference, log_second_difference };

struct TransformSpec {
    TransformKind kind = TransformKind::none;

    /// Number of observations lost to differencing.
    std::size_t order() const noexcept {
        switch (kind) {
            case TransformKind::none: return 0;
            case TransformKind::first_difference:
            case TransformKind::log_first_difference: return 1;
            case TransformKind::log_second_difference: return 2;
        }
        return 0;
    }
    bool uses_log() const noexcept {
        return kind == TransformKind::log_first_difference || kind == TransformKind::log_second_difference;
    }
};

inline TransformSpec parse_transform(std::string_view s) {
    if (s == "none") return {TransformKind::none};
    if (s == "diff" || s == "first-difference") return {TransformKind::first_difference};
    if (s == "logdiff" || s == "log-first-difference") return {TransformKind::log_first_difference};
    if (s == "logdiff2" || s == "log-second-difference") return {TransformKind::log_second_difference};
    throw InputError("unknown transform '" + std::string(s) + "'");
}

inline std::string to_string(TransformKind k) {
    switch (k) {
        case TransformKind::none: return "none";
        case TransformKind::first_difference: return "first-difference";
        case TransformKind::log_first_difference: return "log-first-difference";
        case TransformKind::log_second_difference: return "log-second-difference";
    }
    return "none";
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

inline bool looks_like_timestamp(const std::string& s) {
    static const std::regex iso(R"(^\d{4}-\d{2}(-\d{2})?$)");
    return std::regex_match(s, iso);
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Parses panel CSV from a stream. See load_csv for the layout.
inline TimePanel parse_csv(std::istream& in, Orientation orientation) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        rows.push_back(detail::split_csv_line(line));
    }
    if (rows.empty()) throw ParseError("empty CSV input", 1, 1);
    if (rows.size() < 2) throw ParseError("CSV has a header but no data rows", 1, 1);

    const std::size_t width = rows.front().size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw ParseError("ragged matrix: expected " + std::to_string(width) + " cells, found " +
                                 std::to_string(rows[r].size()),
                             r + 1, std::min(rows[r].size(), width) + 1);
        }
    }

    const auto& header = rows.front();
    TimePanel panel;

    if (orientation == Orientation::rows_are_series) {
        // header: <anything>, t1..tT ; rows: label, v1..vT
        if (width < 2) throw ParseError("need a label column and at least one value column", 1, 1);
        const std::size_t n = rows.size() - 1;
        const std::size_t t = width - 1;
        bool stamped = true;
        for (std::size_t c = 1; c < width; ++c) stamped = stamped && detail::looks_like_timestamp(header[c]);
        if (stamped) panel.time_index.assign(header.begin() + 1, header.end());
        panel.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
        for (std::size_t r = 0; r < n; ++r) {
            panel.labels.push_back(rows[r + 1][0]);
            for (std::size_t c = 0; c < t; ++c) {
                const auto v = detail::parse_double(rows[r + 1][c + 1]);
                if (!v) {
                    const auto& cell = rows[r + 1][c + 1];
                    throw ParseError(cell.empty() ? "missing value" : "non-numeric cell '" + cell + "'", r + 2,
                                     c + 2);
                }
                panel.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
            }
        }
    } else {
        // header: [time-col], label1..labelN ; rows: [timestamp], v1..vN
        bool stamped = true;
        for (std::size_t r = 1; r < rows.size(); ++r) stamped = stamped && detail::looks_like_timestamp(rows[r][0]);
        const std::size_t first = stamped ? 1 : 0;
        if (width <= first) throw ParseError("no value columns", 1, 1);
        const std::size_t n = width - first;
        const std::size_t t = rows.size() - 1;
        panel.labels.assign(header.begin() + static_cast<std::ptrdiff_t>(first), header.end());
        panel.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
        for (std::size_t r = 0; r < t; ++r) {
            if (stamped) panel.time_index.push_back(rows[r + 1][0]);
            for (std::size_t c = 0; c < n; ++c) {
                const auto& cell = rows[r + 1][c + first];
                const auto v = detail::parse_double(cell);
                if (!v) {
                    throw ParseError(cell.empty() ? "missing value" : "non-numeric cell '" + cell + "'", r + 2,
                                     c + first + 1);
                }
                panel.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = *v;
            }
        }
    }
    return panel;
}

/// Loads a panel from CSV. The first row is a header. With rows-are-series,
/// the first column holds series labels and the header holds the time labels
/// (kept as the time index when they are all ISO-8601 months/dates). With
/// columns-are-series, the header holds series labels and an optional leading
/// timestamp column is detected from its cells.
inline TimePanel load_csv(const std::string& path, Orientation orientation) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_csv(in, orientation);
}

inline void write_csv(std::ostream& out, const TimePanel& panel, Orientation orientation) {
    const auto n = panel.n_series();
    const auto t = panel.n_obs();
    const bool stamped = !panel.time_index.empty();
    if (orientation == Orientation::rows_are_series) {
        out << "series";
        for (std::size_t c = 0; c < t; ++c) out << ',' << (stamped ? panel.time_index[c] : "t" + std::to_string(c));
        out << '\n';
        for (std::size_t r = 0; r < n; ++r) {
            out << panel.labels[r];
            for (std::size_t c = 0; c < t; ++c) {
                out << ',' << detail::format_double(panel.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            }
            out << '\n';
        }
    } else {
        if (stamped) out << "date,";
        for (std::size_t r = 0; r < n; ++r) out << (r ? "," : "") << panel.labels[r];
        out << '\n';
        for (std::size_t c = 0; c < t; ++c) {
            if (stamped) out << panel.time_index[c] << ',';
            for (std::size_t r = 0; r < n; ++r) {
                out << (r ? "," : "")
                    << detail::format_double(panel.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            }
            out << '\n';
        }
    }
}

inline void save_csv(const TimePanel& panel, const std::string& path,
                     Orientation orientation = Orientation::columns_are_series) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_csv(out, panel, orientation);
}

/// Applies a stationarity transform. Output length is input length minus the
/// differencing order; log-second-difference is the second difference of ln x.
inline std::vector<double> transform_series(std::span<const double> series, TransformSpec spec) {
    const std::size_t need = spec.order() == 2 ? 3 : 2;
    if (series.size() < need) {
        throw InputError("series too short for " + to_string(spec.kind) + ": need " + std::to_string(need) +
                         " values, got " + std::to_string(series.size()));
    }
    std::vector<double> x(series.begin(), series.end());
    if (spec.uses_log()) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] > 0.0)) {
                throw InputError("non-positive value " + detail::format_double(x[i]) + " at index " +
                                 std::to_string(i) + " under a log transform");
            }
            x[i] = std::log(x[i]);
        }
    }
    for (std::size_t d = 0; d < spec.order(); ++d) {
        for (std::size_t i = 0; i + 1 < x.size(); ++i) x[i] = x[i + 1] - x[i];
        x.pop_back();
    }
    return x;
}

/// Sample quantile with linear interpolation between order statistics.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InputError("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct CleanedSeries {
    std::vector<double> values;
    std::vector<std::size_t> replaced;
};

/// Replaces entries with |x - median| > k * IQR by the median. With a
/// degenerate IQR of zero, every entry that differs from the median is replaced.
inline CleanedSeries remove_outliers(std::span<const double> series, double k = 6.0) {
    if (series.size() < 4) throw InputError("outlier rule needs at least 4 observations");
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    const double median = quantile_sorted(sorted, 0.5);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    CleanedSeries out{std::vector<double>(series.begin(), series.end()), {}};
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (std::abs(out.values[i] - median) > k * iqr) {
            out.values[i] = median;
            out.replaced.push_back(i);
        }
    }
    return out;
}

/// Per-row mean zero and variance one (divisor T).
inline TimePanel standardize(const TimePanel& panel) {
    TimePanel out = panel;
    const double t = static_cast<double>(panel.n_obs());
    for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
        auto row = out.values.row(i);
        const double mean = row.mean();
        row.array() -= mean;
        const double var = row.squaredNorm() / t;
        if (!(var > 1e-28 * std::max(1.0, mean * mean))) {
            throw InputError("series '" + panel.labels[static_cast<std::size_t>(i)] +
                             "' is constant and cannot be standardized");
        }
        row /= std::sqrt(var);
        // second pass removes the rounding residue of the first
        row.array() -= row.mean();
        row /= std::sqrt(row.squaredNorm() / t);
    }
    return out;
}

/// Removes per-row means only.
inline TimePanel demean(const TimePanel& panel) {
    TimePanel out = panel;
    for (Eigen::Index i = 0; i < out.values.rows(); ++i) out.values.row(i).array() -= out.values.row(i).mean();
    return out;
}

struct SeriesPrep {
    TransformSpec transform;
    std::optional<double> outlier_k = 6.0;
};

struct PreparedPanel {
    TimePanel panel;
    std::vector<std::vector<std::size_t>> replaced;  // per series, indices into the transformed series
};

/// Transforms each series, cleans outliers, then truncates every series to the
/// shortest common length, keeping the most recent observations.
inline PreparedPanel prepare_panel(const TimePanel& raw, std::span<const SeriesPrep> prep) {
    raw.validate();
    if (prep.size() != 1 && prep.size() != raw.n_series()) {
        throw InputError("need one transform for all series or one per series");
    }
    std::vector<std::vector<double>> series;
    PreparedPanel out;
    for (std::size_t i = 0; i < raw.n_series(); ++i) {
        const auto& p = prep.size() == 1 ? prep[0] : prep[i];
        std::vector<double> row(raw.values.row(static_cast<Eigen::Index>(i)).begin(),
                                raw.values.row(static_cast<Eigen::Index>(i)).end());
        try {
            row = transform_series(row, p.transform);
        } catch (const InputError& e) {
            throw InputError("series '" + raw.labels[i] + "': " + e.what());
        }
        std::vector<std::size_t> replaced;
        if (p.outlier_k && row.size() >= 4) {
            auto cleaned = remove_outliers(row, *p.outlier_k);
            row = std::move(cleaned.values);
            replaced = std::move(cleaned.replaced);
        }
        series.push_back(std::move(row));
        out.replaced.push_back(std::move(replaced));
    }
    std::size_t t = series.front().size();
    for (const auto& s : series) t = std::min(t, s.size());
    if (t < 2) throw InputError("fewer than 2 common observations after transforms");

    out.panel.labels = raw.labels;
    out.panel.values.resize(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t skip = series[i].size() - t;
        for (std::size_t c = 0; c < t; ++c) {
            out.panel.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = series[i][skip + c];
        }
        // re-base replaced indices onto the truncated window
        std::vector<std::size_t> kept;
        for (auto idx : out.replaced[i]) {
            if (idx >= skip) kept.push_back(idx - skip);
        }
        out.replaced[i] = std::move(kept);
    }
    if (!raw.time_index.empty()) {
        out.panel.time_index.assign(raw.time_index.end() - static_cast<std::ptrdiff_t>(t), raw.time_index.end());
    }
    return out;
}

}  // namespace rmt
