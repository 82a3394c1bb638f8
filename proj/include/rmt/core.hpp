#pragma once

// Shared value types and the error hierarchy used across the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmt {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

/// Bad user input: malformed files, invalid parameters, violated preconditions.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV/number parsing failure, located by 1-based row and column.
class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t col)
        : InputError(what + " (row " + std::to_string(row) + ", column " + std::to_string(col) + ")"),
          row_(row), col_(col) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

/// Numerical failure: non-convergence, failed branch selection, singular systems.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BranchError : public NumericError {
public:
    using NumericError::NumericError;
};

/// A Dirac component of a spectral measure.
struct Atom {
    double position = 0.0;
    double weight = 0.0;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Spectral measure: a continuous density sampled on an ascending grid plus
/// a list of atoms. The continuous part is integrated with the trapezoid
/// rule, so `rho` is read as piecewise linear between grid nodes.
struct SpectralDensity {
    std::vector<double> lambdas;
    std::vector<double> rho;
    std::vector<Atom> atoms;

    double continuous_mass() const {
        double mass = 0.0;
        for (std::size_t k = 1; k < lambdas.size(); ++k) {
            mass += 0.5 * (rho[k] + rho[k - 1]) * (lambdas[k] - lambdas[k - 1]);
        }
        return mass;
    }

    double atom_mass() const {
        double mass = 0.0;
        for (const auto& a : atoms) mass += a.weight;
        return mass;
    }

    double total_mass() const { return continuous_mass() + atom_mass(); }

    /// Linear interpolation of the continuous part; zero outside the grid.
    double rho_at(double x) const {
        if (lambdas.empty() || x < lambdas.front() || x > lambdas.back()) return 0.0;
        auto it = std::upper_bound(lambdas.begin(), lambdas.end(), x);
        if (it == lambdas.end()) return rho.back();
        const auto k = static_cast<std::size_t>(it - lambdas.begin());
        if (k == 0) return rho.front();
        const double t = (x - lambdas[k - 1]) / (lambdas[k] - lambdas[k - 1]);
        return rho[k - 1] + t * (rho[k] - rho[k - 1]);
    }
};

enum class SpectrumKind { eigenvalues, singular_values };

/// Empirical eigenvalues or singular values, sorted in descending order.
struct EmpiricalSpectrum {
    std::vector<double> values;
    SpectrumKind kind = SpectrumKind::eigenvalues;

    static EmpiricalSpectrum from_unsorted(std::vector<double> v, SpectrumKind kind) {
        std::sort(v.begin(), v.end(), std::greater<>());
        return {std::move(v), kind};
    }

    std::size_t size() const noexcept { return values.size(); }
};

/// Uniform grid of `points` nodes on [lo, hi].
inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
    if (points < 2) throw InputError("grid needs at least 2 points");
    if (!(hi > lo)) throw InputError("grid upper bound must exceed lower bound");
    std::vector<double> g(points);
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) g[k] = lo + h * static_cast<double>(k);
    g.back() = hi;
    return g;
}

inline void require_ascending_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) throw InputError("grid needs at least 2 points");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) throw InputError("grid must be strictly ascending");
    }
}

}  // namespace rmt
