#pragma once

// Free-random-variable numerics: Green's/M/N transforms, physical branch
// selection, density extraction from a resolvent, and quadrature M-transforms
// of stationary autocovariances.

#include "rmt/arma.hpp"
#include "rmt/core.hpp"
#include "rmt/poly.hpp"

#include <optional>
#include <span>

namespace rmt {

enum class TransformTag { green, m_transform, n_transform };

/// A complex function tagged with the transform it represents.
struct TransformEvaluator {
    TransformTag tag = TransformTag::green;
    std::function<Complex(Complex)> fn;

    Complex operator()(Complex z) const { return fn(z); }
};

inline TransformEvaluator make_green(std::function<Complex(Complex)> fn) { return {TransformTag::green, std::move(fn)}; }
inline TransformEvaluator make_m_transform(std::function<Complex(Complex)> fn) {
    return {TransformTag::m_transform, std::move(fn)};
}
inline TransformEvaluator make_n_transform(std::function<Complex(Complex)> fn) {
    return {TransformTag::n_transform, std::move(fn)};
}

/// M(z) = z G(z) - 1.
inline Complex m_from_green(Complex g, Complex z) { return z * g - 1.0; }
/// G(z) = (1 + M(z)) / z.
inline Complex green_from_m(Complex m, Complex z) { return (1.0 + m) / z; }

/// Picks the Green's-function branch among candidate roots at z (Im z > 0):
/// candidates with Im G < 0 (or numerically real, allowed outside the
/// support); the one closest to `previous` when given, otherwise the one
/// closest to the asymptote 1/z.
inline Complex select_physical_root(std::span<const Complex> candidates, Complex z,
                                    std::optional<Complex> previous = std::nullopt) {
    const Complex target = previous ? *previous : 1.0 / z;
    std::optional<Complex> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) continue;
        const double tol = 1e-10 * std::max(1.0, std::abs(c));
        if (!(c.imag() < 0.0 || std::abs(c.imag()) <= tol)) continue;
        const double d = std::abs(c - target);
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    if (!best) {
        std::ostringstream os;
        os << "no Green's-function candidate with Im G <= 0 at z = " << z << "; candidates:";
        for (const auto& c : candidates) os << ' ' << c;
        throw BranchError(os.str());
    }
    return *best;
}

/// 10 x the mean grid spacing.
inline double default_epsilon(std::span<const double> grid) {
    if (grid.size() < 2) throw InputError("grid needs at least 2 points");
    return 10.0 * (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
}

/// rho(lambda) = -Im g(lambda + i eps) / pi on the grid. Poles show up as
/// grid points with eps |Im G| > 0.1; they are reported as atoms (position and
/// weight refined from a Lorentzian fit) and their broadened profile is
/// removed from the continuous part.
inline SpectralDensity density_from_green(const TransformEvaluator& g, const std::vector<double>& grid,
                                          std::optional<double> eps_opt = std::nullopt) {
    require_ascending_grid(grid);
    const double eps = eps_opt ? *eps_opt : default_epsilon(grid);
    if (!(eps > 0.0)) throw InputError("density_from_green: epsilon must be positive");

    const std::size_t n = grid.size();
    std::vector<double> im(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex v;
        try {
            v = g(Complex(grid[k], eps));
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " [at lambda = " + std::to_string(grid[k]) + "]");
        }
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw NumericError("non-finite Green's function at lambda = " + std::to_string(grid[k]));
        }
        im[k] = v.imag();
    }

    SpectralDensity out;
    out.lambdas = grid;
    out.rho.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double r = -im[k] / kPi;
        if (r < 0.0) {
            if (r > -1e-9) {
                r = 0.0;
            } else {
                throw BranchError("density_from_green: Im G > 0 at lambda = " + std::to_string(grid[k]) +
                                  " (unphysical branch)");
            }
        }
        out.rho[k] = r;
    }

    for (std::size_t k = 0; k < n; ++k) {
        const double strength = eps * std::abs(im[k]);
        if (strength <= 0.1) continue;
        const bool left_ok = k == 0 || std::abs(im[k]) >= std::abs(im[k - 1]);
        const bool right_ok = k + 1 == n || std::abs(im[k]) > std::abs(im[k + 1]);
        if (!left_ok || !right_ok) continue;
        Atom atom{grid[k], strength};
        if (k > 0 && k + 1 < n) {
            // 1/|Im G| of a Lorentzian is the parabola ((x - x0)^2 + eps^2) / (w eps)
            const double x0 = grid[k - 1], x1 = grid[k], x2 = grid[k + 1];
            const double y0 = 1.0 / std::abs(im[k - 1]), y1 = 1.0 / std::abs(im[k]), y2 = 1.0 / std::abs(im[k + 1]);
            const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
            const double a = (d12 - d01) / (x2 - x0);
            if (a > 0.0) {
                const double b = d01 - a * (x0 + x1);
                const double vertex = -b / (2.0 * a);
                if (vertex >= x0 && vertex <= x2) {
                    atom.position = vertex;
                    atom.weight = 1.0 / (eps * a);
                }
            }
        }
        out.atoms.push_back(atom);
    }

    for (std::size_t k = 0; k < n; ++k) {
        double r = out.rho[k];
        for (const auto& a : out.atoms) {
            const double d = grid[k] - a.position;
            r -= a.weight * eps / (kPi * (d * d + eps * eps));
        }
        out.rho[k] = std::max(0.0, r);
    }
    return out;
}

/// M-transform of the identity matrix, 1/(z - 1).
inline Complex m_transform_identity(Complex z) {
    if (z == Complex(1.0)) throw NumericError("m_transform_identity: pole at z = 1");
    return 1.0 / (z - 1.0);
}

/// Functional inverse of m_transform_identity, 1 + 1/w.
inline Complex n_transform_identity(Complex w) {
    if (w == Complex(0.0)) throw NumericError("n_transform_identity: pole at w = 0");
    return 1.0 + 1.0 / w;
}

/// FRV multiplication law: N_{AB}(w) = w / (1 + w) N_A(w) N_B(w).
inline Complex frv_product_n(Complex w, Complex n_a, Complex n_b) { return w / (1.0 + w) * n_a * n_b; }

/// M-transform of a stationary autocovariance,
///   (1/2pi) int f(omega) / (z - f(omega)) d omega,
/// by nested trapezoid quadrature starting from `quad_points` nodes and
/// doubling until successive levels agree.
inline Complex m_transform_stationary(const ArmaParams& params, Complex z, std::size_t quad_points = 512) {
    params.require_valid();
    if (quad_points < 512) throw InputError("m_transform_stationary: need at least 512 quadrature nodes");

    auto f = [&](double w) { return arma_spectral_function(params, w); };
    std::size_t n = quad_points;
    double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
    Complex sum(0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double fv = f(2.0 * kPi * static_cast<double>(j) / static_cast<double>(n));
        fmin = std::min(fmin, fv);
        fmax = std::max(fmax, fv);
        sum += fv / (z - fv);
    }
    if (z.imag() == 0.0 && z.real() >= fmin && z.real() <= fmax) {
        throw InputError("m_transform_stationary: z lies on the branch cut [min f, max f]");
    }
    Complex level = sum / static_cast<double>(n);
    const std::size_t max_nodes = std::size_t{1} << 23;
    double diff = std::numeric_limits<double>::infinity();
    while (n < max_nodes) {
        Complex odd(0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double fv = f(2.0 * kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(n));
            odd += fv / (z - fv);
        }
        const Complex next = 0.5 * (level + odd / static_cast<double>(n));
        diff = std::abs(next - level);
        level = next;
        n *= 2;
        if (diff <= 1e-13 * std::max(1.0, std::abs(level))) return level;
    }
    if (diff > 1e-6) throw NumericError("m_transform_stationary: quadrature did not converge");
    return level;
}

/// Inverts an M-transform numerically: returns z with M(z) = w, by damped
/// secant iteration from `seed`.
inline Complex n_transform_numeric(const TransformEvaluator& m, Complex w, Complex seed) {
    auto residual = [&](Complex z) -> Complex {
        try {
            return m(z) - w;
        } catch (const NumericError&) {
            return {std::numeric_limits<double>::infinity(), 0.0};
        }
    };
    const double scale = std::max(1.0, std::abs(w));
    Complex z0 = seed;
    Complex f0 = residual(z0);
    Complex z1 = seed + Complex(1e-3, 1e-3) * std::max(1.0, std::abs(seed));
    Complex f1 = residual(z1);
    if (std::abs(f1) > std::abs(f0)) {
        std::swap(z0, z1);
        std::swap(f0, f1);
    }
    for (int iter = 0; iter < 200; ++iter) {
        if (std::abs(f1) <= 1e-14 * scale) return z1;
        const Complex df = f1 - f0;
        Complex step = df == Complex(0.0) ? Complex(1e-8 * std::max(1.0, std::abs(z1)))
                                          : f1 * (z1 - z0) / df;
        double damping = 1.0;
        Complex z2 = z1 - step;
        Complex f2 = residual(z2);
        while (!(std::abs(f2) < std::abs(f1)) && damping > 1.0 / 1024.0) {
            damping *= 0.5;
            z2 = z1 - damping * step;
            f2 = residual(z2);
        }
        if (!(std::abs(f2) < std::abs(f1))) {
            if (std::abs(f1) <= 1e-10 * scale) return z1;
            // secant slope is stale; restart from a fresh pair around z1
            z0 = z1 + Complex(1e-6, 1e-6) * std::max(1.0, std::abs(z1));
            f0 = residual(z0);
            continue;
        }
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f2;
        if (std::abs(z1 - z0) <= 1e-15 * std::max(1.0, std::abs(z1)) && std::abs(f1) <= 1e-10 * scale) return z1;
    }
    if (std::abs(f1) <= 1e-10 * scale) return z1;
    throw NumericError("n_transform_numeric: no convergence in 200 iterations");
}

/// Candidate Green's-function values at a complex point (roots of an
/// algebraic equation already mapped to G).
using GreenCandidates = std::function<std::vector<Complex>(Complex z)>;

/// Tracks the physical branch of an algebraic Green's function along the grid
/// (evaluated at lambda + i eps). The sweep runs from the top of the grid down;
/// the starting branch is found by continuation from a far point in the upper
/// half-plane, where G ~ 1/z is unambiguous. Returns G in grid order.
inline std::vector<Complex> sweep_green(const GreenCandidates& candidates, const std::vector<double>& grid,
                                        double eps) {
    require_ascending_grid(grid);
    const double top = grid.back();
    const double scale = std::max({1.0, std::abs(grid.front()), std::abs(top)});
    const int steps = 32;

    // the target is the previous value rescaled by z_prev / z, i.e. z G is
    // what is continued; G itself blows up like 1 / z next to a pole at 0
    std::optional<Complex> prev;
    Complex prev_z;
    auto step = [&](Complex z) {
        const std::optional<Complex> target = prev ? std::optional<Complex>(*prev * (prev_z / z)) : std::nullopt;
        prev = select_physical_root(candidates(z), z, target);
        prev_z = z;
    };
    // leg 1: horizontal at height `scale`, from far right down to the top of the grid
    for (int k = 0; k <= steps; ++k) {
        step(Complex(top + 20.0 * scale * (1.0 - static_cast<double>(k) / steps), scale));
    }
    // leg 2: vertical, geometric descent to eps
    for (int k = 1; k <= steps; ++k) {
        step(Complex(top, scale * std::pow(eps / scale, static_cast<double>(k) / steps)));
    }

    std::vector<Complex> out(grid.size());
    for (std::size_t k = grid.size(); k-- > 0;) {
        try {
            step(Complex(grid[k], eps));
        } catch (const BranchError& e) {
            throw BranchError(std::string(e.what()) + " [at lambda = " + std::to_string(grid[k]) + "]");
        }
        out[k] = *prev;
    }
    return out;
}

/// Master equation of the doubly correlated Wishart ensemble:
/// z = r M N_A(r M) N_C(M).
inline Complex master_equation_z(Complex m, double r, const TransformEvaluator& n_a, const TransformEvaluator& n_c) {
    return r * m * n_a(r * m) * n_c(m);
}

}  // namespace rmt
