#pragma once

// Theoretical spectra: Marchenko-Pastur, the SVD null benchmark for whitened
// cross-correlations, MP^2 for unwhitened ones, the VARMA(1,1) Wishart law,
// and finite-T autocovariance matrices.

#include "rmt/arma.hpp"
#include "rmt/core.hpp"
#include "rmt/frv.hpp"
#include "rmt/poly.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <array>
#include <optional>
#include <utility>

namespace rmt {

// ---------------------------------------------------------------- Marchenko-Pastur

struct MpParams {
    double r = 0.5;      // N / T
    double scale = 1.0;  // variance sigma^2 of the entries

    void validate() const {
        if (!(r > 0.0) || !std::isfinite(r)) throw InputError("MP ratio r must be positive");
        if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("MP scale must be positive");
    }
};

/// (lambda_-, lambda_+) = ((1 - sqrt r)^2, (1 + sqrt r)^2).
inline std::pair<double, double> mp_edges(double r) {
    if (!(r > 0.0)) throw InputError("mp_edges: r must be positive");
    const double s = std::sqrt(r);
    return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

/// Continuous MP density at lambda; the atom at 0 for r > 1 is not included.
inline double mp_density(double lambda, double r, double scale = 1.0) {
    MpParams{r, scale}.validate();
    const double x = lambda / scale;
    const auto [lo, hi] = mp_edges(r);
    if (x <= 0.0 || x < lo || x > hi) return 0.0;
    return std::sqrt(std::max(0.0, (hi - x) * (x - lo))) / (2.0 * kPi * r * x) / scale;
}

/// Physical root of r z G^2 - (z + r - 1) G + 1 = 0 (unit scale), written with
/// principal square roots so the cut sits exactly on [lambda_-, lambda_+].
inline Complex mp_green(Complex z, double r, double scale = 1.0) {
    MpParams{r, scale}.validate();
    const Complex x = z / scale;
    const auto [lo, hi] = mp_edges(r);
    const Complex root = std::sqrt(x - lo) * std::sqrt(x - hi);
    return (x + r - 1.0 - root) / (2.0 * r * x) / scale;
}

inline SpectralDensity mp_spectral_density(double r, const std::vector<double>& grid, double scale = 1.0) {
    require_ascending_grid(grid);
    SpectralDensity out;
    out.lambdas = grid;
    out.rho.reserve(grid.size());
    for (double x : grid) out.rho.push_back(mp_density(x, r, scale));
    if (r > 1.0) out.atoms.push_back({0.0, 1.0 - 1.0 / r});
    return out;
}

inline std::vector<double> mp_auto_grid(double r, double scale, std::size_t points) {
    return linear_grid(0.0, 1.05 * scale * mp_edges(r).second, points);
}

// ---------------------------------------------------------------- SVD benchmark

struct SvdBenchParams {
    double n = 0.25;  // N / T, inputs
    double m = 0.25;  // M / T, outputs

    static SvdBenchParams from_dims(std::size_t n_in, std::size_t m_out, std::size_t t) {
        return {static_cast<double>(n_in) / static_cast<double>(t), static_cast<double>(m_out) / static_cast<double>(t)};
    }

    void validate() const {
        if (!(n > 0.0 && n < 1.0) || !(m > 0.0 && m < 1.0)) {
            throw InputError("SVD benchmark needs 0 < n, m < 1 (got n = " + std::to_string(n) +
                             ", m = " + std::to_string(m) + ")");
        }
    }
};

/// Roots s_- <= s_+ of the band in the squared singular value:
/// n + m - 2nm -+ 2 sqrt(nm(1-n)(1-m)).
inline std::pair<double, double> svd_bench_roots(const SvdBenchParams& p) {
    p.validate();
    const double c = p.n + p.m - 2.0 * p.n * p.m;
    const double d = 2.0 * std::sqrt(p.n * p.m * (1.0 - p.n) * (1.0 - p.m));
    return {std::max(0.0, c - d), c + d};
}

/// Largest point of the benchmark support: sqrt(s_+), or 1 when the atom at
/// s = 1 is present.
inline double svd_bench_upper_edge(const SvdBenchParams& p) {
    const double edge = std::sqrt(svd_bench_roots(p).second);
    return p.n + p.m > 1.0 ? 1.0 : edge;
}

/// Continuous part in the singular-value variable,
/// sqrt((s^2 - s_-)(s_+ - s^2)) / (pi s (1 - s^2)), zero outside the band.
inline double svd_bench_continuous(double s, const SvdBenchParams& p) {
    const auto [lo, hi] = svd_bench_roots(p);
    if (s < 0.0 || s >= 1.0) return 0.0;
    const double x = s * s;
    if (s == 0.0) {
        // n == m: the band touches zero and the density has a finite limit there
        return lo <= 1e-14 ? std::sqrt(hi) / kPi : 0.0;
    }
    const double rad = (x - lo) * (hi - x);
    if (rad <= 0.0) return 0.0;
    return std::sqrt(rad) / (kPi * s * (1.0 - x));
}

/// Law of the singular values of G = Y_hat X_hat^T for independent whitened
/// panels, normalized over T: atoms (0, 1 - min(n, m)) and, when n + m > 1,
/// (1, n + m - 1). Grid in the singular-value variable.
inline SpectralDensity svd_benchmark_density(const SvdBenchParams& p, const std::vector<double>& grid) {
    p.validate();
    require_ascending_grid(grid);
    SpectralDensity out;
    out.lambdas = grid;
    out.rho.reserve(grid.size());
    for (double s : grid) out.rho.push_back(svd_bench_continuous(s, p));
    out.atoms.push_back({0.0, 1.0 - std::min(p.n, p.m)});
    if (p.n + p.m > 1.0) out.atoms.push_back({1.0, p.n + p.m - 1.0});
    return out;
}

/// M-transform of D = D_X D_Y in the squared variable: root of
/// M^2 (z - 1) + M (z - m - n) - mn = 0 with G = (1 + M)/z on the physical branch.
inline Complex svd_bench_m_transform(Complex z, const SvdBenchParams& p) {
    p.validate();
    const Complex a = z - 1.0, b = z - p.m - p.n, c = -p.m * p.n;
    const Complex disc = std::sqrt(b * b - 4.0 * a * c);
    const std::array<Complex, 2> ms{(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)};
    const std::array<Complex, 2> gs{(1.0 + ms[0]) / z, (1.0 + ms[1]) / z};
    const Complex g = select_physical_root(gs, z);
    return z * g - 1.0;
}

/// Removes the atom at zero and renormalizes: the law of the nonzero singular
/// values, i.e. what min(M, N) empirical singular values sample.
inline SpectralDensity drop_zero_atom(const SpectralDensity& d) {
    SpectralDensity out = d;
    out.atoms.clear();
    double removed = 0.0;
    for (const auto& a : d.atoms) {
        if (std::abs(a.position) <= 1e-12) {
            removed += a.weight;
        } else {
            out.atoms.push_back(a);
        }
    }
    const double keep = 1.0 - removed;
    if (!(keep > 0.0)) throw InputError("drop_zero_atom: all mass sits at zero");
    for (auto& v : out.rho) v /= keep;
    for (auto& a : out.atoms) a.weight /= keep;
    return out;
}

inline SpectralDensity svd_singular_value_law(const SvdBenchParams& p, const std::vector<double>& grid) {
    return drop_zero_atom(svd_benchmark_density(p, grid));
}

// ---------------------------------------------------------------- MP^2

/// Singular-value law of G = Y X^T / T for independent unwhitened panels with
/// unit-variance rows. Each T x T factor X^T X / T has N(w) = (n + w)(1 + w) / w,
/// so the product law gives z M = (1 + M)(n + M)(m + M) for D = (X^T X)(Y^T Y) / T^2.
/// Solved at z = s^2 + i eps and mapped with rho_s(s) = 2 s rho_D(s^2).
/// Atom (0, 1 - min(n, m)).
inline SpectralDensity mp2_density(const SvdBenchParams& p, const std::vector<double>& grid,
                                   std::optional<double> eps_opt = std::nullopt) {
    p.validate();
    require_ascending_grid(grid);
    if (grid.front() < 0.0) throw InputError("mp2_density: singular-value grid must be nonnegative");
    std::vector<double> sq(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) sq[k] = grid[k] * grid[k];
    const double eps = eps_opt ? *eps_opt : 1e-12 * std::max(1.0, sq.back());

    // (1 + M)(n + M)(m + M) - z M, ascending in M
    const Polynomial base = Polynomial::linear(1.0, 1.0) * Polynomial::linear(p.n, 1.0) * Polynomial::linear(p.m, 1.0);
    auto candidates = [&](Complex z) {
        const Polynomial poly = base - Polynomial::linear(0.0, z);
        auto roots = poly_roots(poly);
        for (auto& mval : roots) mval = (1.0 + mval) / z;
        return roots;
    };

    // the s = 0 node sits on the zero atom; track the branch on the positive part
    const std::size_t first = sq.front() > 0.0 ? 0 : 1;
    const std::vector<double> positive(sq.begin() + static_cast<std::ptrdiff_t>(first), sq.end());
    const auto greens = sweep_green(candidates, positive, eps);

    const double zero_weight = 1.0 - std::min(p.n, p.m);
    SpectralDensity out;
    out.lambdas = grid;
    out.rho.assign(grid.size(), 0.0);
    for (std::size_t k = 0; k < positive.size(); ++k) {
        const double x = positive[k];
        double rho_d = -greens[k].imag() / kPi - zero_weight * eps / (kPi * (x * x + eps * eps));
        if (rho_d < 0.0) rho_d = 0.0;
        out.rho[k + first] = 2.0 * grid[k + first] * rho_d;
    }
    // n = m < 1: rho_D ~ sqrt(n / (1 - n)) / (pi sqrt x) at the bottom, so rho_s(0) is finite
    if (first == 1 && p.n == p.m) out.rho[0] = 2.0 * std::sqrt(p.n / (1.0 - p.n)) / kPi;
    out.atoms.push_back({0.0, zero_weight});
    return out;
}

inline SpectralDensity mp2_singular_value_law(const SvdBenchParams& p, const std::vector<double>& grid) {
    return drop_zero_atom(mp2_density(p, grid));
}

/// Upper bound on the MP^2 support, (1 + sqrt n)(1 + sqrt m).
inline double mp2_support_bound(const SvdBenchParams& p) {
    return (1.0 + std::sqrt(p.n)) * (1.0 + std::sqrt(p.m));
}

// ---------------------------------------------------------------- autocovariances

/// Toeplitz A_ab = sum_alpha a_alpha a_{alpha + |a - b|}.
inline Matrix vma_autocov(std::span<const double> a, std::size_t t) {
    if (t < 1) throw InputError("vma_autocov: T must be at least 1");
    std::vector<double> band(a.size(), 0.0);
    for (std::size_t lag = 0; lag < a.size(); ++lag) {
        for (std::size_t k = 0; k + lag < a.size(); ++k) band[lag] += a[k] * a[k + lag];
    }
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t lag = 0; lag < band.size() && i + lag < t; ++lag) {
            const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(i + lag);
            out(r, c) = band[lag];
            out(c, r) = band[lag];
        }
    }
    return out;
}

inline Matrix vma_autocov(std::initializer_list<double> a, std::size_t t) {
    return vma_autocov(std::span<const double>(a.begin(), a.size()), t);
}

/// VMA coefficients whose autocovariance inverts the VAR(q) one:
/// a'_0 = 1/a_0, a'_beta = -b_beta / a_0.
inline std::vector<double> var_mapped_coefficients(std::span<const double> b, double a0) {
    std::vector<double> mapped{1.0 / a0};
    for (double v : b) mapped.push_back(-v / a0);
    return mapped;
}

/// Autocovariance of the VAR(q) process Y_a - sum b_beta Y_{a-beta} = a0 eps_a
/// as the inverse of the mapped VMA Toeplitz matrix.
inline Matrix var_autocov(std::span<const double> b, double a0, std::size_t t) {
    if (!(a0 > 0.0)) throw InputError("var_autocov: a0 must be positive");
    ArmaParams{{a0}, {b.begin(), b.end()}}.require_valid();
    const auto mapped = var_mapped_coefficients(b, a0);
    const Matrix toeplitz = vma_autocov(mapped, t);
    Eigen::LLT<Matrix> llt(toeplitz);
    if (llt.info() != Eigen::Success) throw NumericError("var_autocov: mapped Toeplitz matrix is singular");
    return llt.solve(Matrix::Identity(toeplitz.rows(), toeplitz.cols()));
}

/// A5 = (A4)^{-1} A1 with A4 the VMA Toeplitz of (1, -b_1, ..., -b_q1) and A1
/// that of the MA side. Not symmetric, but similar to a positive-definite matrix.
inline Matrix varma_autocov(const ArmaParams& params, std::size_t t) {
    params.require_valid();
    const Matrix a1 = vma_autocov(params.a, t);
    if (params.b.empty()) return a1;
    const auto a4_coeffs = var_mapped_coefficients(params.b, 1.0);
    const Matrix a4 = vma_autocov(a4_coeffs, t);
    Eigen::LLT<Matrix> llt(a4);
    if (llt.info() != Eigen::Success) throw NumericError("varma_autocov: AR Toeplitz matrix is singular");
    return llt.solve(a1);
}

// ---------------------------------------------------------------- VARMA(1,1)

struct Varma11Params {
    double a0 = 1.0, a1 = 0.0, b1 = 0.0;

    ArmaParams arma() const { return ArmaParams::arma11(a0, a1, b1); }

    void validate() const {
        if (!(a0 > 0.0) || !std::isfinite(a0)) throw InputError("VARMA(1,1) needs a0 > 0");
        if (!std::isfinite(a1)) throw InputError("VARMA(1,1) a1 must be finite");
        if (!(std::abs(b1) < 1.0)) throw InputError("VARMA(1,1) needs |b1| < 1 for stationarity");
    }

    /// f at omega = 0 and omega = pi, the endpoints of its range.
    std::pair<double, double> symbol_range() const {
        const double z1 = (a0 + a1) * (a0 + a1) / ((1.0 - b1) * (1.0 - b1));
        const double z2 = (a0 - a1) * (a0 - a1) / ((1.0 + b1) * (1.0 + b1));
        return {std::min(z1, z2), std::max(z1, z2)};
    }

    /// (1/2pi) int f = (a0^2 + a1^2 + 2 a0 a1 b1) / (1 - b1^2).
    double first_moment() const { return (a0 * a0 + a1 * a1 + 2.0 * a0 * a1 * b1) / (1.0 - b1 * b1); }

    bool is_white() const { return std::abs(a1) <= 1e-9 * a0 && std::abs(b1) <= 1e-9; }
};

/// Closed-form M-transform of the VARMA(1,1) autocovariance,
///   M(z) = (-a0 a1 + z K / S(z)) / (a0 a1 + b1 z),
///   K = a0 a1 + (a0^2 + a1^2) b1 + a0 a1 b1^2,
///   S(z) = (1 - b1^2) sqrt(z - z1) sqrt(z - z2),
/// principal square roots, z1 = f(0), z2 = f(pi). The product of principal
/// roots has its cut exactly on [min f, max f] and behaves like z at infinity.
inline Complex varma11_m_transform(Complex z, const Varma11Params& p) {
    p.validate();
    const auto [lo, hi] = p.symbol_range();
    if (z.imag() == 0.0 && z.real() >= lo && z.real() <= hi) {
        throw InputError("varma11_m_transform: z lies on the branch cut");
    }
    if (p.a1 == 0.0 && p.b1 == 0.0) return p.a0 * p.a0 / (z - p.a0 * p.a0);
    const double ab = p.a0 * p.a1;
    const double k = ab + (p.a0 * p.a0 + p.a1 * p.a1) * p.b1 + ab * p.b1 * p.b1;
    const double z1 = (p.a0 + p.a1) * (p.a0 + p.a1) / ((1.0 - p.b1) * (1.0 - p.b1));
    const double z2 = (p.a0 - p.a1) * (p.a0 - p.a1) / ((1.0 + p.b1) * (1.0 + p.b1));
    const Complex s = (1.0 - p.b1 * p.b1) * std::sqrt(z - z1) * std::sqrt(z - z2);
    return (-ab + z * k / s) / (ab + p.b1 * z);
}

/// Polynomial in M (degree <= 6) obtained by squaring away the root in
/// r M = M_A(z / (r (1 + M))). With w = r M and p = r (1 + M):
///   [w (a0 a1 p + b1 z) + a0 a1 p]^2 ((1-b1)^2 z - (a0+a1)^2 p) ((1+b1)^2 z - (a0-a1)^2 p)
///     - z^2 K^2 p^2 = 0.
/// For a1 = b1 = 0 this vanishes identically; the scaled-MP quadratic
/// M z - a0^2 r M (1 + M) - a0^2 (1 + M) = 0 is returned instead.
inline Polynomial varma11_polynomial(Complex z, const Varma11Params& p, double r) {
    const double a2 = p.a0 * p.a0;
    if (p.is_white()) {
        return Polynomial{Complex(-a2), z - a2 * r - a2, Complex(-a2 * r)};
    }
    const double ab = p.a0 * p.a1;
    const double k = ab + (a2 + p.a1 * p.a1) * p.b1 + ab * p.b1 * p.b1;
    const Polynomial w = Polynomial::linear(0.0, r);
    const Polynomial pp = Polynomial::linear(r, r);
    const Polynomial bracket = w * (Complex(ab) * pp + Complex(p.b1) * z) + Complex(ab) * pp;
    const Polynomial f1 = Polynomial{(1.0 - p.b1) * (1.0 - p.b1) * z} - Complex((p.a0 + p.a1) * (p.a0 + p.a1)) * pp;
    const Polynomial f2 = Polynomial{(1.0 + p.b1) * (1.0 + p.b1) * z} - Complex((p.a0 - p.a1) * (p.a0 - p.a1)) * pp;
    return bracket * bracket * f1 * f2 - (z * z * k * k) * (pp * pp);
}

/// Eigenvalue density of the Pearson estimator of N independent VARMA(1,1)
/// series, r = N / T < 1. The default eps is tiny (1e-12 x scale) so the
/// continuous part is not visibly broadened.
inline SpectralDensity varma11_density(const std::vector<double>& grid, const Varma11Params& p, double r,
                                       std::optional<double> eps_opt = std::nullopt) {
    p.validate();
    if (!(r > 0.0 && r < 1.0)) throw InputError("varma11_density needs 0 < r < 1");
    require_ascending_grid(grid);
    const double eps = eps_opt ? *eps_opt : 1e-12 * std::max(1.0, std::abs(grid.back()));

    auto candidates = [&](Complex z) {
        const auto roots = poly_roots(varma11_polynomial(z, p, r).trimmed(0.0));
        std::vector<Complex> keep;
        if (p.is_white()) {
            for (const auto& mval : roots) keep.push_back((1.0 + mval) / z);
            return keep;
        }
        auto residual = [&](Complex mval) -> Complex {
            const Complex u = z / (r * (1.0 + mval));
            if (u.imag() == 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
            return r * mval - varma11_m_transform(u, p);
        };
        // squaring admits roots of the conjugate-branch equation; keep true solutions
        double best_res = std::numeric_limits<double>::infinity();
        Complex best_root(0.0);
        for (auto mval : roots) {
            // the sextic's roots carry ~1e-9 relative error, enough to put Im G on the
            // wrong side of zero just below the support; polish on the unsquared equation
            Complex h = residual(mval);
            for (int it = 0; it < 8 && std::isfinite(std::abs(h)); ++it) {
                const Complex step = 1e-7 * (1.0 + std::abs(mval));
                const Complex dh = (residual(mval + step) - residual(mval - step)) / (2.0 * step);
                if (!std::isfinite(std::abs(dh)) || dh == Complex(0.0)) break;
                const Complex next = mval - h / dh;
                const Complex hn = residual(next);
                if (!(std::abs(hn) < std::abs(h))) break;
                mval = next;
                h = hn;
            }
            const double res = std::abs(h);
            if (!std::isfinite(res)) continue;
            if (res <= 1e-6 * (1.0 + std::abs(mval))) keep.push_back((1.0 + mval) / z);
            if (res < best_res) {
                best_res = res;
                best_root = mval;
            }
        }
        if (keep.empty() && std::isfinite(best_res)) keep.push_back((1.0 + best_root) / z);
        return keep;
    };

    std::size_t first = 0;
    while (first < grid.size() && grid[first] <= 0.0) ++first;
    SpectralDensity out;
    out.lambdas = grid;
    out.rho.assign(grid.size(), 0.0);
    if (grid.size() - first < 2) return out;
    const std::vector<double> positive(grid.begin() + static_cast<std::ptrdiff_t>(first), grid.end());
    const auto greens = sweep_green(candidates, positive, eps);
    for (std::size_t k = 0; k < positive.size(); ++k) {
        const double v = -greens[k].imag() / kPi;
        out.rho[k + first] = v > 0.0 ? v : 0.0;
    }
    return out;
}

/// Grid covering the VARMA(1,1) support: [0, 1.05 max f (1 + sqrt r)^2].
inline std::vector<double> varma11_auto_grid(const Varma11Params& p, double r, std::size_t points) {
    p.validate();
    const double top = p.symbol_range().second * (1.0 + std::sqrt(r)) * (1.0 + std::sqrt(r)) * 1.05;
    return linear_grid(0.0, top, points);
}

}  // namespace rmt
