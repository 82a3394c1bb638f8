#pragma once

// Seeded synthetic panels and empirical statistics (histograms, KS distance)
// used to check the analytic spectra.

#include "rmt/arma.hpp"
#include "rmt/core.hpp"
#include "rmt/estimators.hpp"
#include "rmt/panel.hpp"

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <thread>

namespace rmt {

struct Seed {
    std::uint64_t value = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent substream for row `row`; depends only on (seed, row).
inline std::uint64_t row_seed(Seed seed, std::uint64_t row) {
    return splitmix64(splitmix64(seed.value) ^ splitmix64(row + 0x632BE59BD9B4E019ULL));
}

/// Seed of the k-th replica derived from a base seed.
inline Seed replica_seed(Seed base, std::uint64_t k) { return {splitmix64(base.value + 0xA0761D6478BD642FULL * (k + 1))}; }

using Engine = std::mt19937_64;

// ---------------------------------------------------------------- threading

/// Worker cap shared by the data-parallel helpers; 0 means hardware concurrency.
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};
    return cap;
}

inline unsigned worker_count(std::size_t tasks) {
    unsigned cap = thread_cap().load();
    if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(cap, std::max<std::size_t>(tasks, 1)));
}

/// Runs fn(i) for i in [0, n). Results must not depend on scheduling; the
/// first exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- generators

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Seed seed) {
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    parallel_for(rows, [&](std::size_t i) {
        Engine eng(row_seed(seed, i));
        std::normal_distribution<double> normal;
        for (std::size_t j = 0; j < cols; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = normal(eng);
    });
    return out;
}

/// i.i.d. standard normal N x T panel.
inline TimePanel gen_white_panel(std::size_t n, std::size_t t, Seed seed) {
    if (n < 1 || t < 1) throw InputError("gen_white_panel: N and T must be at least 1");
    return make_panel(gaussian_matrix(n, t, seed));
}

/// One ARMA path Y_a = sum b_beta Y_{a-beta} + sum a_alpha eps_{a-alpha},
/// started from zeros and run for burn_in steps before recording.
inline std::vector<double> gen_arma_path(const ArmaParams& params, std::size_t t, std::size_t burn_in, Engine& eng) {
    const std::size_t q_ma = params.a.size() - 1;
    const std::size_t q_ar = params.b.size();
    const std::size_t total = burn_in + t;
    std::normal_distribution<double> normal;
    std::vector<double> eps(total + q_ma);
    for (auto& e : eps) e = normal(eng);
    std::vector<double> y(total, 0.0);
    for (std::size_t s = 0; s < total; ++s) {
        double v = 0.0;
        for (std::size_t k = 0; k <= q_ma; ++k) v += params.a[k] * eps[s + q_ma - k];
        for (std::size_t k = 1; k <= q_ar && k <= s; ++k) v += params.b[k - 1] * y[s - k];
        y[s] = v;
    }
    return {y.begin() + static_cast<std::ptrdiff_t>(burn_in), y.end()};
}

/// N independent ARMA paths sharing one parameter set; row i uses substream (seed, i).
inline TimePanel gen_varma_panel(std::size_t n, std::size_t t, const ArmaParams& params, std::size_t burn_in,
                                 Seed seed) {
    params.require_valid();
    if (n < 1 || t < 1) throw InputError("gen_varma_panel: N and T must be at least 1");
    Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
    parallel_for(n, [&](std::size_t i) {
        Engine eng(row_seed(seed, i));
        const auto path = gen_arma_path(params, t, burn_in, eng);
        for (std::size_t j = 0; j < t; ++j) values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = path[j];
    });
    return make_panel(std::move(values));
}

inline constexpr std::size_t kDefaultBurnIn = 1024;

/// Symmetric PSD square root via the eigendecomposition.
inline Matrix psd_sqrt(const Matrix& a, const char* name) {
    if (a.rows() != a.cols()) throw InputError(std::string(name) + " must be square");
    if (!a.isApprox(a.transpose(), 1e-12)) throw InputError(std::string(name) + " must be symmetric");
    const auto eig = sym_eig(a);
    const double tol = 1e-10 * std::max(1.0, eig.values.cwiseAbs().maxCoeff());
    Vector root(eig.values.size());
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        if (eig.values(k) < -tol) throw InputError(std::string(name) + " is not positive semidefinite");
        root(k) = std::sqrt(std::max(0.0, eig.values(k)));
    }
    return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

/// Y = C^{1/2} Y_tilde A^{1/2} with Y_tilde i.i.d. standard normal (N x T).
inline TimePanel gen_correlated_wishart_panel(const Matrix& c, const Matrix& a, Seed seed) {
    const Matrix c_root = psd_sqrt(c, "spatial covariance C");
    const Matrix a_root = psd_sqrt(a, "temporal covariance A");
    const Matrix noise = gaussian_matrix(static_cast<std::size_t>(c.rows()), static_cast<std::size_t>(a.rows()), seed);
    return make_panel(c_root * noise * a_root);
}

// ---------------------------------------------------------------- empirical statistics

struct HistogramSpec {
    std::size_t bin_count = 50;
    std::optional<std::pair<double, double>> range;  // automatic: [min, max] of the non-atom values
};

/// Normalized histogram. Values repeated (within 1e-12) become atoms; the
/// rest are binned. The grid holds bin centers plus the two outer edges, each
/// edge carrying its bin's height, so the trapezoid mass equals the binned
/// fraction exactly.
inline SpectralDensity empirical_density(std::span<const double> values, const HistogramSpec& spec = {}) {
    if (values.empty()) throw InputError("empirical_density: no values");
    if (spec.bin_count < 1) throw InputError("empirical_density: bin_count must be at least 1");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const auto total = static_cast<double>(v.size());

    SpectralDensity out;
    std::vector<double> rest;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i + 1;
        while (j < v.size() && v[j] - v[i] <= 1e-12 * std::max(1.0, std::abs(v[i]))) ++j;
        if (j - i >= 2) {
            out.atoms.push_back({v[i], static_cast<double>(j - i) / total});
        } else {
            rest.push_back(v[i]);
        }
        i = j;
    }
    if (rest.empty()) return out;

    double lo = rest.front(), hi = rest.back();
    if (spec.range) std::tie(lo, hi) = *spec.range;
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const std::size_t bins = spec.bin_count;
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> counts(bins, 0.0);
    for (double x : rest) {
        if (x < lo || x > hi) continue;
        auto k = static_cast<std::size_t>((x - lo) / width);
        if (k >= bins) k = bins - 1;
        counts[k] += 1.0;
    }
    out.lambdas.push_back(lo);
    for (std::size_t k = 0; k < bins; ++k) {
        out.lambdas.push_back(lo + (static_cast<double>(k) + 0.5) * width);
        out.rho.push_back(counts[k] / (total * width));
    }
    out.lambdas.push_back(hi);
    out.rho.insert(out.rho.begin(), out.rho.front());
    out.rho.push_back(out.rho.back());
    return out;
}

inline constexpr double kMassTolerance = 1e-3;

/// CDF of a SpectralDensity with the continuous part read as piecewise linear
/// (so the CDF is piecewise quadratic), normalized by the total mass.
class DensityCdf {
public:
    explicit DensityCdf(const SpectralDensity& d, double mass_tolerance = kMassTolerance) : d_(d) {
        if (d_.lambdas.size() != d_.rho.size()) throw InputError("density grid and values differ in length");
        cum_.assign(d_.lambdas.size(), 0.0);
        for (std::size_t k = 1; k < d_.lambdas.size(); ++k) {
            cum_[k] = cum_[k - 1] + 0.5 * (d_.rho[k] + d_.rho[k - 1]) * (d_.lambdas[k] - d_.lambdas[k - 1]);
        }
        total_ = (cum_.empty() ? 0.0 : cum_.back()) + d_.atom_mass();
        if (!(std::abs(total_ - 1.0) <= mass_tolerance)) {
            throw InputError("density is not normalized (total mass " + std::to_string(total_) + ")");
        }
        std::sort(d_.atoms.begin(), d_.atoms.end(), [](const Atom& a, const Atom& b) { return a.position < b.position; });
    }

    /// P(X < x)
    double left(double x) const { return (continuous(x) + atoms_below(x, false)) / total_; }
    /// P(X <= x)
    double right(double x) const { return (continuous(x) + atoms_below(x, true)) / total_; }

    const std::vector<Atom>& atoms() const { return d_.atoms; }

private:
    double continuous(double x) const {
        const auto& g = d_.lambdas;
        if (g.size() < 2 || x <= g.front()) return 0.0;
        if (x >= g.back()) return cum_.back();
        const auto k = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), x) - g.begin()) - 1;
        const double h = g[k + 1] - g[k];
        const double t = x - g[k];
        return cum_[k] + d_.rho[k] * t + (d_.rho[k + 1] - d_.rho[k]) * t * t / (2.0 * h);
    }

    double atoms_below(double x, bool inclusive) const {
        double s = 0.0;
        for (const auto& a : d_.atoms) {
            if (a.position < x || (inclusive && a.position == x)) s += a.weight;
        }
        return s;
    }

    SpectralDensity d_;
    std::vector<double> cum_;
    double total_ = 1.0;
};

/// sup_x |F_n(x) - F(x)|, evaluated on both sides of every sample point and atom.
inline double ks_distance(std::span<const double> values, const SpectralDensity& theory,
                          double mass_tolerance = kMassTolerance) {
    if (values.empty()) throw InputError("ks_distance: no values");
    const DensityCdf cdf(theory, mass_tolerance);
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());

    std::vector<double> points = v;
    for (const auto& a : cdf.atoms()) points.push_back(a.position);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    double d = 0.0;
    for (double x : points) {
        const auto below = static_cast<double>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
        const auto upto = static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin());
        d = std::max(d, std::abs(below / n - cdf.left(x)));
        d = std::max(d, std::abs(upto / n - cdf.right(x)));
    }
    return d;
}

}  // namespace rmt
