#pragma once

// ARMA(1,1) parameter estimation from an eigenvalue spectrum, and flagging of
// singular values above the SVD null benchmark.

#include "rmt/benchmarks.hpp"
#include "rmt/estimators.hpp"
#include "rmt/montecarlo.hpp"

#include <limits>
#include <numeric>

namespace rmt {

/// Cramer-von Mises distance int (F_n - F)^2 dF. Between breakpoints F_n is a
/// constant c and the continuous part contributes [(F - c)^3 / 3] over the
/// range of F exactly; an atom of weight w at p contributes w times the mean of
/// the squared differences on its left and right sides.
inline double spectral_distance(const EmpiricalSpectrum& empirical, const SpectralDensity& theory,
                                double mass_tolerance = kMassTolerance) {
    if (empirical.values.empty()) throw InputError("spectral_distance: empty spectrum");
    const DensityCdf cdf(theory, mass_tolerance);
    std::vector<double> v = empirical.values;
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());

    std::vector<double> points = v;
    for (const auto& a : cdf.atoms()) points.push_back(a.position);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    auto sweep = [](double f_from, double f_to, double c) {
        const double hi = f_to - c, lo = f_from - c;
        return (hi * hi * hi - lo * lo * lo) / 3.0;
    };
    double total = 0.0;
    double f_prev = 0.0;  // F just right of the previous breakpoint
    double c_prev = 0.0;  // F_n on the open interval after it
    for (double x : points) {
        const double f_left = cdf.left(x);
        const double f_right = cdf.right(x);
        total += sweep(f_prev, f_left, c_prev);
        const double c_here = static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) / n;
        const double jump = f_right - f_left;
        if (jump > 0.0) {
            const double dl = c_prev - f_left, dr = c_here - f_right;
            total += jump * 0.5 * (dl * dl + dr * dr);
        }
        f_prev = f_right;
        c_prev = c_here;
    }
    total += sweep(f_prev, 1.0, c_prev);
    return std::max(0.0, total);
}

// ---------------------------------------------------------------- Nelder-Mead

struct NelderMeadOptions {
    std::size_t max_evals = 300;
    double f_tol = 1e-10;  // absolute spread of simplex values
    double x_tol = 1e-5;   // simplex diameter
    std::vector<double> initial_step;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t evals = 0;
    bool converged = false;
};

/// Standard simplex descent (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Infinite objective values are allowed and simply lose.
template <typename Fn>
NelderMeadResult nelder_mead(Fn&& f, const std::vector<double>& x0, const NelderMeadOptions& opt) {
    const std::size_t dim = x0.size();
    std::vector<std::vector<double>> pts(dim + 1, x0);
    std::vector<double> vals(dim + 1);
    std::size_t evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };
    for (std::size_t i = 0; i < dim; ++i) {
        const double step = i < opt.initial_step.size() ? opt.initial_step[i] : 0.1;
        pts[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= dim; ++i) vals[i] = eval(pts[i]);

    std::vector<std::size_t> order(dim + 1);
    bool converged = false;
    while (evals < opt.max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[dim - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= dim; ++i) {
            for (std::size_t k = 0; k < dim; ++k) diameter = std::max(diameter, std::abs(pts[i][k] - pts[best][k]));
        }
        if (std::isfinite(vals[worst]) && vals[worst] - vals[best] <= opt.f_tol && diameter <= opt.x_tol) {
            converged = true;
            break;
        }

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[i][k] / static_cast<double>(dim);
        }
        auto along = [&](double t) {
            std::vector<double> x(dim);
            for (std::size_t k = 0; k < dim; ++k) x[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
            return x;
        };

        const auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) continue;
            for (std::size_t k = 0; k < dim; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    return {pts[best], vals[best], evals, converged};
}

// ---------------------------------------------------------------- VARMA(1,1) fit

/// The eigenvalue law depends on (a0, a1, b1) only through the distribution
/// of f(omega), which is unchanged by (a1, b1) -> (-a1, -b1) and by swapping
/// a0 and a1. Maps to the representative with a0 >= |a1| and b1 >= 0
/// (a1 >= 0 when b1 = 0).
inline Varma11Params canonicalize(Varma11Params p) {
    if (p.a0 < 0.0) {
        p.a0 = -p.a0;
        p.a1 = -p.a1;
    }
    if (std::abs(p.a1) > p.a0) {
        const double a0 = std::abs(p.a1);
        const double a1 = p.a1 > 0.0 ? p.a0 : -p.a0;
        p.a0 = a0;
        p.a1 = a1;
    }
    if (p.b1 < 0.0 || (p.b1 == 0.0 && p.a1 < 0.0)) {
        p.a1 = -p.a1;
        p.b1 = -p.b1;
    }
    return p;
}

struct FitOptions {
    std::size_t grid_points = 1024;
    std::size_t multistart = 27;
    std::size_t max_evals_per_start = 300;
    /// The fit grid is coarse, so the quadrature mass may be off by more than
    /// the general tolerance; the CDF renormalizes.
    double mass_tolerance = 1e-2;
    std::optional<double> epsilon;
};

struct StartRecord {
    Varma11Params init;
    Varma11Params final_params;
    double objective = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
};

struct FitResult {
    Varma11Params params;
    double objective = std::numeric_limits<double>::infinity();
    double ks = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<StartRecord> multistart_trace;
};

/// 3 x 3 x 3 grid over a0 in {0.5, 1, 2}, a1 and b1 in {-0.5, 0, 0.5}.
inline std::vector<Varma11Params> default_starts() {
    std::vector<Varma11Params> out;
    for (double a0 : {0.5, 1.0, 2.0}) {
        for (double a1 : {-0.5, 0.0, 0.5}) {
            for (double b1 : {-0.5, 0.0, 0.5}) out.push_back({a0, a1, b1});
        }
    }
    return out;
}

/// Evenly spaced subset of the default grid.
inline std::vector<Varma11Params> select_starts(std::size_t count) {
    const auto all = default_starts();
    if (count == 0) throw InputError("fit needs at least one start");
    if (count >= all.size()) return all;
    std::vector<Varma11Params> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(all[(i * all.size() + all.size() / 2) / count % all.size()]);
    return out;
}

inline constexpr double kMaxAbsB1 = 0.99;

inline Varma11Params params_from_search(const std::vector<double>& x) {
    return {std::exp(x[0]), x[1], kMaxAbsB1 * std::tanh(x[2])};
}

inline std::vector<double> search_from_params(const Varma11Params& p) {
    return {std::log(p.a0), p.a1, std::atanh(std::clamp(p.b1 / kMaxAbsB1, -0.999999, 0.999999))};
}

inline SpectralDensity fit_model_density(const Varma11Params& p, double r, const FitOptions& opt) {
    return varma11_density(varma11_auto_grid(p, r, opt.grid_points), p, r, opt.epsilon);
}

/// Minimizes spectral_distance(empirical, varma11_density(theta)) over
/// a0 > 0, a1, |b1| <= 0.99 by Nelder-Mead in (log a0, a1, atanh(b1 / 0.99))
/// from each start; the best result is returned in canonical form.
inline FitResult fit_varma11(const EmpiricalSpectrum& empirical, double r, const FitOptions& opt = {}) {
    if (empirical.values.empty()) throw InputError("fit_varma11: empty spectrum");
    if (!(r > 0.0 && r < 1.0)) throw InputError("fit_varma11: r must lie in (0, 1)");
    const double top = *std::max_element(empirical.values.begin(), empirical.values.end());
    for (double v : empirical.values) {
        if (!std::isfinite(v) || v < -1e-10 * std::max(1.0, top)) {
            throw InputError("fit_varma11: eigenvalues must be finite and nonnegative");
        }
    }

    auto objective = [&](const std::vector<double>& x) {
        try {
            const auto p = params_from_search(x);
            return spectral_distance(empirical, fit_model_density(p, r, opt), opt.mass_tolerance);
        } catch (const InputError&) {
            return std::numeric_limits<double>::infinity();
        } catch (const NumericError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const auto starts = select_starts(opt.multistart);
    std::vector<NelderMeadResult> runs(starts.size());
    NelderMeadOptions nm;
    nm.max_evals = opt.max_evals_per_start;
    nm.initial_step = {0.25, 0.2, 0.4};
    parallel_for(starts.size(), [&](std::size_t i) { runs[i] = nelder_mead(objective, search_from_params(starts[i]), nm); });

    FitResult out;
    std::size_t best = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        out.evaluations += runs[i].evals;
        out.multistart_trace.push_back({starts[i], canonicalize(params_from_search(runs[i].x)), runs[i].f, runs[i].evals});
        if (std::isfinite(runs[i].f) && (best == runs.size() || runs[i].f < runs[best].f)) best = i;
    }
    if (best == runs.size()) {
        throw NumericError("fit_varma11: every start failed (density evaluation or branch selection); r = " +
                           std::to_string(r) + ", " + std::to_string(empirical.size()) + " eigenvalues");
    }
    out.params = canonicalize(params_from_search(runs[best].x));
    out.objective = runs[best].f;
    out.converged = runs[best].converged;
    out.ks = ks_distance(empirical.values, fit_model_density(out.params, r, opt), opt.mass_tolerance);
    return out;
}

// ---------------------------------------------------------------- significance

struct FlaggedValue {
    std::size_t rank = 0;  // 1-based position in the descending spectrum
    double value = 0.0;
    double edge = 0.0;
    double excess = 0.0;  // value - edge
};

struct SignificanceReport {
    std::vector<FlaggedValue> flagged;
    double edge = 0.0;
    double margin = 0.0;
    std::string threshold_policy;
};

/// Flags every singular value above the benchmark upper edge plus `margin`.
inline SignificanceReport flag_significant(const EmpiricalSpectrum& svals, const SvdBenchParams& params,
                                           double margin) {
    if (!(margin >= 0.0)) throw InputError("flag_significant: margin must be nonnegative");
    SignificanceReport out;
    out.edge = svd_bench_upper_edge(params);
    out.margin = margin;
    std::ostringstream policy;
    policy << "s > edge + margin with edge = " << out.edge << " (n = " << params.n << ", m = " << params.m
           << ") and margin = " << margin;
    out.threshold_policy = policy.str();
    std::vector<double> sorted = svals.values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k] > out.edge + margin) out.flagged.push_back({k + 1, sorted[k], out.edge, sorted[k] - out.edge});
    }
    return out;
}

/// Singular values of Y_hat X_hat^T for one pair of independent white panels.
inline std::vector<double> null_singular_values(std::size_t n_in, std::size_t m_out, std::size_t t, Seed seed) {
    const auto x = standardize(gen_white_panel(n_in, t, {row_seed(seed, 0)}));
    const auto y = standardize(gen_white_panel(m_out, t, {row_seed(seed, 1)}));
    const auto g = cross_matrix(whiten(y), whiten(x));
    return singular_spectrum(g).values;
}

/// 2 x the mean spacing of the top decile (at least 3 values) of one null replica.
inline double default_margin(std::size_t n_in, std::size_t m_out, std::size_t t, Seed seed) {
    const auto s = null_singular_values(n_in, m_out, t, seed);
    if (s.size() < 2) return 0.0;
    const std::size_t k = std::min(s.size(), std::max<std::size_t>(3, (s.size() + 9) / 10));
    return 2.0 * (s.front() - s[k - 1]) / static_cast<double>(k - 1);
}

}  // namespace rmt
