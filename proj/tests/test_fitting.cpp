#include "rmt/fitting.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rmt;

namespace {

EmpiricalSpectrum pearson_eigenvalues(const TimePanel& p) {
    return eigen_spectrum(pearson_cov(p));
}

FitOptions quick_fit() {
    FitOptions opt;
    opt.grid_points = 512;
    opt.multistart = 3;
    opt.max_evals_per_start = 150;
    return opt;
}

std::vector<double> sorted_symbol(const Varma11Params& p, int points) {
    std::vector<double> out;
    for (int k = 0; k < points; ++k) out.push_back(arma_spectral_function(p.arma(), 2 * kPi * k / points));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(SpectralDistance, AtomSampleMatchingTheoryIsZero) {
    SpectralDensity theory;
    theory.atoms = {{0.0, 0.5}, {1.0, 0.5}};
    const auto e = EmpiricalSpectrum::from_unsorted({0.0, 1.0}, SpectrumKind::singular_values);
    EXPECT_NEAR(spectral_distance(e, theory), 0.0, 1e-15);
    const auto off = EmpiricalSpectrum::from_unsorted({1.0, 1.0}, SpectrumKind::singular_values);
    EXPECT_GT(spectral_distance(off, theory), 0.1);
}

TEST(SpectralDistance, UniformStratifiedSampleHitsTheMinimum) {
    SpectralDensity theory;
    theory.lambdas = {0.0, 1.0};
    theory.rho = {1.0, 1.0};
    const int n = 200;
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back((k + 0.5) / n);
    // the smallest attainable value is 1 / (12 n^2)
    EXPECT_NEAR(spectral_distance(EmpiricalSpectrum::from_unsorted(v, SpectrumKind::eigenvalues), theory),
                1.0 / (12.0 * n * n), 1e-12);
}

TEST(SpectralDistance, SeparatesMatchedFromMismatchedMp) {
    const auto e = pearson_eigenvalues(standardize(gen_white_panel(512, 1024, {31})));
    const auto matched = mp_spectral_density(0.5, mp_auto_grid(0.5, 1.0, 2048));
    const auto wrong = mp_spectral_density(0.75, mp_auto_grid(0.75, 1.0, 2048));
    EXPECT_LT(5.0 * spectral_distance(e, matched), spectral_distance(e, wrong));
}

TEST(SpectralDistance, OrderInvariant) {
    std::vector<double> v{0.3, 1.2, 0.9, 2.0, 0.5, 1.7};
    const auto theory = mp_spectral_density(0.25, mp_auto_grid(0.25, 1.0, 1024));
    const double d = spectral_distance({v, SpectrumKind::eigenvalues}, theory);
    std::mt19937_64 eng(3);
    for (int k = 0; k < 5; ++k) {
        std::shuffle(v.begin(), v.end(), eng);
        EXPECT_EQ(spectral_distance({v, SpectrumKind::eigenvalues}, theory), d);
    }
}

TEST(NelderMead, Rosenbrock) {
    auto f = [](const std::vector<double>& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    NelderMeadOptions opt;
    opt.max_evals = 4000;
    opt.f_tol = 1e-14;
    opt.x_tol = 1e-8;
    const auto r = nelder_mead(f, {-1.2, 1.0}, opt);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-3);
    EXPECT_NEAR(r.x[1], 1.0, 1e-3);
    EXPECT_LE(r.evals, opt.max_evals);
}

TEST(NelderMead, InfiniteRegionsAreAvoided) {
    auto f = [](const std::vector<double>& x) {
        if (x[0] < 0.5) return std::numeric_limits<double>::infinity();
        return (x[0] - 1.0) * (x[0] - 1.0);
    };
    NelderMeadOptions opt;
    opt.initial_step = {0.3};
    const auto r = nelder_mead(f, {2.0}, opt);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
}

TEST(Canonicalize, PreservesTheSymbolDistribution) {
    std::mt19937_64 eng(8);
    std::uniform_real_distribution<double> u(-1.5, 1.5), ub(-0.95, 0.95);
    for (int k = 0; k < 100; ++k) {
        Varma11Params p{u(eng), u(eng), ub(eng)};
        if (std::abs(p.a0) < 0.05) p.a0 = 0.5;
        const auto c = canonicalize(p);
        EXPECT_GT(c.a0, 0.0);
        EXPECT_GE(c.a0, std::abs(c.a1));
        EXPECT_GE(c.b1, 0.0);
        const auto a = sorted_symbol(p, 512), b = sorted_symbol(c, 512);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * std::max(1.0, a[i]));
    }
    const auto c = canonicalize({1.0, -0.3, 0.0});
    EXPECT_EQ(c.a1, 0.3);
}

TEST(Starts, GridAndSubsets) {
    EXPECT_EQ(default_starts().size(), 27u);
    EXPECT_EQ(select_starts(3).size(), 3u);
    EXPECT_EQ(select_starts(100).size(), 27u);
    EXPECT_THROW(select_starts(0), InputError);
    const Varma11Params p{1.3, -0.2, 0.7};
    const auto back = params_from_search(search_from_params(p));
    EXPECT_NEAR(back.a0, p.a0, 1e-12);
    EXPECT_NEAR(back.a1, p.a1, 1e-12);
    EXPECT_NEAR(back.b1, p.b1, 1e-12);
}

TEST(FitVarma11, RecoversSimulatedParameters) {
    const Varma11Params truth{1.0, 0.3, 0.5};
    const auto panel = gen_varma_panel(256, 1024, truth.arma(), kDefaultBurnIn, {77});
    const auto e = pearson_eigenvalues(panel);
    const auto fit = fit_varma11(e, 0.25, quick_fit());
    EXPECT_NEAR(fit.params.a0, truth.a0, 0.08);
    EXPECT_NEAR(fit.params.a1, truth.a1, 0.1);
    EXPECT_NEAR(fit.params.b1, truth.b1, 0.1);
    EXPECT_LT(fit.ks, 0.05);
    EXPECT_EQ(fit.multistart_trace.size(), 3u);
}

TEST(FitVarma11, WhiteNoiseGivesNearlyWhiteParameters) {
    const auto e = pearson_eigenvalues(gen_white_panel(256, 1024, {5}));
    const auto fit = fit_varma11(e, 0.25, quick_fit());
    EXPECT_NEAR(fit.params.a0, 1.0, 0.05);
    EXPECT_LT(std::abs(fit.params.a1), 0.1);
    EXPECT_LT(std::abs(fit.params.b1), 0.15);
}

TEST(FitVarma11, ScaledNoiseRecoversScale) {
    auto p = gen_white_panel(128, 512, {6});
    p.values *= 2.0;
    const auto fit = fit_varma11(pearson_eigenvalues(p), 0.25, quick_fit());
    // only the variance f = a0^2 + a1^2 + ... is pinned down when a1, b1 ~ 0
    EXPECT_NEAR(fit.params.first_moment(), 4.0, 0.2);
    EXPECT_NEAR(fit.params.a0, 2.0, 0.15);
}

TEST(FitVarma11, InputErrors) {
    EXPECT_THROW(fit_varma11({}, 0.25), InputError);
    EXPECT_THROW(fit_varma11({{1.0, 2.0}, SpectrumKind::eigenvalues}, 1.5), InputError);
    EXPECT_THROW(fit_varma11({{1.0, -2.0}, SpectrumKind::eigenvalues}, 0.5), InputError);
}

TEST(Significance, Examples) {
    const SvdBenchParams p{0.25, 0.25};
    const auto s = EmpiricalSpectrum::from_unsorted({0.1, 0.95, 0.5}, SpectrumKind::singular_values);
    const auto r = flag_significant(s, p, 0.0);
    ASSERT_EQ(r.flagged.size(), 1u);
    EXPECT_EQ(r.flagged[0].rank, 1u);
    EXPECT_EQ(r.flagged[0].value, 0.95);
    EXPECT_NEAR(r.edge, std::sqrt(0.75), 1e-15);
    EXPECT_NEAR(r.flagged[0].excess, 0.95 - std::sqrt(0.75), 1e-15);
    EXPECT_TRUE(flag_significant(s, p, 0.1).flagged.empty());
    EXPECT_THROW(flag_significant(s, p, -0.1), InputError);
}

TEST(Significance, FlagCountDecreasesWithMargin) {
    const SvdBenchParams p = SvdBenchParams::from_dims(37, 15, 118);
    std::vector<double> v;
    for (int k = 0; k < 15; ++k) v.push_back(0.6 + 0.025 * k);
    const auto s = EmpiricalSpectrum::from_unsorted(v, SpectrumKind::singular_values);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double margin = 0.0; margin < 0.3; margin += 0.01) {
        const auto n = flag_significant(s, p, margin).flagged.size();
        EXPECT_LE(n, prev);
        prev = n;
    }
}

TEST(Significance, DefaultMarginIsSmallAndDeterministic) {
    const double m = default_margin(37, 15, 118, {4});
    EXPECT_GT(m, 0.0);
    EXPECT_LT(m, 0.2);
    EXPECT_EQ(m, default_margin(37, 15, 118, {4}));
    for (double s : null_singular_values(37, 15, 118, {4})) EXPECT_LE(s, 1.0 + 1e-10);
}
