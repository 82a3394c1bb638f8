#include "rmt/montecarlo.hpp"
#include "rmt/panel.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

using namespace rmt;

namespace {

TimePanel parse(const std::string& text, Orientation o = Orientation::columns_are_series) {
    std::istringstream in(text);
    return parse_csv(in, o);
}

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "rmt_panel_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(LoadCsv, ZerosThreeByFive) {
    const auto p = parse("a,b,c\n0,0,0\n0,0,0\n0,0,0\n0,0,0\n0,0,0\n");
    EXPECT_EQ(p.n_series(), 3u);
    EXPECT_EQ(p.n_obs(), 5u);
    EXPECT_EQ(p.labels, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_TRUE((p.values.array() == 0.0).all());
    EXPECT_TRUE(p.time_index.empty());
}

TEST(LoadCsv, NonNumericCellIsLocated) {
    try {
        parse("a,b\n1,2\n3,oops\n");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_EQ(e.col(), 2u);
        EXPECT_NE(std::string(e.what()).find("oops"), std::string::npos);
    }
}

TEST(LoadCsv, MissingCellRejected) {
    EXPECT_THROW(parse("a,b\n1,\n3,4\n"), ParseError);
}

TEST(LoadCsv, RaggedRowsRejected) {
    try {
        parse("a,b,c\n1,2,3\n4,5\n");
        FAIL() << "expected a ragged-matrix error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_NE(std::string(e.what()).find("ragged"), std::string::npos);
    }
}

TEST(LoadCsv, EmptyInputRejected) {
    EXPECT_THROW(parse(""), ParseError);
    EXPECT_THROW(parse("a,b\n"), ParseError);
}

TEST(LoadCsv, TimestampColumnDetected) {
    const auto p = parse("date,x,y\n2001-01,1,2\n2001-02,3,4\n2001-03,5,6\n");
    EXPECT_EQ(p.n_series(), 2u);
    EXPECT_EQ(p.n_obs(), 3u);
    EXPECT_EQ(p.time_index, (std::vector<std::string>{"2001-01", "2001-02", "2001-03"}));
    EXPECT_DOUBLE_EQ(p.values(1, 2), 6.0);
}

TEST(LoadCsv, RowsOrientation) {
    const auto p = parse("series,2001-01,2001-02\ngdp,1.5,2.5\ncpi,3,4\n", Orientation::rows_are_series);
    EXPECT_EQ(p.labels, (std::vector<std::string>{"gdp", "cpi"}));
    EXPECT_EQ(p.time_index.size(), 2u);
    EXPECT_DOUBLE_EQ(p.values(0, 1), 2.5);
    EXPECT_DOUBLE_EQ(p.values(1, 0), 3.0);
}

TEST(LoadCsv, MacroShapedFile) {
    const auto panel = gen_white_panel(52, 118, {11});
    const auto path = temp_file("macro.csv");
    save_csv(panel, path.string());
    const auto back = load_csv(path.string(), Orientation::columns_are_series);
    EXPECT_EQ(back.n_series(), 52u);
    EXPECT_EQ(back.n_obs(), 118u);
}

TEST(LoadCsv, MissingFileIsInputError) {
    EXPECT_THROW(load_csv("/nonexistent/panel.csv", Orientation::columns_are_series), InputError);
}

TEST(SaveCsv, RoundTripIsBitwise) {
    std::mt19937_64 eng(5);
    std::normal_distribution<double> normal;
    Matrix v(4, 9);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = normal(eng) * std::pow(10.0, static_cast<double>(j) - 4.0);
    }
    v(0, 0) = 5e-324;
    v(1, 1) = -0.0 + 1.0 / 3.0;
    TimePanel p = make_panel(v);
    for (int k = 0; k < 9; ++k) p.time_index.push_back("2010-0" + std::to_string(k + 1));
    for (auto o : {Orientation::columns_are_series, Orientation::rows_are_series}) {
        const auto path = temp_file("roundtrip.csv");
        save_csv(p, path.string(), o);
        EXPECT_EQ(load_csv(path.string(), o), p);
    }
}

TEST(Transform, LogFirstDifference) {
    const double e = std::numbers::e;
    const std::vector<double> x{1.0, e, e * e};
    const auto y = transform_series(x, {TransformKind::log_first_difference});
    ASSERT_EQ(y.size(), 2u);
    EXPECT_NEAR(y[0], 1.0, 1e-15);
    EXPECT_NEAR(y[1], 1.0, 1e-15);
}

TEST(Transform, LogSecondDifference) {
    const double e = std::numbers::e;
    const std::vector<double> x{1.0, e, std::pow(e, 3), std::pow(e, 6)};
    const auto y = transform_series(x, {TransformKind::log_second_difference});
    ASSERT_EQ(y.size(), 2u);
    EXPECT_NEAR(y[0], 1.0, 1e-14);
    EXPECT_NEAR(y[1], 1.0, 1e-14);
}

TEST(Transform, ConstantFirstDifferenceIsZero) {
    const std::vector<double> x(7, 3.25);
    const auto y = transform_series(x, {TransformKind::first_difference});
    ASSERT_EQ(y.size(), 6u);
    for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(Transform, NoneIsIdentity) {
    const std::vector<double> x{1.0, -2.0, 3.0};
    EXPECT_EQ(transform_series(x, {TransformKind::none}), x);
}

TEST(Transform, Errors) {
    EXPECT_THROW(transform_series(std::vector<double>{1.0, 0.0, 2.0}, {TransformKind::log_first_difference}), InputError);
    EXPECT_THROW(transform_series(std::vector<double>{1.0, 2.0}, {TransformKind::log_second_difference}), InputError);
    EXPECT_THROW(transform_series(std::vector<double>{1.0}, {TransformKind::first_difference}), InputError);
    EXPECT_THROW(parse_transform("cubic"), InputError);
}

TEST(Outliers, SingleSpikeReplacedByMedian) {
    const auto c = remove_outliers(std::vector<double>{0, 0, 0, 0, 100}, 6.0);
    EXPECT_EQ(c.values, (std::vector<double>{0, 0, 0, 0, 0}));
    EXPECT_EQ(c.replaced, (std::vector<std::size_t>{4}));
}

TEST(Outliers, CleanSeriesUnchanged) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0, 2.5};
    const auto c = remove_outliers(x);
    EXPECT_EQ(c.values, x);
    EXPECT_TRUE(c.replaced.empty());
}

TEST(Outliers, GaussianReplacementRateIsTiny) {
    const auto p = gen_white_panel(1, 10000, {3});
    const std::vector<double> x(p.values.row(0).begin(), p.values.row(0).end());
    const auto c = remove_outliers(x, 6.0);
    EXPECT_LT(static_cast<double>(c.replaced.size()) / 10000.0, 1e-3);
}

TEST(Outliers, NoOpWhenRangeWithinKIqr) {
    std::mt19937_64 eng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(40);
        for (auto& v : x) v = u(eng);
        std::vector<double> s = x;
        std::sort(s.begin(), s.end());
        const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
        const double k = (s.back() - s.front()) / iqr;
        const auto c = remove_outliers(x, k);
        EXPECT_EQ(c.values, x);
        EXPECT_TRUE(c.replaced.empty());
    }
}

TEST(Outliers, TooShortRejected) {
    EXPECT_THROW(remove_outliers(std::vector<double>{1, 2, 3}), InputError);
}

TEST(Standardize, Examples) {
    Matrix v(2, 2);
    v << -1, 1, 0, 2;
    const auto s = standardize(make_panel(v));
    EXPECT_NEAR(s.values(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(s.values(0, 1), 1.0, 1e-15);
    EXPECT_NEAR(s.values(1, 0), -1.0, 1e-15);
    EXPECT_NEAR(s.values(1, 1), 1.0, 1e-15);
}

TEST(Standardize, ConstantRowNamed) {
    Matrix v(2, 3);
    v << 1, 2, 3, 4, 4, 4;
    TimePanel p = make_panel(v);
    p.labels = {"ok", "flat"};
    try {
        standardize(p);
        FAIL() << "expected an error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
    }
}

TEST(Standardize, MomentsAndIdempotence) {
    auto p = gen_varma_panel(6, 200, ArmaParams::arma11(3.0, 1.0, 0.7), 100, {4});
    p.values.array() += 50.0;
    const auto s = standardize(p);
    const double t = static_cast<double>(s.n_obs());
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        EXPECT_LT(std::abs(s.values.row(i).mean()), 1e-12);
        EXPECT_NEAR(s.values.row(i).squaredNorm() / t, 1.0, 1e-12);
    }
    const auto twice = standardize(s);
    EXPECT_LT((twice.values - s.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PreparePanel, TruncatesToMostRecentCommonWindow) {
    Matrix v(2, 6);
    v << 1, 2, 4, 8, 16, 32, 1, 1, 2, 3, 5, 8;
    TimePanel raw = make_panel(v);
    raw.time_index = {"2000-01", "2000-02", "2000-03", "2000-04", "2000-05", "2000-06"};
    const std::vector<SeriesPrep> prep{{{TransformKind::log_second_difference}, std::nullopt},
                                       {{TransformKind::first_difference}, std::nullopt}};
    const auto out = prepare_panel(raw, prep);
    ASSERT_EQ(out.panel.n_obs(), 4u);
    // second series: diffs 0,1,1,2,3 -> most recent four
    EXPECT_EQ(out.panel.values(1, 0), 1.0);
    EXPECT_EQ(out.panel.values(1, 3), 3.0);
    for (Eigen::Index c = 0; c < 4; ++c) EXPECT_NEAR(out.panel.values(0, c), 0.0, 1e-15);
    EXPECT_EQ(out.panel.time_index.front(), "2000-03");
}

TEST(PreparePanel, ReportsReplacedIndices) {
    Matrix v(1, 8);
    v << 0, 0, 0, 1, 0, 0, 0, 500;
    v(0, 1) = 0.5;
    const std::vector<SeriesPrep> prep{{{TransformKind::none}, 6.0}};
    const auto out = prepare_panel(make_panel(v), prep);
    EXPECT_EQ(out.replaced[0], (std::vector<std::size_t>{7}));
    EXPECT_EQ(out.panel.values(0, 7), 0.0);
}
