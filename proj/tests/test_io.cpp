#include "rmt/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rmt;

namespace {

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "rmt_io_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Json, MatrixRoundTrip) {
    Matrix m(2, 3);
    m << 1.0 / 3.0, -2.5, 1e-300, 4.0, 5e300, -0.0;
    const Json j = to_json(m);
    EXPECT_EQ(j["rows"], 2);
    EXPECT_EQ(j["cols"], 3);
    EXPECT_EQ(matrix_from_json(Json::parse(j.dump())), m);
}

TEST(Json, MalformedMatrixRejected) {
    Json j{{"rows", 2}, {"cols", 2}, {"data", Json::array({Json::array({1.0, 2.0})})}};
    EXPECT_THROW(matrix_from_json(j), InputError);
}

TEST(Json, FitAndSignificanceShapes) {
    FitResult f;
    f.params = {1.0, 0.3, 0.5};
    f.objective = 1e-4;
    f.ks = 0.01;
    f.multistart_trace.push_back({{1.0, 0.0, 0.0}, {1.0, 0.3, 0.5}, std::numeric_limits<double>::infinity(), 10});
    const Json j = to_json(f);
    EXPECT_EQ(j["params"]["a1"], 0.3);
    EXPECT_TRUE(j["multistart_trace"][0]["objective"].is_null());

    SignificanceReport r;
    r.edge = 0.8;
    r.flagged.push_back({1, 0.95, 0.8, 0.15});
    const Json k = to_json(r);
    EXPECT_EQ(k["flagged"][0]["rank"], 1);
    EXPECT_EQ(k["edge"], 0.8);
}

TEST(Json, AtomsList) {
    SpectralDensity d;
    d.atoms = {{0.0, 0.75}, {1.0, 0.1}};
    const Json j = atoms_json(d);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[1]["position"], 1.0);
    EXPECT_EQ(j[0]["weight"], 0.75);
}

TEST(Csv, DensityAndValues) {
    SpectralDensity d;
    d.lambdas = {0.0, 0.5};
    d.rho = {0.25, 1.0 / 3.0};
    const auto path = temp_path("density.csv");
    write_density_csv(path, d);
    EXPECT_EQ(slurp(path), "lambda,rho\n0,0.25\n0.5,0.3333333333333333\n");

    const std::vector<double> v{3.0, 1e-20};
    write_values_csv(temp_path("values.csv"), v, "eigenvalue");
    EXPECT_EQ(slurp(temp_path("values.csv")), "eigenvalue\n3\n1e-20\n");

    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    write_matrix_csv(temp_path("matrix.csv"), m);
    EXPECT_EQ(slurp(temp_path("matrix.csv")), "1,2\n3,4\n");
}

TEST(Csv, UnwritablePathIsInputError) {
    EXPECT_THROW(write_json("/nonexistent-dir/out.json", Json::object()), InputError);
}
