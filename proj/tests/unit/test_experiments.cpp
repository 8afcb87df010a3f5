#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <stfosls/experiments/run.hpp>

using namespace stfosls;
using namespace stfosls::experiments;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string temp_dir(const std::string& name)
{
    const auto d = std::filesystem::temp_directory_path() / ("stfosls-test-" + name);
    std::filesystem::remove_all(d);
    return d.string();
}

adapt::RunRecord record(int step, Index dofs, Real eta)
{
    adapt::RunRecord r;
    r.step = step;
    r.dofs = dofs;
    r.estimator = eta;
    return r;
}

} // namespace

TEST(Problems, RegistryHasSixExperimentsAndManufactured)
{
    EXPECT_EQ(registry().size(), 7u);
    EXPECT_THROW(problem_info("no-such-problem"), InvalidArgument);
    EXPECT_THROW(make_problem<2>("1d-nonmatching"), InvalidArgument);
    EXPECT_NO_THROW(make_problem<2>("manufactured"));
}

TEST(Problems, DataValues)
{
    const SpaceTimePoint<1> p1{0.3, {0.25}};
    const auto a = make_problem<1>("1d-nonmatching");
    EXPECT_EQ(a.f1(p1), 2);
    EXPECT_EQ(a.u0({0.25}), 1);
    const auto b = make_problem<1>("1d-interior-kink");
    EXPECT_EQ(b.f1(p1), 1);
    EXPECT_EQ(b.u0({0.25}), 0.5);
    EXPECT_EQ(b.u0({0.5}), 1);
    const auto c = make_problem<1>("1d-boundary-singularity");
    EXPECT_DOUBLE_EQ(c.u0({0.25}), 0.375);
    const auto d = make_problem<2>("2d-interior-kink");
    EXPECT_EQ(d.u0({0.5, 0.5}), 0);
    EXPECT_NEAR(d.u0({0.5, 0.0}), 0, 1e-16);
    EXPECT_NEAR(d.u0({0.5, 1.0}), 0.5 * std::sin(M_PI) * 1, 1e-16);
    const auto e = make_problem<2>("2d-boundary-singularity");
    EXPECT_DOUBLE_EQ(e.u0({0.0625, 0.5}), 0.125 * 0.9375 * 0.25);
    EXPECT_EQ(make_problem<2>("2d-nonmatching").u0({0.2, 0.7}), 1);
}

TEST(Problems, ManufacturedSolvesTheHeatEquation)
{
    const auto p = make_problem<2>("manufactured");
    const auto& u = *p.exact;
    const Real h = 1e-5;
    for (const SpaceTimePoint<2>& x : {SpaceTimePoint<2>{0.1, {0.3, 0.6}}, SpaceTimePoint<2>{0.02, {0.8, 0.45}}}) {
        // Central differences as an independent check of the closed forms.
        const Real dt = (u.v1({x.t + h, x.x}) - u.v1({x.t - h, x.x})) / (2 * h);
        EXPECT_NEAR(u.dt_v1(x), dt, 1e-6 * (1 + std::abs(dt)));
        for (int i = 0; i < 2; ++i) {
            auto xp = x, xm = x;
            xp.x[i] += h;
            xm.x[i] -= h;
            EXPECT_NEAR(u.grad_v1(x)[i], (u.v1(xp) - u.v1(xm)) / (2 * h), 1e-6);
            EXPECT_NEAR(u.v2(x)[i], -u.grad_v1(x)[i], 1e-15);
        }
        EXPECT_NEAR(u.div(x), 0, 1e-12);
        EXPECT_NEAR(u.v1({0, x.x}), p.u0(x.x), 1e-15);
    }
}

TEST(FitRate, Examples)
{
    EXPECT_NEAR(fit_rate({100, 400}, {1.0, 0.5}, 2), 0.5, 1e-14);
    EXPECT_EQ(fit_rate({10, 100, 1000}, {0.3, 0.3, 0.3}, 3), 0.0);
    EXPECT_THROW(fit_rate({10, 10}, {1, 2}, 2), InvalidArgument);
    EXPECT_THROW(fit_rate({10, 20}, {1, 2}, 1), InvalidArgument);
    EXPECT_THROW(fit_rate({10, 20}, {1, 2}, 3), InvalidArgument);
    EXPECT_THROW(fit_rate({10, 20}, {1, -2}, 2), InvalidArgument);
}

TEST(FitRate, WindowUsesTrailingRecords)
{
    std::vector<adapt::RunRecord> r{record(0, 10, 5), record(1, 100, 1), record(2, 1000, 0.1), record(3, 10000, 0.01)};
    EXPECT_NEAR(fit_rate(r, 3), 1, 1e-14);
    EXPECT_EQ(default_window(adapt::RefinementMode::uniform, 9), 5u);
    EXPECT_EQ(default_window(adapt::RefinementMode::uniform, 3), 3u);
    EXPECT_EQ(default_window(adapt::RefinementMode::adaptive, 30), 10u);
    EXPECT_EQ(default_window(adapt::RefinementMode::adaptive, 12), 8u);
}

TEST(FitRate, NoisySyntheticSequence)
{
    std::mt19937 rng(41);
    std::uniform_real_distribution<Real> noise(-0.01, 0.01);
    std::vector<Real> dofs, eta;
    for (Real n = 100; n < 2e6; n *= 1.6) {
        dofs.push_back(n);
        eta.push_back(std::pow(n, -0.33) * (1 + noise(rng)));
    }
    EXPECT_NEAR(fit_rate(dofs, eta, dofs.size()), 0.33, 0.01);
}

TEST(Csv, HeaderAndPrecision)
{
    auto r = record(0, 3, 0.1 + 0.2);
    std::ostringstream a;
    write_csv(a, {r});
    EXPECT_EQ(a.str(), "step,dofs,estimator,wall_time\n0,3,0.30000000000000004,0\n");
    r.error_u = 1.0 / 3;
    r.wall_time = 0.5;
    std::ostringstream b;
    write_csv(b, {r});
    EXPECT_EQ(b.str(), "step,dofs,estimator,error_u,wall_time\n0,3,0.30000000000000004,0.33333333333333331,0.5\n");
}

TEST(Svg, WellFormedPlot)
{
    std::vector<adapt::RunRecord> r{record(0, 3, 0.7), record(1, 13, 0.5), record(2, 51, 0.3)};
    std::ostringstream os;
    write_svg(os, r, "a<b", 0.4, 3);
    const auto s = os.str();
    EXPECT_EQ(s.rfind("<?xml", 0), 0u);
    EXPECT_NE(s.find("version=\"1.1\""), std::string::npos);
    EXPECT_NE(s.find("<polyline"), std::string::npos);
    EXPECT_NE(s.find("<polygon"), std::string::npos);
    EXPECT_NE(s.find("a&lt;b"), std::string::npos);
    EXPECT_EQ(s.substr(s.size() - 7), "</svg>\n");
    EXPECT_THROW(write_svg(os, {}, "empty"), InvalidArgument);
}

TEST(Run, DeterministicFilesAreByteIdentical)
{
    ExperimentConfig c;
    c.problem = "1d-interior-kink";
    c.max_dofs = 3000;
    c.out_dir = temp_dir("a");
    const auto first = run(c);
    c.out_dir = temp_dir("b");
    const auto second = run(c);
    ASSERT_FALSE(first.csv_path.empty());
    EXPECT_EQ(slurp(first.csv_path), slurp(second.csv_path));
    EXPECT_EQ(slurp(first.svg_path), slurp(second.svg_path));
    EXPECT_EQ(slurp(first.csv_path).rfind("step,dofs,estimator,wall_time\n", 0), 0u);
    ASSERT_TRUE(first.rate.has_value());
    EXPECT_GT(*first.rate, 0);
}

TEST(Run, WritesMeshDump)
{
    ExperimentConfig c;
    c.problem = "manufactured";
    c.mode = adapt::RefinementMode::uniform;
    c.max_dofs = 100;
    c.mesh_dump = (std::filesystem::temp_directory_path() / "stfosls-test-mesh.txt").string();
    const auto res = run(c);
    std::istringstream is(slurp(c.mesh_dump));
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        Index id;
        int level;
        Real t0, t1, v0, v1;
        ASSERT_TRUE(ls >> id >> level >> t0 >> t1 >> v0 >> v1) << line;
        EXPECT_LT(t0, t1);
        ++lines;
    }
    // The mesh after the last solved step is refined once more.
    EXPECT_EQ(lines, 4 * static_cast<int>(res.records.back().elements));
}

TEST(Run, RejectsInvalidConfigurations)
{
    ExperimentConfig c;
    c.dim = 2;
    c.mesh = MeshFamily::simplex;
    c.problem = "manufactured";
    EXPECT_THROW(run(c), InvalidArgument);
    c = {};
    c.dim = 3;
    EXPECT_THROW(run(c), InvalidArgument);
    c = {};
    c.theta = 0;
    EXPECT_THROW(run(c), InvalidArgument);
    c = {};
    c.problem = "2d-nonmatching";
    EXPECT_THROW(run(c), InvalidArgument);
}

TEST(Run, UniformDofGrowth)
{
    // Uniform prism refinement multiplies the unknowns by about 2^(d+1).
    for (int dim : {1, 2}) {
        ExperimentConfig c;
        c.problem = "manufactured";
        c.dim = dim;
        c.mode = adapt::RefinementMode::uniform;
        c.max_dofs = dim == 1 ? 15000 : 8000;
        const auto r = run(c).records;
        ASSERT_GE(r.size(), 4u);
        const Real ratio = static_cast<Real>(r.back().dofs) / static_cast<Real>(r[r.size() - 2].dofs);
        EXPECT_NEAR(ratio, dim == 1 ? 4 : 8, dim == 1 ? 0.4 : 0.8);
    }
}
