#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_builder.hpp"
#include "pwqnet/net_eval.hpp"
#include "pwqnet/verify.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace pwqnet;

namespace {

ReluNetwork perturbed(const ReluNetwork& net, std::size_t layer, Eigen::Index r, Eigen::Index c, double by)
{
    auto layers = net.layers();
    layers[layer].W(r, c) += by;
    return ReluNetwork(net.feature_map(), std::move(layers), net.meta());
}

}  // namespace

TEST(CheckExact, StackedValueNetPasses)
{
    const auto v1 = fixtures::example_v1();
    const auto report = check_exact(build_value_net(v1), v1, 1000, 1e-9);
    ASSERT_EQ(report.checks.size(), 1u);
    EXPECT_TRUE(report.passed());
    EXPECT_LT(report.checks[0].max_error, 1e-9);
    EXPECT_EQ(report.checks[0].location.size(), 1u);
}

TEST(CheckExact, QNetPasses)
{
    const auto problem = example_problem(2);
    const auto spec = make_q_spec(problem);
    const auto report = check_exact(build_full_q_net(problem, spec.v_prev), spec, 200, 1e-9);
    EXPECT_TRUE(report.passed()) << report.to_text();
    EXPECT_EQ(report.checks[0].location.size(), 2u);
}

TEST(CheckExact, PerturbedWeightFails)
{
    const auto v1 = fixtures::example_v1();
    const auto net = build_value_net(v1);
    for (Eigen::Index r = 0; r < net.hidden_width(); ++r) {
        if (net.layers()[1].W(0, r) == 0.0)
            continue;  // a neuron with zero output weight cannot change the output
        const auto report = check_exact(perturbed(net, 0, r, 0, 1e-3), v1, 1000, 1e-9);
        EXPECT_FALSE(report.passed()) << "row " << r;
        EXPECT_GE(report.checks[0].max_error, 1e-4) << "row " << r;
    }
    const auto out = check_exact(perturbed(net, 1, 0, 4, 1e-3), v1, 1000, 1e-9);
    EXPECT_FALSE(out.passed());

    const auto problem = example_problem(2);
    const auto spec = make_q_spec(problem);
    const auto qbad = perturbed(build_full_q_net(problem, spec.v_prev), 0, 0, 1, 1e-3);
    const auto qr = check_exact(qbad, spec, 100, 1e-9);
    EXPECT_FALSE(qr.passed());
    EXPECT_GE(qr.checks[0].max_error, 1e-4);
}

TEST(CheckExact, HalvingTolKeepsClearPasses)
{
    const auto v1 = fixtures::example_v1();
    const auto net = build_value_net(v1);
    const auto a = check_exact(net, v1, 500, 1e-6);
    const auto b = check_exact(net, v1, 500, 5e-7);
    EXPECT_TRUE(a.passed());
    EXPECT_TRUE(b.passed());
    EXPECT_EQ(a.checks[0].max_error, b.checks[0].max_error);
    EXPECT_EQ(a.checks[0].location, b.checks[0].location);
}

TEST(CheckExact, ReportsAreDeterministic)
{
    const auto v = dp_solve(example_problem(3)).back().value;
    const auto net = build_value_net(v);
    EXPECT_EQ(check_exact(net, v, 777, 1e-9).to_text(), check_exact(net, v, 777, 1e-9).to_text());
    EXPECT_EQ(check_exact(net, v, 777, 1e-9, Exec::Serial).to_text(),
              check_exact(net, v, 777, 1e-9, Exec::Parallel).to_text());
}

TEST(ResidualPwa, AffineResidualPasses)
{
    const auto v1 = fixtures::example_v1();
    const auto qnet = build_quadratic_net(v1);
    std::vector<Interval1D> regions;
    for (const auto& p : v1.pieces())
        regions.push_back(p.region);
    const auto report =
        check_residual_pwa([&](double x) { return eval_pwq(v1, x) - forward_scalar(qnet, x); }, regions, 1e-3, 1e-9);
    EXPECT_TRUE(report.passed()) << report.to_text();
    EXPECT_EQ(report.checks.size(), 3u);
}

TEST(ResidualPwa, QuadraticFails)
{
    const auto v1 = fixtures::example_v1();
    std::vector<Interval1D> regions;
    for (const auto& p : v1.pieces())
        regions.push_back(p.region);
    const auto report = check_residual_pwa([&](double x) { return eval_pwq(v1, x); }, regions);
    EXPECT_FALSE(report.passed());
    for (std::size_t i = 0; i < 3; ++i) {
        const double S = v1.pieces()[i].q.S;
        EXPECT_NEAR(report.checks[i].max_error, 2.0 * S * 1e-6, 1e-9);
    }
}

TEST(ResidualPwa, NarrowRegionThrows)
{
    try {
        check_residual_pwa([](double x) { return x; }, {Interval1D(0.0, 0.003)});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RegionTooNarrow);
    }
}

TEST(ResidualPwa, TwoDimensionalCrossTermIsCaught)
{
    const std::vector<Region2D> square{Region2D({{Eigen::Vector2d(1, 0), 1},
                                                 {Eigen::Vector2d(-1, 0), 1},
                                                 {Eigen::Vector2d(0, 1), 1},
                                                 {Eigen::Vector2d(0, -1), 1}})};
    EXPECT_TRUE(check_residual_pwa([](double a, double b) { return 3 * a - b + 2; }, square).passed());
    // x1 x2 has zero second differences along both axes, only the diagonals see it
    EXPECT_FALSE(check_residual_pwa([](double a, double b) { return a * b; }, square).passed());
}

TEST(ValueFunctionCheck, ExamplePasses)
{
    EXPECT_TRUE(check_value_function(fixtures::example_v1()).passed());
}

TEST(ValueFunctionCheck, ConcavePieceFailsConvexity)
{
    const PwqFunction1D f({{Interval1D(0.0, 1.0), {1, 0, 0}}, {Interval1D(1.0, 2.0), {-1, 4, -2}}});
    const auto report = check_value_function(f);
    EXPECT_FALSE(report.passed());
    for (const auto& c : report.checks) {
        if (c.name == "continuity")
            EXPECT_TRUE(c.pass);
        if (c.name == "curvature")
            EXPECT_FALSE(c.pass);
    }
}

TEST(ValueFunctionCheck, JumpFailsContinuity)
{
    const PwqFunction1D f({{Interval1D(0.0, 1.0), {1, 0, 0}}, {Interval1D(1.0, 2.0), {1, 0, 0.5}}});
    const auto report = check_value_function(f);
    EXPECT_FALSE(report.passed());
    EXPECT_EQ(report.checks[0].name, "continuity");
    EXPECT_FALSE(report.checks[0].pass);
    EXPECT_DOUBLE_EQ(report.checks[0].max_error, 0.5);
    EXPECT_EQ(report.checks[0].location, std::vector<double>{1.0});
}

TEST(Report, TextFormat)
{
    Report r;
    r.add({"exact", 1.5e-10, {0.25, -1}, true, ""});
    r.add({"continuity", 0.5, {1}, false, "jump"});
    const auto text = r.to_text();
    EXPECT_NE(text.find("check=exact max_error=1.5e-10 location=(0.25,-1) pass=true"), std::string::npos);
    EXPECT_NE(text.find("check=continuity max_error=0.5 location=(1) pass=false"), std::string::npos);
    EXPECT_NE(text.find("overall pass=false"), std::string::npos);
    EXPECT_NE(r.to_json().find("\"pass\": false"), std::string::npos);
}
