#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_builder.hpp"
#include "pwqnet/trainer.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pwqnet;

namespace {

const Dataset& shared_data()
{
    static const Dataset d = sample_dataset(make_q_spec(example_problem(2)), 2000, 7);
    return d;
}

}  // namespace

TEST(Topology, ParameterCountsMatchReferenceTable)
{
    const auto t = reference_topologies();
    ASSERT_EQ(t.size(), 7u);
    const std::size_t expect[7] = {36, 43, 50, 57, 49, 51, 57};
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(t[i].parameter_count(), expect[i]) << t[i].label();
        EXPECT_EQ(init_network(t[i], 1).parameter_count(), expect[i]);
    }
}

TEST(Dataset, DeterministicFeasibleAndExact)
{
    const auto spec = make_q_spec(example_problem(2));
    const auto a = sample_dataset(spec, 1000, 7);
    const auto b = sample_dataset(spec, 1000, 7);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.target, b.target);
    EXPECT_NE(sample_dataset(spec, 1000, 8).x, a.x);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_GE(a.target[i], 0.0);
        EXPECT_NEAR(a.target[i], q_eval(spec, a.x[i], a.u[i]), 1e-12);
        EXPECT_TRUE(spec.v_prev.domain().contains(spec.problem.successor(a.x[i], a.u[i])));
    }
}

TEST(Dataset, StallsOnTinyFeasibleSet)
{
    auto problem = example_problem(1);
    problem.X = Interval1D(-1000.0, 1000.0);
    problem.T = Interval1D(-1e-3, 1e-3);
    try {
        sample_dataset(make_q_spec(problem), 100, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SamplingStalled);
    }
}

TEST(Gradient, MatchesCentralFiniteDifferences)
{
    int checked = 0;
    for (const auto& [net, data] : fixtures::gradient_cases()) {
        const auto r = fixtures::check_gradient(net, data);
        EXPECT_LT(r.worst_rel_error, 1e-4) << r.worst_where;
        checked += r.checked;
    }
    EXPECT_GT(checked, 200);
}

TEST(Train, DeterministicGivenSeeds)
{
    const Topology topo{FeatureMap::hq_prime(1, 1), {5}};
    const auto a = train(topo, shared_data(), 5, 11);
    const auto b = train(topo, shared_data(), 5, 11);
    EXPECT_TRUE(a.net == b.net);
    EXPECT_EQ(a.rmse, b.rmse);
    EXPECT_FALSE(a.net == train(topo, shared_data(), 5, 12).net);
}

TEST(Train, ZeroTargetIsLearned)
{
    auto data = shared_data();
    std::fill(data.target.begin(), data.target.end(), 0.0);
    for (const auto& topo : {Topology{FeatureMap::hq_prime(1, 1), {7}}, Topology{FeatureMap::identity(2), {12}}}) {
        const auto r = train(topo, data, 1000, 4);
        EXPECT_LT(r.rmse, 1e-3) << topo.label();
    }
}

TEST(Train, ExactInitializationStaysExact)
{
    const auto problem = example_problem(2);
    const auto exact = build_full_q_net(problem, make_q_spec(problem).v_prev);
    TrainOptions opts;
    opts.initial = exact;
    // Adam normalizes each step by the gradient scale, so once the minibatch
    // gradients exceed epsilon the weights jitter with amplitude ~ lr; the loss
    // stays below 1e-10 only for lr <= 1e-5.
    for (double lr : {1e-5, 1e-6}) {
        opts.learning_rate = lr;
        const auto r = train({FeatureMap::hq_prime(1, 1), {exact.hidden_width()}}, shared_data(), 10, 1, opts);
        EXPECT_LT(r.initial_rmse, 1e-6);
        EXPECT_LT(r.rmse * r.rmse, 1e-10) << "lr " << lr;
    }
}

TEST(Train, RejectsMismatchedInitialNetwork)
{
    TrainOptions opts;
    opts.initial = init_network({FeatureMap::identity(2), {4}}, 1);
    EXPECT_THROW(train({FeatureMap::hq_prime(1, 1), {4}}, shared_data(), 1, 1, opts), Error);
}

TEST(Train, TrainingReducesError)
{
    const auto r = train({FeatureMap::hq_prime(1, 1), {7}}, shared_data(), 50, 3);
    EXPECT_LT(r.rmse, 0.5 * r.initial_rmse);
}

TEST(Experiment, TableIsDeterministicAndFormatted)
{
    const std::vector<Topology> configs{{FeatureMap::hq_prime(1, 1), {5}}, {FeatureMap::identity(2), {4, 4, 4}}};
    const auto a = experiment(configs, shared_data(), 1, 99, 3);
    const auto b = experiment(configs, shared_data(), 1, 99, 3);
    EXPECT_EQ(format_table(a), format_table(b));
    EXPECT_EQ(format_csv(a), format_csv(b));
    const auto csv = format_csv(a);
    EXPECT_NE(csv.find("57"), std::string::npos);
    EXPECT_NE(format_table(a).find("4,4,4"), std::string::npos);
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0].trial_rmse.size(), 1u);
    EXPECT_EQ(a[0].mean_rmse, a[0].trial_rmse[0]);
    EXPECT_EQ(a[0].std_rmse, 0.0);
}
