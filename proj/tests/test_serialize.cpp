#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_builder.hpp"
#include "pwqnet/serialize.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>

using namespace pwqnet;

namespace {

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void expect_bit_equal(const ReluNetwork& a, const ReluNetwork& b)
{
    ASSERT_EQ(a.feature_map(), b.feature_map());
    ASSERT_EQ(a.layers().size(), b.layers().size());
    for (std::size_t k = 0; k < a.layers().size(); ++k) {
        const auto& la = a.layers()[k];
        const auto& lb = b.layers()[k];
        ASSERT_EQ(la.W.rows(), lb.W.rows());
        ASSERT_EQ(la.W.cols(), lb.W.cols());
        for (Eigen::Index i = 0; i < la.W.size(); ++i)
            EXPECT_TRUE(bit_equal(la.W.data()[i], lb.W.data()[i]));
        for (Eigen::Index i = 0; i < la.a.size(); ++i)
            EXPECT_TRUE(bit_equal(la.a[i], lb.a[i]));
    }
    EXPECT_EQ(a.meta(), b.meta());
}

}  // namespace

TEST(Serialize, NetworkRoundTripIsBitExact)
{
    const auto problem = example_problem(2);
    const auto net = build_full_q_net(problem, make_q_spec(problem).v_prev);
    const auto back = deserialize_network(serialize_network(net));
    expect_bit_equal(net, back);
    EXPECT_TRUE(net == back);
    EXPECT_EQ(serialize_network(back), serialize_network(net));
}

TEST(Serialize, RandomWeightsRoundTripBitExact)
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (int t = 0; t < 25; ++t) {
        Layer h{Eigen::MatrixXd(6, 5), Eigen::VectorXd(6)};
        Layer o{Eigen::MatrixXd(1, 6), Eigen::VectorXd(1)};
        for (auto* m : {&h.W, &o.W})
            for (Eigen::Index i = 0; i < m->size(); ++i)
                m->data()[i] = d(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        for (auto* v : {&h.a, &o.a})
            for (Eigen::Index i = 0; i < v->size(); ++i)
                v->data()[i] = d(rng) / 3.0;
        h.W(0, 0) = -0.0;
        h.a[1] = 0.0;
        const ReluNetwork net(FeatureMap::hq_prime(1, 1), {h, o}, {{"seed", std::to_string(t)}});
        expect_bit_equal(net, deserialize_network(serialize_network(net)));
    }
}

TEST(Serialize, PwqPwaAndProblemRoundTrip)
{
    const auto stages = dp_solve(example_problem(3));
    const auto& v = stages.back().value;
    const auto v2 = pwq_from_json(parse_document(dump_document(pwq_to_json(v))));
    ASSERT_EQ(v2.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_TRUE(bit_equal(v.pieces()[i].q.S, v2.pieces()[i].q.S));
        EXPECT_TRUE(bit_equal(v.pieces()[i].q.l, v2.pieces()[i].q.l));
        EXPECT_TRUE(bit_equal(v.pieces()[i].q.c, v2.pieces()[i].q.c));
        EXPECT_TRUE(bit_equal(v.pieces()[i].region.lower(), v2.pieces()[i].region.lower()));
    }
    const auto& pi = *stages.back().policy;
    const auto pi2 = pwa_from_json(parse_document(dump_document(pwa_to_json(pi))));
    ASSERT_EQ(pi2.size(), pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i)
        EXPECT_TRUE(bit_equal(pi.pieces()[i].offset[0], pi2.pieces()[i].offset[0]));

    const auto p = problem_from_json(parse_document(dump_document(problem_to_json(example_problem(3)))));
    EXPECT_TRUE(bit_equal(p.A, 1.2));
    EXPECT_TRUE(bit_equal(p.Q, 3.8));
    EXPECT_EQ(p.N, 3);
}

TEST(Serialize, SolutionDocumentIsAReference)
{
    const auto problem = example_problem(2);
    const auto doc = parse_document(dump_document(solution_to_json(problem, dp_solve(problem))));
    const auto ref = reference_from_json(doc);
    ASSERT_TRUE(std::holds_alternative<MpcProblem1D>(ref));
    EXPECT_EQ(std::get<MpcProblem1D>(ref).N, 2);
    EXPECT_TRUE(std::holds_alternative<PwqFunction1D>(reference_from_json(doc.at("value"))));
    EXPECT_TRUE(std::holds_alternative<PwaFunction1D>(reference_from_json(doc.at("policy"))));
}

TEST(Serialize, MalformedDocumentsRaiseParseError)
{
    for (const char* text : {"{", R"j({"kind":"relu_network"})j", R"j({"feature_map":"hv(1)","layers":[{"W":1}]})j",
                             R"j({"kind":"problem","A":1})j"}) {
        try {
            reference_from_json(parse_document(text));
            deserialize_network(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_TRUE(e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ShapeMismatch) << text;
        }
    }
}
