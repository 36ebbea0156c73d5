// Serial reference vs OpenMP timing for the data-parallel kernels.

#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_builder.hpp"
#include "pwqnet/net_eval.hpp"
#include "pwqnet/trainer.hpp"
#include "pwqnet/verify.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

using namespace pwqnet;

namespace {

double seconds(const std::function<void()>& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* name, const std::function<void(Exec)>& kernel)
{
    const double serial = seconds([&] { kernel(Exec::Serial); });
    const double parallel = seconds([&] { kernel(Exec::Parallel); });
    std::printf("%-22s serial=%9.4fs parallel=%9.4fs speedup=%5.2fx\n", name, serial, parallel,
                parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main()
{
    std::printf("threads=%d\n", omp_get_max_threads());
    const auto problem = example_problem(2);
    const auto stages = dp_solve(problem);
    const auto feasible = stages.back().feasible;

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(feasible.lower(), feasible.upper());
    std::vector<double> xs(1000);
    for (auto& x : xs)
        x = dist(rng);
    const auto deep = example_problem(3);
    row("brute_force_values", [&](Exec e) { brute_force_values(deep, xs, {}, e); });

    const auto qnet = build_full_q_net(problem, make_q_spec(problem).v_prev);
    Eigen::MatrixXd inputs(200000, 2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        inputs.row(i) << unit(rng), unit(rng);
    row("forward_batch", [&](Exec e) { forward_batch(qnet, inputs, e); });

    const auto vnet = build_value_net(stages.back().value);
    row("check_exact", [&](Exec e) { check_exact(vnet, stages.back().value, 200000, 1e-9, e); });

    const auto data = sample_dataset(make_q_spec(problem), 2000, 7);
    const std::vector<Topology> configs{{FeatureMap::hq_prime(1, 1), {7}}, {FeatureMap::identity(2), {12}}};
    row("experiment", [&](Exec e) { experiment(configs, data, 4, 1000, 100, {}, e); });
    return 0;
}
