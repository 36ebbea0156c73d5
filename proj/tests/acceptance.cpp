// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_builder.hpp"
#include "pwqnet/net_eval.hpp"
#include "pwqnet/serialize.hpp"
#include "pwqnet/showcase2d.hpp"
#include "pwqnet/trainer.hpp"
#include "pwqnet/verify.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace pwqnet;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs >= budget_s) {
        o.pass = false;
        o.detail += " (over the " + std::to_string(budget_s) + " s budget)";
    }
    if (!o.pass)
        ++failures;
    std::printf("[%s] criterion %d: %s | %.3f s | %s\n", o.pass ? "PASS" : "FAIL", id, title, secs, o.detail.c_str());
    std::fflush(stdout);
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        return INFINITY;
    return (a - b).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd mat(int r, int c, std::initializer_list<double> v)
{
    Eigen::MatrixXd m(r, c);
    auto it = v.begin();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            m(i, j) = *it++;
    return m;
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome explicit_solution()
{
    const auto v = dp_solve(example_problem(1)).back().value;
    if (v.size() != 3)
        return {false, std::to_string(v.size()) + " regions"};
    const double expect[3][5] = {{-5.0 / 3, -1, 11, 12, 6}, {-1, 1, 5, 0, 0}, {1, 5.0 / 3, 11, -12, 6}};
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& p = v.pieces()[i];
        const double got[5] = {p.region.lower(), p.region.upper(), p.q.S, p.q.l, p.q.c};
        for (int j = 0; j < 5; ++j)
            worst = std::max(worst, std::abs(got[j] - expect[i][j]));
    }
    return {worst <= 1e-9, "3 regions, max coefficient error " + fmt("%.3g", worst)};
}

Outcome quadratic_net_weights()
{
    const auto net = build_quadratic_net(dp_solve(example_problem(1)).back().value);
    const double e = std::max({max_abs_diff(net.layers()[0].W, mat(3, 2, {-8.0 / 3, -1, 0, -1, 8.0 / 3, -1})),
                               max_abs_diff(net.layers()[0].a, mat(3, 1, {-5.0 / 3, 1, -5.0 / 3})),
                               max_abs_diff(net.layers()[1].W, mat(1, 3, {-11, -5, -11})),
                               max_abs_diff(net.layers()[1].a, mat(1, 1, {0}))});
    return {e <= 1e-12, "max weight error " + fmt("%.3g", e)};
}

Outcome residual_block()
{
    const auto v1 = dp_solve(example_problem(1)).back().value;
    const auto res = build_residual_net(residual_pwa(v1));
    const double e = std::max(max_abs_diff(res.layers()[1].W, mat(1, 3, {52.0 / 3, 0, 52.0 / 3})),
                              std::abs(res.layers()[1].a[0] - 5.0));
    const auto net = build_value_net(v1);
    double worst = 0.0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
        const double x = -5.0 / 3 + (10.0 / 3) * k / (n - 1);
        worst = std::max(worst, std::abs(forward_scalar(net, x) - eval_pwq(v1, x)));
    }
    const bool ok = e <= 1e-12 && worst < 1e-9 && net.hidden_width() == 6;
    return {ok, "output weight error " + fmt("%.3g", e) + ", width " + std::to_string(net.hidden_width()) +
                    ", max |Phi - V1| " + fmt("%.3g", worst) + " on 1e4 points"};
}

Outcome l_matrix()
{
    const auto problem = example_problem(2);
    const auto L = build_l_matrix(problem);
    const double e =
        max_abs_diff(L.entries, mat(3, 5, {6.0 / 5, 0, 1, 0, 0, 0, 36.0 / 25, 0, 1, 12.0 / 5, 0, 19.0 / 5, 0, 1, 0}));
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const double x = d(rng);
        const double u = d(rng);
        const double xn = problem.successor(x, u);
        const Eigen::Vector3d hq(xn, xn * xn, problem.stage_cost(x, u));
        const double xs[1] = {x};
        const double us[1] = {u};
        worst = std::max(worst, (L.entries * feature_hq_prime(xs, us) - hq).cwiseAbs().maxCoeff());
    }
    return {e <= 1e-12 && worst <= 1e-12,
            "entry error " + fmt("%.3g", e) + ", max |h_q - L h'_q| " + fmt("%.3g", worst) + " on 1e3 points"};
}

Outcome q_net_exactness()
{
    const auto problem = example_problem(2);
    const auto spec = make_q_spec(problem);
    const auto net = build_full_q_net(problem, spec.v_prev);
    const auto F = dp_solve(problem).back().feasible;
    const auto dom = spec.v_prev.domain();
    double worst = 0.0;
    int points = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const double x = F.lower() + F.width() * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double u = problem.U.lower() + problem.U.width() * j / (n - 1);
            if (!dom.contains(problem.successor(x, u)))
                continue;
            ++points;
            worst = std::max(worst, std::abs(forward_scalar(net, x, u) - q_eval(spec, x, u)));
        }
    }
    const bool ok = worst < 1e-9 && net.hidden_width() == 7 && points > 0;
    return {ok, "width " + std::to_string(net.hidden_width()) + ", " + std::to_string(points) +
                    " feasible grid points, max |Phi - Q2| " + fmt("%.3g", worst)};
}

Outcome oracle_equivalence()
{
    std::ostringstream detail;
    bool ok = true;
    for (int N = 1; N <= 3; ++N) {
        const auto problem = example_problem(N);
        const auto stages = dp_solve(problem);
        const auto F = stages.back().feasible;
        std::mt19937_64 rng(77 + static_cast<std::uint64_t>(N));
        std::uniform_real_distribution<double> d(F.lower(), F.upper());
        std::vector<double> xs(1000);
        for (auto& x : xs)
            x = d(rng);
        const auto brute = brute_force_values(problem, xs);
        double worst = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            worst = std::max(worst, std::abs(brute[i] - eval_pwq(stages.back().value, xs[i])));
        ok = ok && worst < 1e-6;
        detail << "N=" << N << " max " << fmt("%.3g", worst) << (N < 3 ? ", " : "");
    }
    return {ok, detail.str()};
}

Outcome showcase_check()
{
    const auto report = showcase::verify_showcase();
    double residual = 0.0;
    for (const auto& c : report.checks)
        if (c.name.rfind("residual_pwa", 0) == 0)
            residual = std::max(residual, c.max_error);
    return {report.passed(), std::to_string(report.checks.size()) + " checks, worst second difference " +
                                 fmt("%.3g", residual)};
}

Outcome learning_experiment()
{
    const auto problem = example_problem(2);
    const auto spec = make_q_spec(problem);
    const auto data = sample_dataset(spec, 2000, 7);
    const auto topologies = reference_topologies();

    const std::size_t expect_p[7] = {36, 43, 50, 57, 49, 51, 57};
    bool counts = topologies.size() == 7;
    for (std::size_t i = 0; counts && i < 7; ++i)
        counts = topologies[i].parameter_count() == expect_p[i];

    const auto rows = experiment(topologies, data, 20, 1000, 1000);
    std::printf("%s", format_table(rows).c_str());
    const double best = rows[2].mean_rmse;  // h'_q, width 7
    bool ordering = std::isfinite(best);
    for (std::size_t i = 4; i < 7; ++i)
        ordering = ordering && best < rows[i].mean_rmse;

    const auto exact = build_full_q_net(problem, spec.v_prev);
    const double epoch0 = rmse(exact, data);

    std::ostringstream detail;
    detail << "(a) width-7 h'_q mean " << fmt("%.4f", best) << " vs (x,u) " << fmt("%.4f", rows[4].mean_rmse) << "/"
           << fmt("%.4f", rows[5].mean_rmse) << "/" << fmt("%.4f", rows[6].mean_rmse) << (ordering ? " ok" : " VIOLATED")
           << "; (b) parameter counts " << (counts ? "ok" : "MISMATCH") << "; (c) exact-init RMSE "
           << fmt("%.3g", epoch0);
    return {ordering && counts && epoch0 < 1e-6, detail.str()};
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome property_suites()
{
    std::mt19937_64 rng(31337);
    int residual_pass = 0;
    for (int t = 0; t < 25; ++t) {
        const auto f = fixtures::random_convex_pwq(rng, 2 + t % 7);
        const auto qnet = build_quadratic_net(f);
        std::vector<Interval1D> regions;
        for (const auto& p : f.pieces())
            regions.push_back(p.region);
        const auto report = check_residual_pwa([&](double x) { return eval_pwq(f, x) - forward_scalar(qnet, x); },
                                               regions);
        residual_pass += report.passed() && check_exact(build_value_net(f), f, 2000, 1e-9).passed();
    }

    double grad_worst = 0.0;
    int grad_checked = 0;
    for (const auto& [net, data] : fixtures::gradient_cases()) {
        const auto r = fixtures::check_gradient(net, data);
        grad_worst = std::max(grad_worst, r.worst_rel_error);
        grad_checked += r.checked;
    }

    int round_trips = 0;
    int round_trip_ok = 0;
    for (int N = 1; N <= 4; ++N) {
        const auto problem = example_problem(N);
        for (const auto& net : {build_full_q_net(problem, make_q_spec(problem).v_prev),
                                build_value_net(dp_solve(problem).back().value),
                                init_network(reference_topologies()[static_cast<std::size_t>(N)], 9)}) {
            const auto back = deserialize_network(serialize_network(net));
            bool same = back.feature_map() == net.feature_map() && back.layers().size() == net.layers().size();
            for (std::size_t k = 0; same && k < net.layers().size(); ++k) {
                const auto& a = net.layers()[k];
                const auto& b = back.layers()[k];
                same = a.W.rows() == b.W.rows() && a.W.cols() == b.W.cols() && a.a.size() == b.a.size();
                for (Eigen::Index i = 0; same && i < a.W.size(); ++i)
                    same = bit_equal(a.W.data()[i], b.W.data()[i]);
                for (Eigen::Index i = 0; same && i < a.a.size(); ++i)
                    same = bit_equal(a.a[i], b.a[i]);
            }
            ++round_trips;
            round_trip_ok += same;
        }
    }

    const bool ok = residual_pass == 25 && grad_worst < 1e-4 && grad_checked > 0 && round_trip_ok == round_trips;
    return {ok, std::to_string(residual_pass) + "/25 random PWQ residual checks, gradient worst rel error " +
                    fmt("%.3g", grad_worst) + " over " + std::to_string(grad_checked) + " parameters, " +
                    std::to_string(round_trip_ok) + "/" + std::to_string(round_trips) + " bit-exact round trips"};
}

}  // namespace

int main()
{
    criterion(1, "explicit solution reproduction", 1.0, explicit_solution);
    criterion(2, "quadratic-part network parameters", 0.0, quadratic_net_weights);
    criterion(3, "residual block and stacked value network", 0.0, residual_block);
    criterion(4, "L matrix", 0.0, l_matrix);
    criterion(5, "Q-network exactness", 5.0, q_net_exactness);
    criterion(6, "oracle equivalence", 60.0, oracle_equivalence);
    criterion(7, "2-D showcase", 0.0, showcase_check);
    criterion(8, "learning experiment", 600.0, learning_experiment);
    criterion(9, "property suites", 0.0, property_suites);
    std::printf("acceptance: %d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
