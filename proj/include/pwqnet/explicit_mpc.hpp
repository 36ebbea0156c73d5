#pragma once

// Exact dynamic programming for scalar constrained LQ problems, plus the
// brute-force grid search used to certify it.

#include "pwqnet/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace pwqnet {

/// V_k, the minimizing input law at stage k (absent for k = 0) and dom V_k.
struct DpStageResult {
    PwqFunction1D value;
    std::optional<PwaFunction1D> policy;
    Interval1D feasible;
};

/// Stages 0..N. Stage 0 is P x^2 on T; stage k+1 minimizes
/// l(x, u) + V_k(Ax + Bu) over u in U with Ax + Bu in dom V_k and x in X.
/// Throws Infeasible if a feasible set becomes empty, NonConvex if a stage
/// fails the convexity check.
std::vector<DpStageResult> dp_solve(const MpcProblem1D& problem);

/// F_{k+1} = {x in X : exists u in U with Ax + Bu in F_k}; nullopt if empty.
std::optional<Interval1D> feasible_predecessor(const MpcProblem1D& problem, const Interval1D& next);

/// Brute-force value of the N-step problem at x by refining a tensor grid
/// over the whole input sequence. Returns +inf if no grid sequence is
/// feasible.
struct BruteForceOptions {
    int grid = 41;     // points per input per pass
    int passes = 10;   // each pass shrinks the bracket 10x
};

double brute_force_value(const MpcProblem1D& problem, double x, const BruteForceOptions& opts = {});
inline double brute_force_value(const MpcProblem1D& problem, double x, int grid)
{
    return brute_force_value(problem, x, BruteForceOptions{grid, 10});
}

/// Batch oracle over many states; Exec::Parallel distributes states over
/// OpenMP threads, Exec::Serial is the reference loop.
std::vector<double> brute_force_values(const MpcProblem1D& problem, std::span<const double> xs,
                                       const BruteForceOptions& opts = {}, Exec exec = Exec::Parallel);

/// Q_N(x, u) = l(x, u) + V_{N-1}(Ax + Bu). Throws OutOfDomain if the
/// successor leaves dom V_{N-1}.
double q_eval(const QFunctionSpec& spec, double x, double u);

/// Q-function data for horizon N (solves the N-1 problem).
QFunctionSpec make_q_spec(const MpcProblem1D& problem);

}  // namespace pwqnet
