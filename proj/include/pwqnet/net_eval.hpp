#pragma once

#include "pwqnet/types.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace pwqnet {

/// (x_1..x_n, x_1^2, x_1 x_2, ..., x_1 x_n, x_2^2, ..., x_n^2)
Eigen::VectorXd feature_hv(std::span<const double> x);

/// (h_v(x); u; u_i u_j for i <= j; x_i u_j ordered x-major)
Eigen::VectorXd feature_hq_prime(std::span<const double> x, std::span<const double> u);

/// Applies the network's feature map to a raw input of length raw_dim().
Eigen::VectorXd apply_feature_map(const FeatureMap& fm, std::span<const double> raw);

/// Column of the monomial z_a z_b (a <= b, z = (x, u)) in h'_q, and of the
/// linear term z_a. Shared by the L-matrix construction.
int hq_prime_linear_index(int n, int m, int a);
int hq_prime_quadratic_index(int n, int m, int a, int b);

/// Network output for a raw input. Throws ShapeMismatch on a wrong length.
Eigen::VectorXd forward(const ReluNetwork& net, std::span<const double> raw);
double forward_scalar(const ReluNetwork& net, std::span<const double> raw);
inline double forward_scalar(const ReluNetwork& net, double x)
{
    return forward_scalar(net, std::span<const double>(&x, 1));
}
inline double forward_scalar(const ReluNetwork& net, double x, double u)
{
    const double in[2] = {x, u};
    return forward_scalar(net, std::span<const double>(in, 2));
}

/// First-layer pre-activations W1 h(raw) + a1.
Eigen::VectorXd hidden_preactivations(const ReluNetwork& net, std::span<const double> raw);

/// Scalar outputs for every row of `inputs` (rows x raw_dim). The parallel
/// variant splits rows across OpenMP threads; results are identical.
std::vector<double> forward_batch(const ReluNetwork& net, const Eigen::MatrixXd& inputs, Exec exec = Exec::Parallel);

}  // namespace pwqnet
