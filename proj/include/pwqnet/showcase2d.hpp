#pragma once

// Two-dimensional piecewise quadratic example on four triangles around the
// origin, with a hand-derived width-8 network over h_v(x1, x2) whose
// residual is piecewise affine.

#include "pwqnet/types.hpp"
#include "pwqnet/verify.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace pwqnet::showcase {

/// The four triangles: quadrants I, II, III, IV cut by |x1| + |x2| <= 1.
const std::vector<Region2D>& regions();

/// Index of the first region containing x; throws OutOfDomain.
std::size_t region_of(const Eigen::Vector2d& x);

/// x1^2 + x2^2, 2x1^2 + x2^2, 2x1^2 + 2x2^2, x1^2 + 2x2^2 on regions 1..4.
double fictive_v(const Eigen::Vector2d& x);

ReluNetwork build_showcase_net();

/// Hidden neurons (0-based) expected active in the interior of each region.
const std::array<std::array<int, 4>, 4>& expected_active();

/// Residual PWA check on every region, the per-region activation pattern,
/// and a comparison of the weights against the hand-derived matrices.
Report verify_showcase();

/// CSV rows x1,x2,V,Phi,residual on a uniform grid over the domain.
std::string sample_csv(int points_per_axis);

}  // namespace pwqnet::showcase
