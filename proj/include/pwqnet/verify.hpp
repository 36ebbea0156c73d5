#pragma once

// Certification checks producing deterministic, machine-readable reports.

#include "pwqnet/types.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace pwqnet {

struct CheckResult {
    std::string name;
    double max_error = 0.0;
    std::vector<double> location;  // argmax point (empty if not applicable)
    bool pass = true;
    std::string detail;
};

struct Report {
    std::vector<CheckResult> checks;

    bool passed() const;
    void add(CheckResult r) { checks.push_back(std::move(r)); }
    void append(const Report& other);
    /// One line per check: check=<name> max_error=<e> location=<..> pass=<bool>
    std::string to_text() const;
    std::string to_json() const;
};

using ExactReference = std::variant<PwqFunction1D, PwaFunction1D, QFunctionSpec>;

/// Max |net - reference| over a grid of `grid_density` uniform points per
/// axis plus every breakpoint and its neighbours 1e-12 inside each adjacent
/// region.
Report check_exact(const ReluNetwork& net, const ExactReference& reference, int grid_density, double tol,
                   Exec exec = Exec::Parallel);

inline constexpr double kResidualStep = 1e-3;
inline constexpr double kResidualTol = 1e-8;

/// Second central differences of f inside each region; f is affine on a
/// region iff they all vanish. Throws RegionTooNarrow if step > width / 4.
Report check_residual_pwa(const std::function<double(double)>& f, const std::vector<Interval1D>& regions,
                          double step = kResidualStep, double tol = kResidualTol, int centers_per_region = 200);

/// 2-D variant: differences along both axes and both diagonals, at stencil
/// centers whose whole 3x3 stencil lies in the region.
Report check_residual_pwa(const std::function<double(double, double)>& f, const std::vector<Region2D>& regions,
                          double step = kResidualStep, double tol = kResidualTol, int centers_per_axis = 40);

/// Continuity at breakpoints, nonnegative curvature and nondecreasing slope.
Report check_value_function(const PwqFunction1D& pwq);

}  // namespace pwqnet
