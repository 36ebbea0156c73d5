#pragma once

/// Core data model: intervals, piecewise quadratic / affine functions on the
/// real line, feature maps, one-or-more hidden layer ReLU networks and the
/// 1-D constrained LQ problem data.

#include <Eigen/Core>

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwqnet {

enum class ErrorCode {
    InvalidArgument,
    ChainBroken,
    OutOfDomain,
    NotChained,
    UnboundedRegion,
    DimensionMismatch,
    FeatureMapMismatch,
    ShapeMismatch,
    Infeasible,
    NonConvex,
    RegionTooNarrow,
    SamplingStalled,
    Diverged,
    ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Breakpoint continuity and coefficient merge tolerances.
inline constexpr double kContinuityTol = 1e-9;
inline constexpr double kMergeTol = 1e-9;

/// Closed, proper, bounded interval [lower, upper].
class Interval1D {
public:
    Interval1D(double lower, double upper);

    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    double width() const noexcept { return upper_ - lower_; }
    double midpoint() const noexcept { return 0.5 * (lower_ + upper_); }
    bool contains(double x, double tol = 0.0) const noexcept
    {
        return x >= lower_ - tol && x <= upper_ + tol;
    }
    bool contains(const Interval1D& other) const noexcept
    {
        return other.lower_ >= lower_ && other.upper_ <= upper_;
    }

    friend bool operator==(const Interval1D&, const Interval1D&) = default;

private:
    double lower_;
    double upper_;
};

/// S x^2 + l x + c
struct Quadratic {
    double S = 0.0;
    double l = 0.0;
    double c = 0.0;

    double operator()(double x) const noexcept { return (S * x + l) * x + c; }
    double slope(double x) const noexcept { return 2.0 * S * x + l; }

    friend bool operator==(const Quadratic&, const Quadratic&) = default;
};

struct QuadPiece {
    Interval1D region;
    Quadratic q;
};

/// Continuous piecewise quadratic function on a chain of intervals.
///
/// Construction only enforces the chaining invariant (sorted, touching
/// regions). Continuity is checked by verify::check_value_function so that
/// malformed inputs can still be represented and reported on.
class PwqFunction1D {
public:
    explicit PwqFunction1D(std::vector<QuadPiece> pieces);

    const std::vector<QuadPiece>& pieces() const noexcept { return pieces_; }
    std::size_t size() const noexcept { return pieces_.size(); }
    Interval1D domain() const;
    std::vector<double> breakpoints() const;  // interior breakpoints only

    /// Index of the piece containing x; the smaller index wins at shared
    /// breakpoints. Throws OutOfDomain.
    std::size_t locate(double x) const;

private:
    std::vector<QuadPiece> pieces_;
};

PwqFunction1D canonicalize(const PwqFunction1D& pwq, double eps_merge = kMergeTol);
double eval_pwq(const PwqFunction1D& pwq, double x);

struct AffinePiece {
    Interval1D region;
    Eigen::VectorXd gain;    // m
    Eigen::VectorXd offset;  // m

    static AffinePiece scalar(Interval1D region, double gain, double offset);
};

/// Continuous piecewise affine map from R to R^m on a chain of intervals.
class PwaFunction1D {
public:
    explicit PwaFunction1D(std::vector<AffinePiece> pieces);

    const std::vector<AffinePiece>& pieces() const noexcept { return pieces_; }
    std::size_t size() const noexcept { return pieces_.size(); }
    std::size_t output_dim() const noexcept { return static_cast<std::size_t>(pieces_.front().gain.size()); }
    Interval1D domain() const;
    std::vector<double> breakpoints() const;
    std::size_t locate(double x) const;

private:
    std::vector<AffinePiece> pieces_;
};

Eigen::VectorXd eval_pwa(const PwaFunction1D& pwa, double x);
double eval_pwa_scalar(const PwaFunction1D& pwa, double x);

/// Input transformation applied before the first affine layer.
struct FeatureMap {
    enum class Kind { Identity, Hv, HqPrime };

    Kind kind = Kind::Identity;
    int n = 1;  // Identity: raw input width; Hv/HqPrime: state dimension
    int m = 0;  // HqPrime: input dimension

    static FeatureMap identity(int d) { return {Kind::Identity, d, 0}; }
    static FeatureMap hv(int n) { return {Kind::Hv, n, 0}; }
    static FeatureMap hq_prime(int n, int m) { return {Kind::HqPrime, n, m}; }

    int raw_dim() const noexcept;
    int feature_dim() const noexcept;
    std::string tag() const;
    static FeatureMap parse_tag(const std::string& tag);

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

inline constexpr int hv_dim(int n) { return n * (n + 3) / 2; }
inline constexpr int hq_prime_dim(int n, int m) { return (n + m) * (n + m + 3) / 2; }

struct Layer {
    Eigen::MatrixXd W;
    Eigen::VectorXd a;
};

/// Feed-forward network: ReLU after every layer except the last.
class ReluNetwork {
public:
    ReluNetwork(FeatureMap feature_map, std::vector<Layer> layers,
                std::map<std::string, std::string> meta = {});

    const FeatureMap& feature_map() const noexcept { return feature_map_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const std::map<std::string, std::string>& meta() const noexcept { return meta_; }

    std::size_t depth() const noexcept { return layers_.size() - 1; }  // hidden layers
    int hidden_width() const { return static_cast<int>(layers_.front().W.rows()); }
    int output_dim() const { return static_cast<int>(layers_.back().W.rows()); }
    std::size_t parameter_count() const;

    ReluNetwork with_meta(std::map<std::string, std::string> meta) const;

    friend bool operator==(const ReluNetwork&, const ReluNetwork&);

private:
    FeatureMap feature_map_;
    std::vector<Layer> layers_;
    std::map<std::string, std::string> meta_;
};

/// Scalar system x+ = A x + B u with stage cost Q x^2 + R u^2,
/// terminal cost P x^2, constraints x in X, u in U, x_N in T.
struct MpcProblem1D {
    double A;
    double B;
    double Q;
    double R;
    double P;
    Interval1D X;
    Interval1D U;
    Interval1D T;
    int N;

    void validate() const;
    double stage_cost(double x, double u) const noexcept { return Q * x * x + R * u * u; }
    double successor(double x, double u) const noexcept { return A * x + B * u; }
    MpcProblem1D with_horizon(int horizon) const;
};

/// The example system x+ = 6/5 x + u used throughout the tests.
MpcProblem1D example_problem(int horizon);

/// Q_N(x, u) = l(x, u) + V_{N-1}(A x + B u)
struct QFunctionSpec {
    MpcProblem1D problem;
    PwqFunction1D v_prev;
};

/// Convex polygon {x : normal_i . x <= offset_i for all i}.
struct Halfspace {
    Eigen::Vector2d normal;
    double offset;
};

class Region2D {
public:
    explicit Region2D(std::vector<Halfspace> halfspaces);

    const std::vector<Halfspace>& halfspaces() const noexcept { return halfspaces_; }
    bool contains(const Eigen::Vector2d& x, double tol = 0.0) const noexcept;
    /// Smallest slack over all halfspaces (>0 strictly inside).
    double min_slack(const Eigen::Vector2d& x) const noexcept;
    const std::vector<Eigen::Vector2d>& vertices() const noexcept { return vertices_; }
    Eigen::Vector2d bbox_min() const;
    Eigen::Vector2d bbox_max() const;

private:
    std::vector<Halfspace> halfspaces_;
    std::vector<Eigen::Vector2d> vertices_;
};

enum class Exec { Serial, Parallel };

}  // namespace pwqnet
