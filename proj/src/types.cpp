#include "pwqnet/types.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pwqnet {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ChainBroken: return "ChainBroken";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NotChained: return "NotChained";
    case ErrorCode::UnboundedRegion: return "UnboundedRegion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FeatureMapMismatch: return "FeatureMapMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NonConvex: return "NonConvex";
    case ErrorCode::RegionTooNarrow: return "RegionTooNarrow";
    case ErrorCode::SamplingStalled: return "SamplingStalled";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

Interval1D::Interval1D(double lower, double upper) : lower_(lower), upper_(upper)
{
    if (!std::isfinite(lower) || !std::isfinite(upper))
        throw Error(ErrorCode::UnboundedRegion, "interval bounds must be finite");
    if (!(lower < upper)) {
        std::ostringstream os;
        os << "interval [" << lower << ", " << upper << "] is not proper";
        throw Error(ErrorCode::InvalidArgument, os.str());
    }
}

namespace {

// Adjacent bounds closer than this are treated as the same breakpoint and
// snapped together.
bool touches(double upper, double next_lower)
{
    return std::abs(upper - next_lower) <= 1e-12 * std::max(1.0, std::abs(upper));
}

template <class Piece>
void check_chain(std::vector<Piece>& pieces, ErrorCode code)
{
    if (pieces.empty())
        throw Error(code, "piecewise function needs at least one piece");
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
        const double hi = pieces[i].region.upper();
        const double lo = pieces[i + 1].region.lower();
        if (!touches(hi, lo)) {
            std::ostringstream os;
            os << "piece " << i << " ends at " << hi << " but piece " << i + 1 << " starts at " << lo;
            throw Error(code, os.str());
        }
        pieces[i + 1].region = Interval1D(hi, pieces[i + 1].region.upper());
    }
}

template <class Piece>
std::size_t locate_piece(const std::vector<Piece>& pieces, double x)
{
    // Regions are sorted; the first region whose upper bound is >= x holds x,
    // which gives the lower index at shared breakpoints.
    auto it = std::lower_bound(pieces.begin(), pieces.end(), x,
                               [](const Piece& p, double v) { return p.region.upper() < v; });
    if (it == pieces.end() || x < it->region.lower() || std::isnan(x)) {
        std::ostringstream os;
        os << "x = " << x << " outside [" << pieces.front().region.lower() << ", "
           << pieces.back().region.upper() << "]";
        throw Error(ErrorCode::OutOfDomain, os.str());
    }
    return static_cast<std::size_t>(it - pieces.begin());
}

template <class Piece>
std::vector<double> interior_breakpoints(const std::vector<Piece>& pieces)
{
    std::vector<double> out;
    out.reserve(pieces.size());
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
        out.push_back(pieces[i].region.upper());
    return out;
}

}  // namespace

PwqFunction1D::PwqFunction1D(std::vector<QuadPiece> pieces) : pieces_(std::move(pieces))
{
    check_chain(pieces_, ErrorCode::ChainBroken);
}

Interval1D PwqFunction1D::domain() const
{
    return {pieces_.front().region.lower(), pieces_.back().region.upper()};
}

std::vector<double> PwqFunction1D::breakpoints() const { return interior_breakpoints(pieces_); }

std::size_t PwqFunction1D::locate(double x) const { return locate_piece(pieces_, x); }

double eval_pwq(const PwqFunction1D& pwq, double x)
{
    return pwq.pieces()[pwq.locate(x)].q(x);
}

PwqFunction1D canonicalize(const PwqFunction1D& pwq, double eps_merge)
{
    std::vector<QuadPiece> out;
    out.reserve(pwq.size());
    for (const auto& piece : pwq.pieces()) {
        if (!out.empty()) {
            const Quadratic& prev = out.back().q;
            if (std::abs(prev.S - piece.q.S) < eps_merge && std::abs(prev.l - piece.q.l) < eps_merge &&
                std::abs(prev.c - piece.q.c) < eps_merge) {
                out.back().region = Interval1D(out.back().region.lower(), piece.region.upper());
                continue;
            }
        }
        out.push_back(piece);
    }
    return PwqFunction1D(std::move(out));
}

AffinePiece AffinePiece::scalar(Interval1D region, double gain, double offset)
{
    return {region, Eigen::VectorXd::Constant(1, gain), Eigen::VectorXd::Constant(1, offset)};
}

PwaFunction1D::PwaFunction1D(std::vector<AffinePiece> pieces) : pieces_(std::move(pieces))
{
    check_chain(pieces_, ErrorCode::NotChained);
    const auto m = pieces_.front().gain.size();
    for (const auto& p : pieces_)
        if (p.gain.size() != m || p.offset.size() != m || m == 0)
            throw Error(ErrorCode::DimensionMismatch, "all pieces need gain/offset of equal length m >= 1");
}

Interval1D PwaFunction1D::domain() const
{
    return {pieces_.front().region.lower(), pieces_.back().region.upper()};
}

std::vector<double> PwaFunction1D::breakpoints() const { return interior_breakpoints(pieces_); }

std::size_t PwaFunction1D::locate(double x) const { return locate_piece(pieces_, x); }

Eigen::VectorXd eval_pwa(const PwaFunction1D& pwa, double x)
{
    const auto& p = pwa.pieces()[pwa.locate(x)];
    return p.gain * x + p.offset;
}

double eval_pwa_scalar(const PwaFunction1D& pwa, double x)
{
    const auto& p = pwa.pieces()[pwa.locate(x)];
    return p.gain[0] * x + p.offset[0];
}

int FeatureMap::raw_dim() const noexcept
{
    switch (kind) {
    case Kind::Identity: return n;
    case Kind::Hv: return n;
    case Kind::HqPrime: return n + m;
    }
    return 0;
}

int FeatureMap::feature_dim() const noexcept
{
    switch (kind) {
    case Kind::Identity: return n;
    case Kind::Hv: return hv_dim(n);
    case Kind::HqPrime: return hq_prime_dim(n, m);
    }
    return 0;
}

std::string FeatureMap::tag() const
{
    switch (kind) {
    case Kind::Identity: return "identity(" + std::to_string(n) + ")";
    case Kind::Hv: return "hv(" + std::to_string(n) + ")";
    case Kind::HqPrime: return "hq_prime(" + std::to_string(n) + "," + std::to_string(m) + ")";
    }
    return "?";
}

FeatureMap FeatureMap::parse_tag(const std::string& tag)
{
    const auto open = tag.find('(');
    const auto close = tag.find(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw Error(ErrorCode::ParseError, "bad feature map tag '" + tag + "'");
    const std::string name = tag.substr(0, open);
    const std::string args = tag.substr(open + 1, close - open - 1);
    int a = 0;
    int b = 0;
    const auto comma = args.find(',');
    try {
        a = std::stoi(args.substr(0, comma));
        if (comma != std::string::npos)
            b = std::stoi(args.substr(comma + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad feature map arguments in '" + tag + "'");
    }
    FeatureMap fm;
    if (name == "identity" && comma == std::string::npos)
        fm = identity(a);
    else if (name == "hv" && comma == std::string::npos)
        fm = hv(a);
    else if (name == "hq_prime" && comma != std::string::npos)
        fm = hq_prime(a, b);
    else
        throw Error(ErrorCode::ParseError, "unknown feature map tag '" + tag + "'");
    if (fm.n < 1 || (fm.kind == Kind::HqPrime && fm.m < 1))
        throw Error(ErrorCode::ParseError, "feature map dimensions must be positive in '" + tag + "'");
    return fm;
}

ReluNetwork::ReluNetwork(FeatureMap feature_map, std::vector<Layer> layers,
                         std::map<std::string, std::string> meta)
    : feature_map_(feature_map), layers_(std::move(layers)), meta_(std::move(meta))
{
    if (layers_.size() < 2)
        throw Error(ErrorCode::ShapeMismatch, "network needs at least one hidden layer and an output layer");
    Eigen::Index width = feature_map_.feature_dim();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& L = layers_[i];
        if (L.W.cols() != width || L.a.size() != L.W.rows() || L.W.rows() == 0) {
            std::ostringstream os;
            os << "layer " << i << " has W " << L.W.rows() << "x" << L.W.cols() << " and a of length "
               << L.a.size() << ", expected " << width << " input columns";
            throw Error(ErrorCode::ShapeMismatch, os.str());
        }
        width = L.W.rows();
    }
}

std::size_t ReluNetwork::parameter_count() const
{
    std::size_t count = 0;
    for (const auto& L : layers_)
        count += static_cast<std::size_t>(L.W.size() + L.a.size());
    return count;
}

ReluNetwork ReluNetwork::with_meta(std::map<std::string, std::string> meta) const
{
    return ReluNetwork(feature_map_, layers_, std::move(meta));
}

bool operator==(const ReluNetwork& lhs, const ReluNetwork& rhs)
{
    if (!(lhs.feature_map_ == rhs.feature_map_) || lhs.layers_.size() != rhs.layers_.size() ||
        lhs.meta_ != rhs.meta_)
        return false;
    for (std::size_t i = 0; i < lhs.layers_.size(); ++i) {
        const auto& a = lhs.layers_[i];
        const auto& b = rhs.layers_[i];
        if (a.W.rows() != b.W.rows() || a.W.cols() != b.W.cols() || a.a.size() != b.a.size())
            return false;
        if (a.W != b.W || a.a != b.a)
            return false;
    }
    return true;
}

void MpcProblem1D::validate() const
{
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(A) || !finite(B) || !finite(Q) || !finite(R) || !finite(P))
        throw Error(ErrorCode::InvalidArgument, "problem coefficients must be finite");
    if (Q < 0.0 || P < 0.0)
        throw Error(ErrorCode::InvalidArgument, "Q and P must be nonnegative");
    if (!(R > 0.0))
        throw Error(ErrorCode::InvalidArgument, "R must be positive");
    if (!X.contains(T))
        throw Error(ErrorCode::InvalidArgument, "terminal set T must lie inside X");
    if (N < 1)
        throw Error(ErrorCode::InvalidArgument, "horizon N must be a positive integer");
}

MpcProblem1D MpcProblem1D::with_horizon(int horizon) const
{
    MpcProblem1D p = *this;
    p.N = horizon;
    return p;
}

MpcProblem1D example_problem(int horizon)
{
    return {6.0 / 5.0, 1.0, 19.0 / 5.0, 1.0, 5.0,
            Interval1D(-10.0, 10.0), Interval1D(-1.0, 1.0), Interval1D(-1.0, 1.0), horizon};
}

Region2D::Region2D(std::vector<Halfspace> halfspaces) : halfspaces_(std::move(halfspaces))
{
    if (halfspaces_.size() < 3)
        throw Error(ErrorCode::InvalidArgument, "a bounded polygon needs at least three halfspaces");
    for (std::size_t i = 0; i < halfspaces_.size(); ++i) {
        for (std::size_t j = i + 1; j < halfspaces_.size(); ++j) {
            Eigen::Matrix2d M;
            M.row(0) = halfspaces_[i].normal.transpose();
            M.row(1) = halfspaces_[j].normal.transpose();
            if (std::abs(M.determinant()) < 1e-14)
                continue;
            const Eigen::Vector2d v = M.partialPivLu().solve(
                Eigen::Vector2d(halfspaces_[i].offset, halfspaces_[j].offset));
            if (contains(v, 1e-12))
                vertices_.push_back(v);
        }
    }
    if (vertices_.size() < 3)
        throw Error(ErrorCode::InvalidArgument, "halfspaces do not describe a bounded 2-D region");
}

bool Region2D::contains(const Eigen::Vector2d& x, double tol) const noexcept
{
    return min_slack(x) >= -tol;
}

double Region2D::min_slack(const Eigen::Vector2d& x) const noexcept
{
    double slack = std::numeric_limits<double>::infinity();
    for (const auto& h : halfspaces_)
        slack = std::min(slack, h.offset - h.normal.dot(x));
    return slack;
}

Eigen::Vector2d Region2D::bbox_min() const
{
    Eigen::Vector2d lo = vertices_.front();
    for (const auto& v : vertices_)
        lo = lo.cwiseMin(v);
    return lo;
}

Eigen::Vector2d Region2D::bbox_max() const
{
    Eigen::Vector2d hi = vertices_.front();
    for (const auto& v : vertices_)
        hi = hi.cwiseMax(v);
    return hi;
}

}  // namespace pwqnet
