#include "pwqnet/explicit_mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pwqnet {

namespace {

constexpr double kSliverWidth = 1e-10;
constexpr double kDiscriminantClip = -1e-12;

double scaled_tol(double x) { return 1e-12 * std::max(1.0, std::abs(x)); }

/// u = gain * x + offset
struct InputLaw {
    double gain;
    double offset;
};

/// One way of choosing u on an x-interval, with the resulting closed-loop
/// cost expressed as a quadratic in x.
struct Candidate {
    double lo;
    double hi;
    Quadratic cost;
    InputLaw law;
};

/// Shrinks [lo, hi] to the x where lo_b <= alpha x + beta <= hi_b. Returns
/// false if the result is empty.
bool restrict_affine(double alpha, double beta, double lo_b, double hi_b, double& lo, double& hi)
{
    if (std::abs(alpha) < 1e-14) {
        return beta >= lo_b - scaled_tol(lo_b) && beta <= hi_b + scaled_tol(hi_b);
    }
    double a = (lo_b - beta) / alpha;
    double b = (hi_b - beta) / alpha;
    if (alpha < 0.0)
        std::swap(a, b);
    lo = std::max(lo, a);
    hi = std::min(hi, b);
    return lo < hi;
}

/// Candidate built from an input law whose successor is sa x + sb and lands
/// in the piece `piece` of V_k.
std::optional<Candidate> make_candidate(const MpcProblem1D& p, const QuadPiece& piece, InputLaw law,
                                        double sa, double sb, const Interval1D& feasible)
{
    double lo = feasible.lower();
    double hi = feasible.upper();
    if (!restrict_affine(law.gain, law.offset, p.U.lower(), p.U.upper(), lo, hi))
        return std::nullopt;
    if (!restrict_affine(sa, sb, piece.region.lower(), piece.region.upper(), lo, hi))
        return std::nullopt;
    if (hi - lo <= 0.0)
        return std::nullopt;

    const auto& q = piece.q;
    Quadratic cost;
    cost.S = p.Q + p.R * law.gain * law.gain + q.S * sa * sa;
    cost.l = 2.0 * p.R * law.gain * law.offset + 2.0 * q.S * sa * sb + q.l * sa;
    cost.c = p.R * law.offset * law.offset + q.S * sb * sb + q.l * sb + q.c;
    return Candidate{lo, hi, cost, law};
}

std::vector<Candidate> enumerate_candidates(const MpcProblem1D& p, const PwqFunction1D& v_next,
                                            const Interval1D& feasible)
{
    std::vector<Candidate> out;
    auto push = [&](std::optional<Candidate> c) {
        if (c)
            out.push_back(*c);
    };
    for (const auto& piece : v_next.pieces()) {
        const auto& q = piece.q;
        // Stationary point of l(x,u) + q(Ax + Bu) in u.
        const double denom = p.R + q.S * p.B * p.B;
        const InputLaw stationary{-q.S * p.B * p.A / denom, -q.l * p.B / (2.0 * denom)};
        push(make_candidate(p, piece, stationary, p.A + p.B * stationary.gain, p.B * stationary.offset,
                            feasible));
        // Input saturated at either bound of U.
        for (double u : {p.U.lower(), p.U.upper()})
            push(make_candidate(p, piece, InputLaw{0.0, u}, p.A, p.B * u, feasible));
        // Successor pinned to either end of the piece.
        if (p.B != 0.0) {
            for (double s : {piece.region.lower(), piece.region.upper()})
                push(make_candidate(p, piece, InputLaw{-p.A / p.B, s / p.B}, 0.0, s, feasible));
        }
    }
    return out;
}

void add_roots(const Quadratic& a, const Quadratic& b, double lo, double hi, std::vector<double>& pts)
{
    const double dS = a.S - b.S;
    const double dl = a.l - b.l;
    const double dc = a.c - b.c;
    auto keep = [&](double r) {
        if (std::isfinite(r) && r > lo && r < hi)
            pts.push_back(r);
    };
    const double scale = std::max({1.0, std::abs(a.S), std::abs(b.S)});
    if (std::abs(dS) <= 1e-14 * scale) {
        if (dl != 0.0)
            keep(-dc / dl);
        return;
    }
    double disc = dl * dl - 4.0 * dS * dc;
    if (disc < 0.0) {
        if (disc < kDiscriminantClip)
            return;
        disc = 0.0;
    }
    const double sq = std::sqrt(disc);
    const double qq = -0.5 * (dl + (dl >= 0.0 ? sq : -sq));
    if (qq != 0.0) {
        keep(qq / dS);
        keep(dc / qq);
    } else {
        keep(0.0);
    }
}

bool same_piece(const Quadratic& a, const InputLaw& la, const Quadratic& b, const InputLaw& lb)
{
    return std::abs(a.S - b.S) < kMergeTol && std::abs(a.l - b.l) < kMergeTol &&
           std::abs(a.c - b.c) < kMergeTol && std::abs(la.gain - lb.gain) < kMergeTol &&
           std::abs(la.offset - lb.offset) < kMergeTol;
}

struct RawPiece {
    double lo;
    double hi;
    Quadratic cost;
    InputLaw law;
};

/// Lower envelope of the candidates over `feasible`.
std::vector<RawPiece> lower_envelope(const std::vector<Candidate>& cands, const Interval1D& feasible)
{
    std::vector<double> pts{feasible.lower(), feasible.upper()};
    for (const auto& c : cands) {
        pts.push_back(c.lo);
        pts.push_back(c.hi);
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
        for (std::size_t j = i + 1; j < cands.size(); ++j) {
            const double lo = std::max(cands[i].lo, cands[j].lo);
            const double hi = std::min(cands[i].hi, cands[j].hi);
            if (lo < hi)
                add_roots(cands[i].cost, cands[j].cost, lo, hi, pts);
        }
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> grid;
    for (double t : pts) {
        if (t < feasible.lower() || t > feasible.upper())
            continue;
        if (!grid.empty() && t - grid.back() <= scaled_tol(t))
            continue;
        grid.push_back(t);
    }
    grid.back() = feasible.upper();

    std::vector<RawPiece> pieces;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double t0 = grid[k];
        const double t1 = grid[k + 1];
        const double mid = 0.5 * (t0 + t1);
        const Candidate* best = nullptr;
        double best_cost = std::numeric_limits<double>::infinity();
        for (const auto& c : cands) {
            if (c.lo > t0 + scaled_tol(t0) || c.hi < t1 - scaled_tol(t1))
                continue;
            const double v = c.cost(mid);
            if (v < best_cost) {
                best_cost = v;
                best = &c;
            }
        }
        if (best == nullptr) {
            std::ostringstream os;
            os << "no admissible input law on [" << t0 << ", " << t1 << "]";
            throw Error(ErrorCode::Infeasible, os.str());
        }
        if (!pieces.empty() && same_piece(pieces.back().cost, pieces.back().law, best->cost, best->law))
            pieces.back().hi = t1;
        else
            pieces.push_back({t0, t1, best->cost, best->law});
    }

    // Slivers from near-tangent roots carry no information; fold them into a
    // neighbour.
    std::vector<RawPiece> cleaned;
    for (const auto& p : pieces) {
        if (p.hi - p.lo < kSliverWidth) {
            if (!cleaned.empty()) {
                cleaned.back().hi = p.hi;
                continue;
            }
        }
        if (!cleaned.empty() && cleaned.back().hi - cleaned.back().lo < kSliverWidth) {
            const double lo = cleaned.back().lo;
            cleaned.back() = p;
            cleaned.back().lo = lo;
            continue;
        }
        if (!cleaned.empty() && same_piece(cleaned.back().cost, cleaned.back().law, p.cost, p.law)) {
            cleaned.back().hi = p.hi;
            continue;
        }
        cleaned.push_back(p);
    }
    return cleaned;
}

void check_convex(const PwqFunction1D& v, int stage)
{
    const auto& ps = v.pieces();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i].q.S < -1e-12) {
            std::ostringstream os;
            os << "stage " << stage << " piece " << i << " has negative curvature " << ps[i].q.S;
            throw Error(ErrorCode::NonConvex, os.str());
        }
        if (i + 1 < ps.size()) {
            const double x = ps[i].region.upper();
            const double left = ps[i].q.slope(x);
            const double right = ps[i + 1].q.slope(x);
            if (left > right + 1e-7 * std::max(1.0, std::abs(left))) {
                std::ostringstream os;
                os << "stage " << stage << " slope drops at x = " << x << " (" << left << " -> " << right << ")";
                throw Error(ErrorCode::NonConvex, os.str());
            }
        }
    }
}

}  // namespace

std::optional<Interval1D> feasible_predecessor(const MpcProblem1D& p, const Interval1D& next)
{
    // A x must lie in next - B U.
    const double bu_lo = std::min(p.B * p.U.lower(), p.B * p.U.upper());
    const double bu_hi = std::max(p.B * p.U.lower(), p.B * p.U.upper());
    const double lo_b = next.lower() - bu_hi;
    const double hi_b = next.upper() - bu_lo;
    double lo = p.X.lower();
    double hi = p.X.upper();
    if (p.A == 0.0) {
        if (lo_b > 0.0 || hi_b < 0.0)
            return std::nullopt;
    } else {
        double a = lo_b / p.A;
        double b = hi_b / p.A;
        if (p.A < 0.0)
            std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    }
    if (!(hi - lo > kSliverWidth))
        return std::nullopt;
    return Interval1D(lo, hi);
}

std::vector<DpStageResult> dp_solve(const MpcProblem1D& problem)
{
    problem.validate();
    std::vector<DpStageResult> stages;
    stages.reserve(static_cast<std::size_t>(problem.N) + 1);
    stages.push_back({PwqFunction1D({QuadPiece{problem.T, Quadratic{problem.P, 0.0, 0.0}}}), std::nullopt,
                      problem.T});

    for (int k = 1; k <= problem.N; ++k) {
        const auto& prev = stages.back();
        const auto feasible = feasible_predecessor(problem, prev.feasible);
        if (!feasible) {
            std::ostringstream os;
            os << "feasible set of stage " << k << " is empty";
            throw Error(ErrorCode::Infeasible, os.str());
        }
        const auto cands = enumerate_candidates(problem, prev.value, *feasible);
        const auto raw = lower_envelope(cands, *feasible);

        std::vector<QuadPiece> vpieces;
        std::vector<AffinePiece> upieces;
        vpieces.reserve(raw.size());
        upieces.reserve(raw.size());
        for (const auto& r : raw) {
            Interval1D region(r.lo, r.hi);
            vpieces.push_back({region, r.cost});
            upieces.push_back(AffinePiece::scalar(region, r.law.gain, r.law.offset));
        }
        PwqFunction1D value(std::move(vpieces));
        check_convex(value, k);
        stages.push_back({std::move(value), PwaFunction1D(std::move(upieces)), *feasible});
    }
    return stages;
}

namespace {

struct GridSearch {
    const MpcProblem1D& p;
    std::vector<double> lo;
    std::vector<double> step;
    int grid;
    std::vector<double> u;
    std::vector<double> best_u;
    double best;

    bool in(const Interval1D& I, double v) const
    {
        return v >= I.lower() - scaled_tol(I.lower()) && v <= I.upper() + scaled_tol(I.upper());
    }

    void search(int k, double x, double cost)
    {
        if (!in(p.X, x))
            return;
        for (int i = 0; i < grid; ++i) {
            const double uk = std::clamp(lo[k] + step[k] * i, p.U.lower(), p.U.upper());
            const double c = cost + p.stage_cost(x, uk);
            if (c >= best)
                continue;  // remaining terms are nonnegative
            const double next = p.successor(x, uk);
            u[k] = uk;
            if (k + 1 == p.N) {
                if (!in(p.T, next))
                    continue;
                const double total = c + p.P * next * next;
                if (total < best) {
                    best = total;
                    best_u = u;
                }
            } else {
                search(k + 1, next, c);
            }
        }
    }
};

}  // namespace

double brute_force_value(const MpcProblem1D& problem, double x, const BruteForceOptions& opts)
{
    const auto n = static_cast<std::size_t>(problem.N);
    const int grid = std::max(opts.grid, 2);
    std::vector<double> center(n, problem.U.midpoint());
    std::vector<double> half(n, 0.5 * problem.U.width());

    GridSearch gs{problem, std::vector<double>(n), std::vector<double>(n), grid,
                  std::vector<double>(n), {}, std::numeric_limits<double>::infinity()};
    for (int pass = 0; pass < std::max(opts.passes, 1); ++pass) {
        for (std::size_t k = 0; k < n; ++k) {
            // Keep the bracket inside U so its endpoints are grid points.
            double lo = std::max(center[k] - half[k], problem.U.lower());
            double hi = std::min(center[k] + half[k], problem.U.upper());
            gs.lo[k] = lo;
            gs.step[k] = (hi - lo) / (grid - 1);
        }
        gs.search(0, x, 0.0);
        if (gs.best_u.empty())
            return std::numeric_limits<double>::infinity();
        center = gs.best_u;
        for (auto& h : half)
            h /= 10.0;
    }
    return gs.best;
}

std::vector<double> brute_force_values(const MpcProblem1D& problem, std::span<const double> xs,
                                       const BruteForceOptions& opts, Exec exec)
{
    std::vector<double> out(xs.size());
    const auto count = static_cast<long>(xs.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (long i = 0; i < count; ++i)
            out[static_cast<std::size_t>(i)] = brute_force_value(problem, xs[static_cast<std::size_t>(i)], opts);
    } else {
        for (long i = 0; i < count; ++i)
            out[static_cast<std::size_t>(i)] = brute_force_value(problem, xs[static_cast<std::size_t>(i)], opts);
    }
    return out;
}

double q_eval(const QFunctionSpec& spec, double x, double u)
{
    const auto& p = spec.problem;
    if (!p.U.contains(u, scaled_tol(u))) {
        std::ostringstream os;
        os << "input u = " << u << " outside U";
        throw Error(ErrorCode::OutOfDomain, os.str());
    }
    double next = p.successor(x, u);
    const auto dom = spec.v_prev.domain();
    if (!dom.contains(next, scaled_tol(next))) {
        std::ostringstream os;
        os << "successor " << next << " of (x, u) = (" << x << ", " << u << ") outside [" << dom.lower() << ", "
           << dom.upper() << "]";
        throw Error(ErrorCode::OutOfDomain, os.str());
    }
    next = std::clamp(next, dom.lower(), dom.upper());
    return p.stage_cost(x, u) + eval_pwq(spec.v_prev, next);
}

QFunctionSpec make_q_spec(const MpcProblem1D& problem)
{
    problem.validate();
    if (problem.N == 1)
        return {problem, PwqFunction1D({QuadPiece{problem.T, Quadratic{problem.P, 0.0, 0.0}}})};
    auto stages = dp_solve(problem.with_horizon(problem.N - 1));
    return {problem, std::move(stages.back().value)};
}

}  // namespace pwqnet
