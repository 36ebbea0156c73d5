#include "pwqnet/verify.hpp"

#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace pwqnet {

bool Report::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void Report::append(const Report& other)
{
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

std::string Report::to_text() const
{
    std::ostringstream os;
    os << std::setprecision(6);
    for (const auto& c : checks) {
        os << "check=" << c.name << " max_error=" << c.max_error << " location=(";
        for (std::size_t i = 0; i < c.location.size(); ++i)
            os << (i ? "," : "") << std::setprecision(12) << c.location[i] << std::setprecision(6);
        os << ") pass=" << (c.pass ? "true" : "false");
        if (!c.detail.empty())
            os << " detail=\"" << c.detail << "\"";
        os << "\n";
    }
    os << "overall pass=" << (passed() ? "true" : "false") << "\n";
    return os.str();
}

std::string Report::to_json() const
{
    nlohmann::json doc;
    doc["pass"] = passed();
    doc["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        doc["checks"].push_back(
            {{"name", c.name}, {"max_error", c.max_error}, {"location", c.location}, {"pass", c.pass}, {"detail", c.detail}});
    return doc.dump(2);
}

namespace {

constexpr double kInward = 1e-12;

std::vector<double> grid_1d(const Interval1D& dom, const std::vector<double>& breakpoints, int density)
{
    std::vector<double> pts;
    const int n = std::max(density, 2);
    pts.reserve(static_cast<std::size_t>(n) + 3 * breakpoints.size() + 4);
    for (int i = 0; i < n; ++i)
        pts.push_back(dom.lower() + dom.width() * i / (n - 1));
    pts.back() = dom.upper();
    pts.push_back(dom.lower() + kInward);
    pts.push_back(dom.upper() - kInward);
    for (double b : breakpoints) {
        pts.push_back(b);
        pts.push_back(b - kInward);
        pts.push_back(b + kInward);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

struct Sample {
    std::vector<double> point;
    double error;
};

CheckResult worst_of(const std::string& name, const std::vector<std::vector<double>>& points,
                     const std::vector<double>& errors, double tol)
{
    CheckResult r{name, 0.0, {}, true, ""};
    std::size_t arg = 0;
    bool any_nan = false;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (std::isnan(errors[i])) {
            any_nan = true;
            arg = i;
            break;
        }
        if (errors[i] > r.max_error) {
            r.max_error = errors[i];
            arg = i;
        }
    }
    if (!points.empty())
        r.location = points[arg];
    if (any_nan)
        r.max_error = std::numeric_limits<double>::quiet_NaN();
    r.pass = !any_nan && r.max_error < tol;
    r.detail = std::to_string(points.size()) + " points";
    return r;
}

template <class F>
std::vector<double> evaluate_errors(const std::vector<std::vector<double>>& points, F&& error_at, Exec exec)
{
    std::vector<double> errors(points.size());
    const auto count = static_cast<long>(points.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < count; ++i)
            errors[static_cast<std::size_t>(i)] = error_at(points[static_cast<std::size_t>(i)]);
    } else {
        for (long i = 0; i < count; ++i)
            errors[static_cast<std::size_t>(i)] = error_at(points[static_cast<std::size_t>(i)]);
    }
    return errors;
}

std::vector<std::vector<double>> q_grid(const QFunctionSpec& spec, int density)
{
    const auto& p = spec.problem;
    const auto dom = spec.v_prev.domain();
    std::vector<std::vector<double>> pts;
    const auto xs_range = feasible_predecessor(p, dom);
    if (!xs_range)
        return pts;
    const int n = std::max(density, 2);
    std::vector<double> marks = spec.v_prev.breakpoints();
    marks.push_back(dom.lower());
    marks.push_back(dom.upper());
    auto feasible = [&](double x, double u) {
        const double s = p.successor(x, u);
        return p.U.contains(u) && s >= dom.lower() && s <= dom.upper();
    };
    for (int i = 0; i < n; ++i) {
        const double x = xs_range->lower() + xs_range->width() * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double u = p.U.lower() + p.U.width() * j / (n - 1);
            if (feasible(x, u))
                pts.push_back({x, u});
        }
        // Inputs that put the successor on (or just beside) a breakpoint.
        if (p.B != 0.0) {
            for (double b : marks) {
                for (double s : {b - kInward, b, b + kInward}) {
                    const double u = (s - p.A * x) / p.B;
                    if (feasible(x, u))
                        pts.push_back({x, u});
                }
            }
        }
    }
    return pts;
}

}  // namespace

Report check_exact(const ReluNetwork& net, const ExactReference& reference, int grid_density, double tol, Exec exec)
{
    Report report;
    std::vector<std::vector<double>> points;
    std::vector<double> errors;

    if (const auto* pwq = std::get_if<PwqFunction1D>(&reference)) {
        for (double x : grid_1d(pwq->domain(), pwq->breakpoints(), grid_density))
            points.push_back({x});
        errors = evaluate_errors(points, [&](const std::vector<double>& pt) {
            return std::abs(forward_scalar(net, pt) - eval_pwq(*pwq, pt[0]));
        }, exec);
    } else if (const auto* pwa = std::get_if<PwaFunction1D>(&reference)) {
        for (double x : grid_1d(pwa->domain(), pwa->breakpoints(), grid_density))
            points.push_back({x});
        errors = evaluate_errors(points, [&](const std::vector<double>& pt) {
            const Eigen::VectorXd diff = forward(net, pt) - eval_pwa(*pwa, pt[0]);
            return diff.cwiseAbs().maxCoeff();
        }, exec);
    } else {
        const auto& spec = std::get<QFunctionSpec>(reference);
        points = q_grid(spec, grid_density);
        errors = evaluate_errors(points, [&](const std::vector<double>& pt) {
            return std::abs(forward_scalar(net, pt) - q_eval(spec, pt[0], pt[1]));
        }, exec);
    }
    if (points.empty()) {
        report.add({"exact", 0.0, {}, false, "reference domain produced no grid points"});
        return report;
    }
    report.add(worst_of("exact", points, errors, tol));
    return report;
}

Report check_residual_pwa(const std::function<double(double)>& f, const std::vector<Interval1D>& regions,
                          double step, double tol, int centers_per_region)
{
    Report report;
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const auto& I = regions[r];
        if (step > I.width() / 4.0) {
            std::ostringstream os;
            os << "region " << r << " of width " << I.width() << " cannot hold a stencil of step " << step;
            throw Error(ErrorCode::RegionTooNarrow, os.str());
        }
        const int n = std::max(centers_per_region, 2);
        // Stencils stay strictly inside; step <= width / 4 leaves room for them.
        const double lo = I.lower() + 2.0 * step;
        const double hi = I.upper() - 2.0 * step;
        std::vector<std::vector<double>> pts;
        std::vector<double> errs;
        for (int i = 0; i < n; ++i) {
            const double c = lo + (hi - lo) * i / (n - 1);
            pts.push_back({c});
            errs.push_back(std::abs(f(c + step) - 2.0 * f(c) + f(c - step)));
        }
        auto res = worst_of("residual_pwa[" + std::to_string(r) + "]", pts, errs, tol);
        res.detail = std::to_string(n) + " stencils, step " + std::to_string(step);
        report.add(std::move(res));
    }
    return report;
}

Report check_residual_pwa(const std::function<double(double, double)>& f, const std::vector<Region2D>& regions,
                          double step, double tol, int centers_per_axis)
{
    Report report;
    const Eigen::Vector2d dirs[4] = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {1.0, -1.0}};
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const auto& region = regions[r];
        const Eigen::Vector2d lo = region.bbox_min();
        const Eigen::Vector2d hi = region.bbox_max();
        const int n = std::max(centers_per_axis, 2);
        std::vector<std::vector<double>> pts;
        std::vector<double> errs;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const Eigen::Vector2d c(lo.x() + (hi.x() - lo.x()) * i / (n - 1),
                                        lo.y() + (hi.y() - lo.y()) * j / (n - 1));
                bool inside = true;
                for (int di = -1; di <= 1 && inside; ++di)
                    for (int dj = -1; dj <= 1 && inside; ++dj)
                        inside = region.contains(c + step * Eigen::Vector2d(di, dj));
                if (!inside)
                    continue;
                double worst = 0.0;
                const double fc = f(c.x(), c.y());
                for (const auto& d : dirs) {
                    const Eigen::Vector2d p = c + step * d;
                    const Eigen::Vector2d m = c - step * d;
                    worst = std::max(worst, std::abs(f(p.x(), p.y()) - 2.0 * fc + f(m.x(), m.y())));
                }
                pts.push_back({c.x(), c.y()});
                errs.push_back(worst);
            }
        }
        if (pts.empty()) {
            std::ostringstream os;
            os << "region " << r << " holds no stencil of step " << step;
            throw Error(ErrorCode::RegionTooNarrow, os.str());
        }
        auto res = worst_of("residual_pwa[" + std::to_string(r) + "]", pts, errs, tol);
        res.detail = std::to_string(pts.size()) + " stencils, step " + std::to_string(step);
        report.add(std::move(res));
    }
    return report;
}

Report check_value_function(const PwqFunction1D& pwq)
{
    Report report;
    const auto& ps = pwq.pieces();

    CheckResult cont{"continuity", 0.0, {}, true, ""};
    CheckResult curv{"curvature", 0.0, {}, true, ""};
    CheckResult slope{"slope_monotone", 0.0, {}, true, ""};
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double neg = std::max(0.0, -ps[i].q.S);
        if (neg > curv.max_error || (i == 0)) {
            if (neg > curv.max_error)
                curv.max_error = neg;
            curv.location = {ps[i].region.midpoint()};
        }
        if (i + 1 == ps.size())
            continue;
        const double b = ps[i].region.upper();
        const double jump = std::abs(ps[i].q(b) - ps[i + 1].q(b));
        if (jump > cont.max_error || cont.location.empty()) {
            cont.max_error = std::max(cont.max_error, jump);
            cont.location = {b};
        }
        const double drop = std::max(0.0, ps[i].q.slope(b) - ps[i + 1].q.slope(b));
        if (drop > slope.max_error || slope.location.empty()) {
            slope.max_error = std::max(slope.max_error, drop);
            slope.location = {b};
        }
    }
    cont.pass = cont.max_error < kContinuityTol;
    curv.pass = curv.max_error <= 1e-12;
    slope.pass = slope.max_error <= 1e-9;
    report.add(cont);
    report.add(curv);
    report.add(slope);
    return report;
}

}  // namespace pwqnet
