#include "pwqnet/showcase2d.hpp"

#include "pwqnet/net_eval.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace pwqnet::showcase {

namespace {

/// sign * x_k * (c1 x1 + c2 x2 + c0), weighted by `weight` in the output.
struct ProductTerm {
    int k;
    double sign;
    double c1;
    double c2;
    double c0;
    double weight;
};

constexpr std::array<ProductTerm, 8> kTerms{{
    {0, 1.0, -1.0, 1.0, -1.0, -1.0},
    {1, 1.0, -1.0, -1.0, -1.0, -1.0},
    {0, 1.0, -1.0, -1.0, -1.0, -1.0},
    {1, 1.0, 1.0, -1.0, -1.0, -1.0},
    {1, -1.0, 1.0, 1.0, -1.0, -0.5},
    {0, -1.0, 1.0, 1.0, -1.0, -0.5},
    {1, -1.0, -1.0, 1.0, -1.0, -0.5},
    {0, -1.0, 1.0, -1.0, -1.0, -0.5},
}};

// Published first-layer weights over (x1, x2, x1^2, x1 x2, x2^2).
constexpr double kPrintedW1[8][5] = {
    {-1, 0, -1, 1, 0}, {0, -1, 0, -1, -1}, {-1, 0, -1, -1, 0}, {0, -1, 0, 1, -1},
    {0, 1, 0, -1, -1}, {1, 0, -1, -1, 0},  {0, 1, 0, 1, -1},   {1, 0, -1, 1, 0},
};
constexpr double kPrintedW2[8] = {-1, -1, -1, -1, -0.5, -0.5, -0.5, -0.5};

Halfspace hs(double n1, double n2, double offset) { return {Eigen::Vector2d(n1, n2), offset}; }

}  // namespace

const std::vector<Region2D>& regions()
{
    static const std::vector<Region2D> r{
        Region2D({hs(-1, 0, 0), hs(0, -1, 0), hs(1, 1, 1)}),
        Region2D({hs(1, 0, 0), hs(0, -1, 0), hs(-1, 1, 1)}),
        Region2D({hs(1, 0, 0), hs(0, 1, 0), hs(-1, -1, 1)}),
        Region2D({hs(-1, 0, 0), hs(0, 1, 0), hs(1, -1, 1)}),
    };
    return r;
}

std::size_t region_of(const Eigen::Vector2d& x)
{
    const auto& rs = regions();
    for (std::size_t i = 0; i < rs.size(); ++i)
        if (rs[i].contains(x, 1e-12))
            return i;
    std::ostringstream os;
    os << "(" << x.x() << ", " << x.y() << ") lies outside all four regions";
    throw Error(ErrorCode::OutOfDomain, os.str());
}

double fictive_v(const Eigen::Vector2d& x)
{
    static constexpr double coeff[4][2] = {{1, 1}, {2, 1}, {2, 2}, {1, 2}};
    const auto i = region_of(x);
    return coeff[i][0] * x.x() * x.x() + coeff[i][1] * x.y() * x.y();
}

ReluNetwork build_showcase_net()
{
    Layer hidden{Eigen::MatrixXd::Zero(8, 5), Eigen::VectorXd::Zero(8)};
    Layer out{Eigen::MatrixXd::Zero(1, 8), Eigen::VectorXd::Zero(1)};
    for (int i = 0; i < 8; ++i) {
        const auto& t = kTerms[static_cast<std::size_t>(i)];
        // Expand sign * x_k * (c1 x1 + c2 x2 + c0) in (x1, x2, x1^2, x1 x2, x2^2).
        hidden.W(i, t.k) += t.sign * t.c0;
        if (t.k == 0) {
            hidden.W(i, 2) += t.sign * t.c1;
            hidden.W(i, 3) += t.sign * t.c2;
        } else {
            hidden.W(i, 3) += t.sign * t.c1;
            hidden.W(i, 4) += t.sign * t.c2;
        }
        out.W(0, i) = t.weight;
    }
    return ReluNetwork(FeatureMap::hv(2), {std::move(hidden), std::move(out)},
                       {{"construction", "showcase2d"}, {"domain", "|x1| + |x2| <= 1"}});
}

const std::array<std::array<int, 4>, 4>& expected_active()
{
    static const std::array<std::array<int, 4>, 4> active{{
        {4, 5, 6, 7},
        {0, 2, 4, 6},
        {0, 1, 2, 3},
        {1, 3, 5, 7},
    }};
    return active;
}

Report verify_showcase()
{
    const auto net = build_showcase_net();
    Report report;

    auto residual = [&](double x1, double x2) {
        const double in[2] = {x1, x2};
        return fictive_v(Eigen::Vector2d(x1, x2)) - forward_scalar(net, in);
    };
    report.append(check_residual_pwa(residual, regions(), kResidualStep, 1e-9));

    // Activation pattern on interior samples.
    for (std::size_t r = 0; r < regions().size(); ++r) {
        const auto& region = regions()[r];
        const Eigen::Vector2d lo = region.bbox_min();
        const Eigen::Vector2d hi = region.bbox_max();
        CheckResult res{"activation_pattern[" + std::to_string(r) + "]", 0.0, {}, true, ""};
        int samples = 0;
        const int n = 60;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const Eigen::Vector2d x(lo.x() + (hi.x() - lo.x()) * (i + 0.5) / n,
                                        lo.y() + (hi.y() - lo.y()) * (j + 0.5) / n);
                if (region.min_slack(x) <= 1e-6)
                    continue;
                ++samples;
                const double in[2] = {x.x(), x.y()};
                const Eigen::VectorXd z = hidden_preactivations(net, in);
                std::array<int, 4> got{};
                int count = 0;
                for (int k = 0; k < 8; ++k)
                    if (z[k] > 0.0) {
                        if (count < 4)
                            got[static_cast<std::size_t>(count)] = k;
                        ++count;
                    }
                const bool ok = count == 4 && got == expected_active()[r];
                if (!ok && res.pass) {
                    res.pass = false;
                    res.max_error = std::abs(count - 4) + 1.0;
                    res.location = {x.x(), x.y()};
                    res.detail = std::to_string(count) + " active neurons";
                }
            }
        }
        if (res.pass)
            res.detail = std::to_string(samples) + " interior samples, 4 active each";
        report.add(std::move(res));
    }

    CheckResult weights{"printed_weights", 0.0, {}, true, ""};
    const auto& W1 = net.layers()[0].W;
    const auto& W2 = net.layers()[1].W;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 5; ++j)
            weights.max_error = std::max(weights.max_error, std::abs(W1(i, j) - kPrintedW1[i][j]));
        weights.max_error = std::max(weights.max_error, std::abs(W2(0, i) - kPrintedW2[i]));
    }
    weights.max_error = std::max({weights.max_error, net.layers()[0].a.cwiseAbs().maxCoeff(),
                                  net.layers()[1].a.cwiseAbs().maxCoeff()});
    weights.pass = weights.max_error < 1e-12;
    report.add(weights);
    return report;
}

std::string sample_csv(int points_per_axis)
{
    const auto net = build_showcase_net();
    std::ostringstream os;
    os << "x1,x2,V,Phi,residual\n" << std::setprecision(12);
    const int n = std::max(points_per_axis, 2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Eigen::Vector2d x(-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1));
            if (std::abs(x.x()) + std::abs(x.y()) > 1.0 + 1e-12)
                continue;
            const double in[2] = {x.x(), x.y()};
            const double v = fictive_v(x);
            const double phi = forward_scalar(net, in);
            os << x.x() << "," << x.y() << "," << v << "," << phi << "," << v - phi << "\n";
        }
    }
    return os.str();
}

}  // namespace pwqnet::showcase
