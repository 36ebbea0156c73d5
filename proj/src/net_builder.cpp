#include "pwqnet/net_builder.hpp"

#include "pwqnet/net_eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pwqnet {

namespace {

std::string interval_text(const Interval1D& I)
{
    std::ostringstream os;
    os.precision(17);
    os << "[" << I.lower() << ", " << I.upper() << "]";
    return os.str();
}

/// Ramp parametrization of a continuous PWA function; `x_column` selects where x sits in the
/// feature vector of width `feature_width`.
ReluNetwork pwa_network(const PwaFunction1D& pwa, FeatureMap fm, int x_column)
{
    const auto& ps = pwa.pieces();
    const auto s = static_cast<Eigen::Index>(ps.size());
    const auto m = static_cast<Eigen::Index>(pwa.output_dim());

    Layer hidden{Eigen::MatrixXd::Zero(s, fm.feature_dim()), Eigen::VectorXd::Zero(s)};
    Layer out{Eigen::MatrixXd::Zero(m, s), Eigen::VectorXd::Zero(m)};

    hidden.W(0, x_column) = -1.0;
    hidden.a[0] = ps[0].region.upper();
    out.W.col(0) = -ps[0].gain;
    for (Eigen::Index i = 1; i < s; ++i) {
        hidden.W(i, x_column) = 1.0;
        hidden.a[i] = -ps[static_cast<std::size_t>(i - 1)].region.upper();
        out.W.col(i) = i == 1 ? ps[1].gain : Eigen::VectorXd(ps[static_cast<std::size_t>(i)].gain - ps[static_cast<std::size_t>(i - 1)].gain);
    }
    out.a = ps[0].gain * ps[0].region.upper() + ps[0].offset;
    return ReluNetwork(fm, {std::move(hidden), std::move(out)}, {{"domain", interval_text(pwa.domain())}});
}

void require_bounded(const PwqFunction1D& pwq)
{
    // Interval1D already refuses infinite bounds; keep the contract explicit
    // for inputs built from documents.
    for (const auto& p : pwq.pieces())
        if (!std::isfinite(p.region.lower()) || !std::isfinite(p.region.upper()))
            throw Error(ErrorCode::UnboundedRegion, "regions must be bounded");
}

Eigen::MatrixXd block_diag_one(const Eigen::MatrixXd& W)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(W.rows() + 1, W.cols() + 1);
    out.topLeftCorner(W.rows(), W.cols()) = W;
    out(W.rows(), W.cols()) = 1.0;
    return out;
}

std::string q_domain_text(const MpcProblem1D& p, const Interval1D& succ)
{
    std::ostringstream os;
    os.precision(17);
    os << "x in " << interval_text(p.X) << ", u in " << interval_text(p.U) << ", " << p.A << "*x + " << p.B
       << "*u in " << interval_text(succ);
    return os.str();
}

}  // namespace

ReluNetwork build_policy_net(const PwaFunction1D& policy)
{
    auto net = pwa_network(policy, FeatureMap::identity(1), 0);
    auto meta = net.meta();
    meta["construction"] = "policy";
    return net.with_meta(std::move(meta));
}

ReluNetwork build_residual_net(const PwaFunction1D& residual)
{
    if (residual.output_dim() != 1)
        throw Error(ErrorCode::DimensionMismatch, "residual must be scalar");
    auto net = pwa_network(residual, FeatureMap::hv(1), 0);
    auto meta = net.meta();
    meta["construction"] = "value_residual";
    return net.with_meta(std::move(meta));
}

ReluNetwork build_quadratic_net(const PwqFunction1D& pwq)
{
    require_bounded(pwq);
    const auto& ps = pwq.pieces();
    const auto s = static_cast<Eigen::Index>(ps.size());
    Layer hidden{Eigen::MatrixXd(s, 2), Eigen::VectorXd(s)};
    Layer out{Eigen::MatrixXd(1, s), Eigen::VectorXd::Zero(1)};
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto& p = ps[static_cast<std::size_t>(i)];
        const double lo = p.region.lower();
        const double hi = p.region.upper();
        // (x - lo)(hi - x) = (lo + hi) x - x^2 - lo hi
        hidden.W(i, 0) = lo + hi;
        hidden.W(i, 1) = -1.0;
        hidden.a[i] = -lo * hi;
        out.W(0, i) = -p.q.S;
    }
    return ReluNetwork(FeatureMap::hv(1), {std::move(hidden), std::move(out)},
                       {{"construction", "value_quadratic"}, {"domain", interval_text(pwq.domain())}});
}

PwaFunction1D residual_pwa(const PwqFunction1D& pwq)
{
    require_bounded(pwq);
    std::vector<AffinePiece> pieces;
    pieces.reserve(pwq.size());
    for (const auto& p : pwq.pieces()) {
        const double lo = p.region.lower();
        const double hi = p.region.upper();
        const double kappa = p.q.l + p.q.S * (lo + hi);
        const double beta = p.q.c - p.q.S * lo * hi;
        pieces.push_back(AffinePiece::scalar(p.region, kappa, beta));
    }
    return PwaFunction1D(std::move(pieces));
}

ReluNetwork stack_hidden(const ReluNetwork& first, const ReluNetwork& second)
{
    if (!(first.feature_map() == second.feature_map()))
        throw Error(ErrorCode::FeatureMapMismatch, "cannot stack networks over different feature maps");
    if (first.depth() != 1 || second.depth() != 1)
        throw Error(ErrorCode::ShapeMismatch, "stacking needs single-hidden-layer networks");
    if (first.output_dim() != second.output_dim())
        throw Error(ErrorCode::ShapeMismatch, "stacked networks need equal output width");
    const auto& h1 = first.layers()[0];
    const auto& h2 = second.layers()[0];
    const auto& o1 = first.layers()[1];
    const auto& o2 = second.layers()[1];

    Layer hidden{Eigen::MatrixXd(h1.W.rows() + h2.W.rows(), h1.W.cols()), Eigen::VectorXd(h1.a.size() + h2.a.size())};
    hidden.W << h1.W, h2.W;
    hidden.a << h1.a, h2.a;
    Layer out{Eigen::MatrixXd(o1.W.rows(), o1.W.cols() + o2.W.cols()), o1.a + o2.a};
    out.W << o1.W, o2.W;

    auto meta = first.meta();
    for (const auto& [k, v] : second.meta())
        meta.try_emplace(k, v);
    return ReluNetwork(first.feature_map(), {std::move(hidden), std::move(out)}, std::move(meta));
}

ReluNetwork build_value_net(const PwqFunction1D& pwq)
{
    auto net = stack_hidden(build_quadratic_net(pwq), build_residual_net(residual_pwa(pwq)));
    auto meta = net.meta();
    meta["construction"] = "value";
    return net.with_meta(std::move(meta));
}

LMatrix build_l_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                       const Eigen::MatrixXd& R)
{
    const auto n = A.rows();
    const auto m = B.cols();
    if (n < 1 || m < 1 || A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
        R.cols() != m) {
        std::ostringstream os;
        os << "A " << A.rows() << "x" << A.cols() << ", B " << B.rows() << "x" << B.cols() << ", Q " << Q.rows()
           << "x" << Q.cols() << ", R " << R.rows() << "x" << R.cols() << " are not consistent";
        throw Error(ErrorCode::DimensionMismatch, os.str());
    }
    const int ni = static_cast<int>(n);
    const int mi = static_cast<int>(m);
    // Successor coefficients over z = (x, u): (Ax + Bu)_r = C(r, :) z
    Eigen::MatrixXd C(n, n + m);
    C << A, B;

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(hv_dim(ni) + 1, hq_prime_dim(ni, mi));
    for (int r = 0; r < ni; ++r)
        for (int a = 0; a < ni + mi; ++a)
            L(r, hq_prime_linear_index(ni, mi, a)) += C(r, a);
    int row = ni;
    for (int r = 0; r < ni; ++r) {
        for (int s = r; s < ni; ++s, ++row) {
            for (int a = 0; a < ni + mi; ++a)
                for (int b = 0; b < ni + mi; ++b)
                    L(row, hq_prime_quadratic_index(ni, mi, a, b)) += C(r, a) * C(s, b);
        }
    }
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < ni; ++j)
            L(row, hq_prime_quadratic_index(ni, mi, i, j)) += Q(i, j);
    for (int i = 0; i < mi; ++i)
        for (int j = 0; j < mi; ++j)
            L(row, hq_prime_quadratic_index(ni, mi, ni + i, ni + j)) += R(i, j);
    return {std::move(L), A, B, Q, R};
}

LMatrix build_l_matrix(const MpcProblem1D& p)
{
    auto one = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    return build_l_matrix(one(p.A), one(p.B), one(p.Q), one(p.R));
}

ReluNetwork build_q_net(const ReluNetwork& value_net_prev, const LMatrix& l_matrix)
{
    const auto& fm = value_net_prev.feature_map();
    if (fm.kind != FeatureMap::Kind::Hv || fm.n != l_matrix.n())
        throw Error(ErrorCode::FeatureMapMismatch,
                    "value network reads " + fm.tag() + " but L expects hv(" + std::to_string(l_matrix.n()) + ")");
    if (value_net_prev.depth() != 1 || value_net_prev.output_dim() != 1)
        throw Error(ErrorCode::ShapeMismatch, "value network must be scalar with one hidden layer");

    const auto& hv = value_net_prev.layers()[0];
    const auto& ov = value_net_prev.layers()[1];
    Layer hidden{block_diag_one(hv.W) * l_matrix.entries, Eigen::VectorXd::Zero(hv.a.size() + 1)};
    hidden.a.head(hv.a.size()) = hv.a;
    Layer out{Eigen::MatrixXd(1, ov.W.cols() + 1), ov.a};
    out.W << ov.W, 1.0;

    auto meta = value_net_prev.meta();
    meta["construction"] = "q_quadratic";
    meta.erase("domain");
    return ReluNetwork(FeatureMap::hq_prime(l_matrix.n(), l_matrix.m()), {std::move(hidden), std::move(out)},
                       std::move(meta));
}

ReluNetwork build_successor_residual_net(const PwqFunction1D& v_prev, const LMatrix& l_matrix)
{
    if (l_matrix.n() != 1)
        throw Error(ErrorCode::FeatureMapMismatch, "successor residual is only defined for scalar states");
    const auto residual = build_residual_net(residual_pwa(v_prev));
    const auto& h = residual.layers()[0];
    // Rows of h_q holding h_v(Ax + Bu).
    const int nv = hv_dim(l_matrix.n());
    Eigen::MatrixXd select = Eigen::MatrixXd::Zero(nv, nv + 1);
    select.leftCols(nv).setIdentity();
    Layer hidden{h.W * select * l_matrix.entries, h.a};
    return ReluNetwork(FeatureMap::hq_prime(l_matrix.n(), l_matrix.m()), {std::move(hidden), residual.layers()[1]},
                       {{"construction", "q_residual"}});
}

ReluNetwork build_full_q_net(const MpcProblem1D& problem, const PwqFunction1D& v_prev)
{
    const auto L = build_l_matrix(problem);
    auto net = stack_hidden(build_q_net(build_quadratic_net(v_prev), L), build_successor_residual_net(v_prev, L));
    auto meta = net.meta();
    meta["construction"] = "q";
    meta["domain"] = q_domain_text(problem, v_prev.domain());
    return net.with_meta(std::move(meta));
}

}  // namespace pwqnet
