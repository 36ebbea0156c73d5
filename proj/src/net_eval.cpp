#include "pwqnet/net_eval.hpp"

#include <sstream>

namespace pwqnet {

namespace {

// Row-major position of (i, j), i <= j, in the upper triangle of a d x d matrix.
int upper_index(int i, int j, int d) { return i * d - i * (i - 1) / 2 + (j - i); }

}  // namespace

int hq_prime_linear_index(int n, int m, int a)
{
    (void)m;
    return a < n ? a : hv_dim(n) + (a - n);
}

int hq_prime_quadratic_index(int n, int m, int a, int b)
{
    if (a > b)
        std::swap(a, b);
    if (b < n)
        return n + upper_index(a, b, n);
    if (a >= n)
        return hv_dim(n) + m + upper_index(a - n, b - n, m);
    return hv_dim(n) + m + m * (m + 1) / 2 + a * m + (b - n);
}

Eigen::VectorXd feature_hv(std::span<const double> x)
{
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd h(hv_dim(n));
    for (int i = 0; i < n; ++i)
        h[i] = x[i];
    int k = n;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            h[k++] = x[i] * x[j];
    return h;
}

Eigen::VectorXd feature_hq_prime(std::span<const double> x, std::span<const double> u)
{
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(u.size());
    Eigen::VectorXd h(hq_prime_dim(n, m));
    h.head(hv_dim(n)) = feature_hv(x);
    int k = hv_dim(n);
    for (int j = 0; j < m; ++j)
        h[k++] = u[j];
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            h[k++] = u[i] * u[j];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            h[k++] = x[i] * u[j];
    return h;
}

Eigen::VectorXd apply_feature_map(const FeatureMap& fm, std::span<const double> raw)
{
    if (static_cast<int>(raw.size()) != fm.raw_dim()) {
        std::ostringstream os;
        os << "feature map " << fm.tag() << " expects " << fm.raw_dim() << " inputs, got " << raw.size();
        throw Error(ErrorCode::ShapeMismatch, os.str());
    }
    switch (fm.kind) {
    case FeatureMap::Kind::Identity:
        return Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
    case FeatureMap::Kind::Hv:
        return feature_hv(raw);
    case FeatureMap::Kind::HqPrime:
        return feature_hq_prime(raw.first(static_cast<std::size_t>(fm.n)), raw.subspan(static_cast<std::size_t>(fm.n)));
    }
    return {};
}

Eigen::VectorXd forward(const ReluNetwork& net, std::span<const double> raw)
{
    Eigen::VectorXd y = apply_feature_map(net.feature_map(), raw);
    const auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Eigen::VectorXd z = layers[i].W * y + layers[i].a;
        if (i + 1 < layers.size())
            z = z.cwiseMax(0.0);
        y = std::move(z);
    }
    return y;
}

double forward_scalar(const ReluNetwork& net, std::span<const double> raw)
{
    if (net.output_dim() != 1)
        throw Error(ErrorCode::ShapeMismatch, "network output is not scalar");
    return forward(net, raw)[0];
}

Eigen::VectorXd hidden_preactivations(const ReluNetwork& net, std::span<const double> raw)
{
    const auto& L = net.layers().front();
    return L.W * apply_feature_map(net.feature_map(), raw) + L.a;
}

std::vector<double> forward_batch(const ReluNetwork& net, const Eigen::MatrixXd& inputs, Exec exec)
{
    if (inputs.cols() != net.feature_map().raw_dim())
        throw Error(ErrorCode::ShapeMismatch, "input matrix has wrong number of columns");
    if (net.output_dim() != 1)
        throw Error(ErrorCode::ShapeMismatch, "network output is not scalar");
    const Eigen::Index rows = inputs.rows();
    std::vector<double> out(static_cast<std::size_t>(rows));
    auto one = [&](Eigen::Index r) {
        const Eigen::VectorXd row = inputs.row(r).transpose();
        out[static_cast<std::size_t>(r)] = forward(net, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())))[0];
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (Eigen::Index r = 0; r < rows; ++r)
            one(r);
    } else {
        for (Eigen::Index r = 0; r < rows; ++r)
            one(r);
    }
    return out;
}

}  // namespace pwqnet
