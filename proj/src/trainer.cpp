#include "pwqnet/trainer.hpp"

#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace pwqnet {

namespace {

// Portable uniform doubles from the raw 64-bit engine output, so datasets and
// initial weights do not depend on the standard library's distributions.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Eigen::MatrixXd feature_matrix(const FeatureMap& fm, const Dataset& data)
{
    if (fm.raw_dim() != 2)
        throw Error(ErrorCode::ShapeMismatch, "topology " + fm.tag() + " does not read (x, u) pairs");
    Eigen::MatrixXd F(fm.feature_dim(), static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double raw[2] = {data.x[i], data.u[i]};
        F.col(static_cast<Eigen::Index>(i)) = apply_feature_map(fm, raw);
    }
    return F;
}

struct Workspace {
    std::vector<Eigen::MatrixXd> z;  // pre-activations per layer
    std::vector<Eigen::MatrixXd> y;  // y[0] = input, y[i+1] = activation of layer i
};

/// Forward pass on a column batch; returns the output row.
const Eigen::MatrixXd& forward_cols(const std::vector<Layer>& layers, const Eigen::MatrixXd& input, Workspace& ws)
{
    const std::size_t L = layers.size();
    ws.z.resize(L);
    ws.y.resize(L + 1);
    ws.y[0] = input;
    for (std::size_t i = 0; i < L; ++i) {
        ws.z[i] = (layers[i].W * ws.y[i]).colwise() + layers[i].a;
        ws.y[i + 1] = i + 1 < L ? Eigen::MatrixXd(ws.z[i].cwiseMax(0.0)) : ws.z[i];
    }
    return ws.y[L];
}

/// Mean squared error of the batch and its gradient.
double backward_cols(const std::vector<Layer>& layers, const Eigen::MatrixXd& input, const Eigen::RowVectorXd& target,
                     Workspace& ws, std::vector<Layer>& grad)
{
    const auto& out = forward_cols(layers, input, ws);
    const double count = static_cast<double>(input.cols());
    const Eigen::RowVectorXd err = out.row(0) - target;
    const double loss = err.squaredNorm() / count;

    const std::size_t L = layers.size();
    grad.resize(L);
    Eigen::MatrixXd delta = (2.0 / count) * err;
    for (std::size_t k = L; k-- > 0;) {
        grad[k].W = delta * ws.y[k].transpose();
        grad[k].a = delta.rowwise().sum();
        if (k == 0)
            break;
        Eigen::MatrixXd back = layers[k].W.transpose() * delta;
        // ReLU subgradient at exactly zero is taken as zero.
        delta = back.array() * (ws.z[k - 1].array() > 0.0).cast<double>();
    }
    return loss;
}

}  // namespace

std::size_t Topology::parameter_count() const
{
    std::size_t count = 0;
    std::size_t in = static_cast<std::size_t>(features.feature_dim());
    for (int w : widths) {
        count += in * static_cast<std::size_t>(w) + static_cast<std::size_t>(w);
        in = static_cast<std::size_t>(w);
    }
    return count + in + 1;
}

std::string Topology::label() const
{
    std::string s = features.kind == FeatureMap::Kind::HqPrime ? "h'_q(x,u)" : "(x,u)";
    s += " w=";
    for (std::size_t i = 0; i < widths.size(); ++i)
        s += (i ? "x" : "") + std::to_string(widths[i]);
    return s;
}

Dataset sample_dataset(const QFunctionSpec& spec, std::size_t count, std::uint64_t seed)
{
    const auto& p = spec.problem;
    const auto dom = spec.v_prev.domain();
    std::mt19937_64 rng(seed);
    Dataset data;
    data.seed = seed;
    data.x_domain = p.X;
    data.u_domain = p.U;
    data.x.reserve(count);
    data.u.reserve(count);
    data.target.reserve(count);
    std::size_t draws = 0;
    while (data.size() < count) {
        const double x = uniform(rng, p.X.lower(), p.X.upper());
        const double u = uniform(rng, p.U.lower(), p.U.upper());
        ++draws;
        const double next = p.successor(x, u);
        if (next >= dom.lower() && next <= dom.upper()) {
            data.x.push_back(x);
            data.u.push_back(u);
            data.target.push_back(q_eval(spec, x, u));
        }
        if (draws >= 100000 && static_cast<double>(data.size()) < 0.01 * static_cast<double>(draws))
            throw Error(ErrorCode::SamplingStalled, "fewer than 1% of draws are feasible");
    }
    return data;
}

ReluNetwork init_network(const Topology& topology, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    Eigen::Index in = topology.features.feature_dim();
    std::vector<int> widths = topology.widths;
    widths.push_back(1);
    for (int w : widths) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in + w));
        Layer layer{Eigen::MatrixXd(w, in), Eigen::VectorXd::Zero(w)};
        for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
                layer.W(r, c) = uniform(rng, -limit, limit);
        layers.push_back(std::move(layer));
        in = w;
    }
    return ReluNetwork(topology.features, std::move(layers), {{"construction", "trained"}});
}

double mse_and_gradient(const ReluNetwork& net, const Dataset& data, Gradient* grad)
{
    const Eigen::MatrixXd F = feature_matrix(net.feature_map(), data);
    const Eigen::RowVectorXd y = Eigen::Map<const Eigen::RowVectorXd>(data.target.data(), static_cast<Eigen::Index>(data.size()));
    Workspace ws;
    std::vector<Layer> g;
    const double loss = backward_cols(net.layers(), F, y, ws, g);
    if (grad != nullptr)
        grad->layers = std::move(g);
    return loss;
}

double rmse(const ReluNetwork& net, const Dataset& data)
{
    const Eigen::MatrixXd F = feature_matrix(net.feature_map(), data);
    Workspace ws;
    const auto& out = forward_cols(net.layers(), F, ws);
    const Eigen::RowVectorXd y = Eigen::Map<const Eigen::RowVectorXd>(data.target.data(), static_cast<Eigen::Index>(data.size()));
    return std::sqrt((out.row(0) - y).squaredNorm() / static_cast<double>(data.size()));
}

TrainResult train(const Topology& topology, const Dataset& data, int epochs, std::uint64_t seed,
                  const TrainOptions& options)
{
    if (data.size() == 0)
        throw Error(ErrorCode::InvalidArgument, "empty dataset");
    ReluNetwork start = options.initial ? *options.initial : init_network(topology, seed);
    if (!(start.feature_map() == topology.features))
        throw Error(ErrorCode::FeatureMapMismatch, "initial network does not match the topology's feature map");

    std::vector<Layer> layers = start.layers();
    const Eigen::MatrixXd F = feature_matrix(topology.features, data);
    const Eigen::RowVectorXd y = Eigen::Map<const Eigen::RowVectorXd>(data.target.data(), static_cast<Eigen::Index>(data.size()));

    std::vector<Layer> m1;
    std::vector<Layer> m2;
    for (const auto& l : layers) {
        m1.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.a.size())});
        m2.push_back(m1.back());
    }

    const double initial = rmse(start, data);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Eigen::Index> order(data.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);

    Workspace ws;
    std::vector<Layer> grad;
    Eigen::MatrixXd xb;
    Eigen::RowVectorXd yb;
    long step = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
        for (std::size_t start_i = 0; start_i < order.size(); start_i += batch) {
            const std::size_t end_i = std::min(order.size(), start_i + batch);
            const auto b = static_cast<Eigen::Index>(end_i - start_i);
            xb.resize(F.rows(), b);
            yb.resize(b);
            for (Eigen::Index j = 0; j < b; ++j) {
                xb.col(j) = F.col(order[start_i + static_cast<std::size_t>(j)]);
                yb[j] = y[order[start_i + static_cast<std::size_t>(j)]];
            }
            const double loss = backward_cols(layers, xb, yb, ws, grad);
            if (!std::isfinite(loss))
                throw Error(ErrorCode::Diverged, "loss became non-finite in epoch " + std::to_string(epoch));
            ++step;
            const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < layers.size(); ++k) {
                auto update = [&](auto& param, auto& mean, auto& var, const auto& g) {
                    mean = options.beta1 * mean + (1.0 - options.beta1) * g;
                    var = options.beta2 * var + (1.0 - options.beta2) * g.cwiseProduct(g);
                    param.array() -= options.learning_rate * (mean.array() / c1) /
                                     ((var.array() / c2).sqrt() + options.epsilon);
                };
                update(layers[k].W, m1[k].W, m2[k].W, grad[k].W);
                update(layers[k].a, m1[k].a, m2[k].a, grad[k].a);
            }
        }
    }

    ReluNetwork net(topology.features, std::move(layers), {{"construction", "trained"}});
    const double final_rmse = rmse(net, data);
    if (!std::isfinite(final_rmse))
        throw Error(ErrorCode::Diverged, "final RMSE is not finite");
    return {std::move(net), final_rmse, initial};
}

std::vector<ExperimentRow> experiment(const std::vector<Topology>& configs, const Dataset& data, int trials,
                                      std::uint64_t base_seed, int epochs, const TrainOptions& options, Exec exec)
{
    const auto n_trials = static_cast<std::size_t>(std::max(trials, 0));
    const long jobs = static_cast<long>(configs.size() * n_trials);
    std::vector<double> results(static_cast<std::size_t>(jobs), 0.0);
    auto run = [&](long job) {
        const auto c = static_cast<std::size_t>(job) / n_trials;
        const auto t = static_cast<std::size_t>(job) % n_trials;
        try {
            results[static_cast<std::size_t>(job)] = train(configs[c], data, epochs, base_seed + t, options).rmse;
        } catch (const Error&) {
            results[static_cast<std::size_t>(job)] = std::numeric_limits<double>::quiet_NaN();
        }
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long job = 0; job < jobs; ++job)
            run(job);
    } else {
        for (long job = 0; job < jobs; ++job)
            run(job);
    }

    std::vector<ExperimentRow> rows;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        ExperimentRow row{configs[c], 0.0, 0.0, {}};
        row.trial_rmse.assign(results.begin() + static_cast<long>(c * n_trials),
                              results.begin() + static_cast<long>((c + 1) * n_trials));
        if (!row.trial_rmse.empty()) {
            const double n = static_cast<double>(row.trial_rmse.size());
            row.mean_rmse = std::accumulate(row.trial_rmse.begin(), row.trial_rmse.end(), 0.0) / n;
            double ss = 0.0;
            for (double r : row.trial_rmse)
                ss += (r - row.mean_rmse) * (r - row.mean_rmse);
            row.std_rmse = row.trial_rmse.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Topology> reference_topologies()
{
    const auto hq = FeatureMap::hq_prime(1, 1);
    const auto xu = FeatureMap::identity(2);
    return {{hq, {5}}, {hq, {6}}, {hq, {7}}, {hq, {8}}, {xu, {12}}, {xu, {5, 5}}, {xu, {4, 4, 4}}};
}

std::string format_table(const std::vector<ExperimentRow>& rows)
{
    std::ostringstream os;
    os << std::left << std::setw(12) << "xi" << std::right << std::setw(4) << "l" << std::setw(10) << "w_i"
       << std::setw(6) << "#p" << std::setw(12) << "RMSE" << std::setw(12) << "std" << "\n";
    for (const auto& r : rows) {
        std::string widths;
        for (std::size_t i = 0; i < r.topology.widths.size(); ++i)
            widths += (i ? "," : "") + std::to_string(r.topology.widths[i]);
        os << std::left << std::setw(12)
           << (r.topology.features.kind == FeatureMap::Kind::HqPrime ? "h'_q(x,u)" : "(x,u)") << std::right
           << std::setw(4) << r.topology.depth() << std::setw(10) << widths << std::setw(6)
           << r.topology.parameter_count() << std::setw(12) << std::fixed << std::setprecision(4) << r.mean_rmse
           << std::setw(12) << r.std_rmse << "\n";
        os.unsetf(std::ios::fixed);
    }
    return os.str();
}

std::string format_csv(const std::vector<ExperimentRow>& rows)
{
    std::ostringstream os;
    os << "features,depth,widths,params,mean_rmse,std_rmse,trials\n";
    os << std::setprecision(10);
    for (const auto& r : rows) {
        std::string widths;
        for (std::size_t i = 0; i < r.topology.widths.size(); ++i)
            widths += (i ? "x" : "") + std::to_string(r.topology.widths[i]);
        os << '"' << r.topology.features.tag() << "\"," << r.topology.depth() << "," << widths << ","
           << r.topology.parameter_count() << "," << r.mean_rmse << "," << r.std_rmse << "," << r.trial_rmse.size()
           << "\n";
    }
    return os.str();
}

}  // namespace pwqnet
