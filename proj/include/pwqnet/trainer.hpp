#pragma once

// Small deterministic ReLU regression trainer (mini-batch Adam) used for the
// topology comparison on sampled Q-function data.

#include "pwqnet/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pwqnet {

/// Feature map plus hidden widths. Scalar output.
struct Topology {
    FeatureMap features;
    std::vector<int> widths;

    std::size_t depth() const noexcept { return widths.size(); }
    std::size_t parameter_count() const;
    std::string label() const;
};

struct Dataset {
    std::vector<double> x;
    std::vector<double> u;
    std::vector<double> target;
    std::uint64_t seed = 0;
    Interval1D x_domain{0.0, 1.0};
    Interval1D u_domain{0.0, 1.0};

    std::size_t size() const noexcept { return target.size(); }
};

/// Uniform rejection sampling over X x U, keeping pairs whose successor lies
/// in dom V_{N-1}. Throws SamplingStalled below 1 % acceptance over 1e5 draws.
Dataset sample_dataset(const QFunctionSpec& spec, std::size_t count, std::uint64_t seed);

struct TrainOptions {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 64;
    /// Start from these weights instead of the random initialization.
    std::optional<ReluNetwork> initial;
};

struct TrainResult {
    ReluNetwork net;
    double rmse;          // on the training set after the last epoch
    double initial_rmse;  // before the first update
};

/// Random network for `topology`: weights uniform in +-sqrt(6 / (fan_in +
/// fan_out)), zero biases.
ReluNetwork init_network(const Topology& topology, std::uint64_t seed);

TrainResult train(const Topology& topology, const Dataset& data, int epochs, std::uint64_t seed,
                  const TrainOptions& options = {});

double rmse(const ReluNetwork& net, const Dataset& data);

/// Mean squared error over `data` and its gradient w.r.t. every layer's
/// weights and biases (same shapes as the network layers).
struct Gradient {
    std::vector<Layer> layers;
};
double mse_and_gradient(const ReluNetwork& net, const Dataset& data, Gradient* grad);

struct ExperimentRow {
    Topology topology;
    double mean_rmse;
    double std_rmse;
    std::vector<double> trial_rmse;
};

/// Trains every topology `trials` times on the shared dataset; trial t uses
/// seed base_seed + t. Exec::Parallel runs trials on OpenMP threads; the
/// table is identical either way.
std::vector<ExperimentRow> experiment(const std::vector<Topology>& configs, const Dataset& data, int trials,
                                      std::uint64_t base_seed, int epochs, const TrainOptions& options = {},
                                      Exec exec = Exec::Parallel);

/// The seven rows of the reference comparison table: h'_q inputs with widths
/// 5..8, then raw (x, u) inputs with widths 12, 5x5 and 4x4x4.
std::vector<Topology> reference_topologies();

std::string format_table(const std::vector<ExperimentRow>& rows);
std::string format_csv(const std::vector<ExperimentRow>& rows);

}  // namespace pwqnet
