// pwqnet: explicit MPC solutions and exact ReLU network constructions from
// the command line.
//
// Exit codes: 0 success / all checks pass, 1 a check failed, 2 usage or input
// error, 3 infeasible problem.

#include "pwqnet/explicit_mpc.hpp"
#include "pwqnet/net_builder.hpp"
#include "pwqnet/net_eval.hpp"
#include "pwqnet/serialize.hpp"
#include "pwqnet/showcase2d.hpp"
#include "pwqnet/trainer.hpp"
#include "pwqnet/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace pwqnet;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
    out << text;
}

void apply_horizon(MpcProblem1D& p, std::optional<int> horizon)
{
    if (!horizon)
        return;
    if (*horizon < 1)
        throw Error(ErrorCode::InvalidArgument, "horizon must be a positive integer");
    p.N = *horizon;
    p.validate();
}

MpcProblem1D load_problem(const std::string& path, std::optional<int> horizon)
{
    auto p = problem_from_json(parse_document(read_file(path)));
    apply_horizon(p, horizon);
    return p;
}

std::vector<double> parse_point(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stod(item));
    return out;
}

struct Options {
    std::string problem;
    std::string net;
    std::string reference;
    std::string config;
    std::string output;
    std::string target = "value";
    std::string format = "text";
    std::string csv;
    std::vector<std::string> points;
    std::vector<std::string> meta;
    std::optional<int> horizon;
    int grid = 1000;
    double tol = 1e-9;
    int demo_points = 41;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> data_seed;
    std::optional<int> trials;
    std::optional<int> epochs;
};

int cmd_solve(const Options& o)
{
    const auto p = load_problem(o.problem, o.horizon);
    const auto stages = dp_solve(p);
    write_output(o.output, dump_document(solution_to_json(p, stages)));
    return 0;
}

int cmd_build(const Options& o)
{
    const auto p = load_problem(o.problem, o.horizon);
    std::optional<ReluNetwork> net;
    if (o.target == "policy") {
        const auto stages = dp_solve(p);
        net = build_policy_net(*stages.back().policy);
    } else if (o.target == "value") {
        const auto stages = dp_solve(p);
        net = build_value_net(stages.back().value);
    } else {
        const auto spec = make_q_spec(p);
        net = build_full_q_net(p, spec.v_prev);
    }
    auto meta = net->meta();
    meta["horizon"] = std::to_string(p.N);
    meta["target"] = o.target;
    write_output(o.output, serialize_network(net->with_meta(std::move(meta))));
    return 0;
}

int cmd_eval(const Options& o)
{
    const auto net = deserialize_network(read_file(o.net));
    if (o.points.empty())
        throw Error(ErrorCode::InvalidArgument, "eval needs at least one --point");
    std::ostringstream os;
    os.precision(17);
    const bool csv = o.format == "csv";
    if (csv) {
        for (int i = 0; i < net.feature_map().raw_dim(); ++i)
            os << "in" << i << ",";
        for (int i = 0; i < net.output_dim(); ++i)
            os << (i ? "," : "") << "out" << i;
        os << "\n";
    }
    for (const auto& text : o.points) {
        const auto pt = parse_point(text);
        const Eigen::VectorXd y = forward(net, pt);
        if (csv) {
            for (double v : pt)
                os << v << ",";
            for (Eigen::Index i = 0; i < y.size(); ++i)
                os << (i ? "," : "") << y[i];
        } else {
            os << "input=(" << text << ") output=";
            for (Eigen::Index i = 0; i < y.size(); ++i)
                os << (i ? "," : "") << y[i];
        }
        os << "\n";
    }
    write_output(o.output, os.str());
    return 0;
}

int cmd_verify(const Options& o)
{
    const auto net = deserialize_network(read_file(o.net));
    auto ref = reference_from_json(parse_document(read_file(o.reference)));
    if (auto* prob = std::get_if<MpcProblem1D>(&ref))
        apply_horizon(*prob, o.horizon);
    const auto& fm = net.feature_map();
    Report report;

    if (const auto* prob = std::get_if<MpcProblem1D>(&ref)) {
        if (fm == FeatureMap::identity(1)) {
            report = check_exact(net, *dp_solve(*prob).back().policy, o.grid, o.tol);
        } else if (fm == FeatureMap::hv(1)) {
            const auto value = dp_solve(*prob).back().value;
            report = check_exact(net, value, o.grid, o.tol);
            report.append(check_value_function(value));
        } else if (fm == FeatureMap::hq_prime(1, 1)) {
            report = check_exact(net, make_q_spec(*prob), std::min(o.grid, 400), o.tol);
        } else {
            throw Error(ErrorCode::FeatureMapMismatch, "no reference for networks over " + fm.tag());
        }
    } else if (const auto* pwq = std::get_if<PwqFunction1D>(&ref)) {
        report = check_exact(net, *pwq, o.grid, o.tol);
        report.append(check_value_function(*pwq));
    } else {
        report = check_exact(net, std::get<PwaFunction1D>(ref), o.grid, o.tol);
    }
    write_output(o.output, o.format == "json" ? report.to_json() + "\n" : report.to_text());
    return report.passed() ? 0 : kExitCheckFailed;
}

int cmd_train(const Options& o)
{
    const Json cfg = parse_document(read_file(o.config));
    const auto problem = cfg.contains("problem") ? problem_from_json(cfg.at("problem")) : example_problem(2);
    const auto spec = make_q_spec(problem);

    const std::size_t size = cfg.value("dataset_size", std::size_t{2000});
    const std::uint64_t data_seed = o.data_seed.value_or(cfg.value("dataset_seed", std::uint64_t{7}));
    const std::uint64_t base_seed = o.seed.value_or(cfg.value("base_seed", std::uint64_t{1000}));
    const int trials = o.trials.value_or(cfg.value("trials", 20));
    const int epochs = o.epochs.value_or(cfg.value("epochs", 1000));

    std::vector<Topology> topologies;
    if (cfg.contains("topologies")) {
        for (const auto& t : cfg.at("topologies"))
            topologies.push_back({FeatureMap::parse_tag(t.at("features").get<std::string>()),
                                  t.at("widths").get<std::vector<int>>()});
    } else {
        topologies = reference_topologies();
    }
    TrainOptions opts;
    opts.learning_rate = cfg.value("learning_rate", opts.learning_rate);
    opts.batch_size = cfg.value("batch_size", opts.batch_size);

    const auto data = sample_dataset(spec, size, data_seed);
    const auto rows = experiment(topologies, data, trials, base_seed, epochs, opts);
    if (!o.csv.empty())
        write_output(o.csv, format_csv(rows));
    write_output(o.output, o.format == "csv" ? format_csv(rows) : format_table(rows));
    return 0;
}

int cmd_demo2d(const Options& o)
{
    const auto report = showcase::verify_showcase();
    write_output(o.output, o.format == "json" ? report.to_json() + "\n" : report.to_text());
    if (!o.csv.empty())
        write_output(o.csv, showcase::sample_csv(o.demo_points));
    return report.passed() ? 0 : kExitCheckFailed;
}

int cmd_export(const Options& o)
{
    const auto net = deserialize_network(read_file(o.net));
    auto meta = net.meta();
    for (const auto& kv : o.meta) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "--meta expects key=value, got '" + kv + "'");
        meta[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    write_output(o.output, serialize_network(net.with_meta(std::move(meta))));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact ReLU networks for 1-D explicit MPC value functions, policies and Q-functions"};
    app.require_subcommand(1);
    Options o;

    auto* solve = app.add_subcommand("solve", "Solve the problem by dynamic programming; emit PWQ/PWA documents");
    solve->add_option("problem", o.problem, "Problem document")->required()->check(CLI::ExistingFile);
    solve->add_option("--horizon", o.horizon, "Override the horizon N");
    solve->add_option("-o,--output", o.output, "Output file (default stdout)");

    auto* build = app.add_subcommand("build", "Construct an exact network");
    build->add_option("problem", o.problem, "Problem document")->required()->check(CLI::ExistingFile);
    build->add_option("--target", o.target, "policy | value | qnet")
        ->check(CLI::IsMember({"policy", "value", "qnet"}));
    build->add_option("--horizon", o.horizon, "Override the horizon N");
    build->add_option("-o,--output", o.output, "Output file (default stdout)");

    auto* eval = app.add_subcommand("eval", "Evaluate a network at points");
    eval->add_option("net", o.net, "Network document")->required()->check(CLI::ExistingFile);
    eval->add_option("--point", o.points, "Comma separated raw input, repeatable");
    eval->add_option("--format", o.format, "text | csv")->check(CLI::IsMember({"text", "csv"}));
    eval->add_option("-o,--output", o.output, "Output file (default stdout)");

    auto* verify = app.add_subcommand("verify", "Check a network against a reference");
    verify->add_option("net", o.net, "Network document")->required()->check(CLI::ExistingFile);
    verify->add_option("reference", o.reference, "pwq, pwa, problem or solution document")
        ->required()
        ->check(CLI::ExistingFile);
    verify->add_option("--horizon", o.horizon, "Override the horizon of a problem reference");
    verify->add_option("--grid", o.grid, "Uniform grid points per axis");
    verify->add_option("--tol", o.tol, "Absolute tolerance");
    verify->add_option("--format", o.format, "text | json")->check(CLI::IsMember({"text", "json"}));
    verify->add_option("-o,--output", o.output, "Output file (default stdout)");

    auto* train_cmd = app.add_subcommand("train", "Run the topology comparison experiment");
    train_cmd->add_option("config", o.config, "Experiment config document")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--seed", o.seed, "Base seed for trial initialization");
    train_cmd->add_option("--data-seed", o.data_seed, "Seed for the dataset");
    train_cmd->add_option("--trials", o.trials, "Trials per topology");
    train_cmd->add_option("--epochs", o.epochs, "Epochs per trial");
    train_cmd->add_option("--format", o.format, "text | csv")->check(CLI::IsMember({"text", "csv"}));
    train_cmd->add_option("--csv", o.csv, "Also write the CSV table here");
    train_cmd->add_option("-o,--output", o.output, "Output file (default stdout)");

    auto* demo = app.add_subcommand("demo2d", "Verify the 2-D showcase network");
    demo->add_option("--csv", o.csv, "Write (x1, x2, V, Phi, residual) samples here");
    demo->add_option("--points", o.demo_points, "Samples per axis for the CSV");
    demo->add_option("--format", o.format, "text | json")->check(CLI::IsMember({"text", "json"}));
    demo->add_option("-o,--output", o.output, "Output file (default stdout)");

    auto* exp = app.add_subcommand("export", "Re-emit a network document with updated meta");
    exp->add_option("net", o.net, "Network document")->required()->check(CLI::ExistingFile);
    exp->add_option("--meta", o.meta, "key=value, repeatable");
    exp->add_option("-o,--output", o.output, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*solve)
            return cmd_solve(o);
        if (*build)
            return cmd_build(o);
        if (*eval)
            return cmd_eval(o);
        if (*verify)
            return cmd_verify(o);
        if (*train_cmd)
            return cmd_train(o);
        if (*demo)
            return cmd_demo2d(o);
        if (*exp)
            return cmd_export(o);
    } catch (const Error& e) {
        std::cerr << "pwqnet: " << e.what() << "\n";
        return e.code() == ErrorCode::Infeasible ? kExitInfeasible : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "pwqnet: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
