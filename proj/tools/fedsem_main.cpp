#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedsem/errors.hpp"
#include "fedsem/io.hpp"
#include "fedsem/metrics.hpp"
#include "fedsem/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    bool timings = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_timings) {
    cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "root seed (overrides config)");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
    if (with_timings) cmd->add_flag("--timings", args.timings, "record per-round wall_ms in history.jsonl");
}

fedsem::ExperimentConfig load_config(const CommonArgs& args) {
    auto cfg = fedsem::load_experiment_config(args.config_path);
    if (args.seed) {
        // Re-parse with the override so derived section seeds follow the new root.
        std::ifstream in(args.config_path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        auto root = nlohmann::json::parse(buffer.str());
        root["seed"] = *args.seed;
        cfg = fedsem::parse_experiment_config(root.dump(), args.config_path);
    }
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    return cfg;
}

int cmd_cluster(const CommonArgs& args) {
    auto cfg = load_config(args);
    auto result = fedsem::run_cluster_stage(cfg);
    fedsem::write_artifacts(cfg, result, false);
    if (!args.quiet)
        std::printf("clustered %zu samples into %d clusters, inertia %.6f\n", result.assignment.labels.size(),
                    result.model.n_clusters, result.model.inertia);
    return 0;
}

int cmd_partition(const CommonArgs& args) {
    auto cfg = load_config(args);
    auto result = fedsem::run_partition_stage(cfg);
    fedsem::write_artifacts(cfg, result, false);
    if (!args.quiet)
        std::printf("partitioned %zu samples across %zu clients (mean entropy %.4f, mean max share %.4f)\n",
                    result.working.labels.size(), result.plan.clients.size(),
                    result.heterogeneity.mean_entropy, result.heterogeneity.mean_max_proportion);
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    auto cfg = load_config(args);
    auto result = fedsem::run_simulate_stage(cfg);
    fedsem::write_artifacts(cfg, result, args.timings);
    if (!args.quiet && !result.history.empty()) {
        const auto& last = result.history.back();
        std::printf("simulated %d rounds: loss %.4f acc %.4f r20 %.4f mr20 %.4f\n", last.round, last.loss,
                    last.acc, last.r20, last.mr20);
    }
    return 0;
}

struct ReportArgs {
    std::vector<std::string> histories;
    std::string metric = "acc";
    double target = 0.85;
    std::vector<long long> params;
    std::string csv_path;
    bool quiet = false;
};

int cmd_report(const ReportArgs& args) {
    if (args.params.size() > 1 && args.params.size() != args.histories.size())
        throw fedsem::ConfigError("report: --params must be given once or once per history");
    std::string csv = "history,rounds_to_target,communication_cost,relative_cost\n";
    long long baseline_cost = -1;
    for (std::size_t i = 0; i < args.histories.size(); ++i) {
        auto history = fedsem::load_history(args.histories[i]);
        if (history.empty()) throw fedsem::DataError(args.histories[i] + ": empty history");
        long long param_count = args.params.empty() ? 0 : args.params[args.params.size() > 1 ? i : 0];
        auto reached = fedsem::rounds_to_target(history, args.metric, args.target);
        long long rounds = reached ? *reached : history.back().round;
        long long cost = fedsem::communication_cost(param_count, rounds);
        if (baseline_cost < 0) baseline_cost = cost;
        std::string rounds_cell = reached ? std::to_string(*reached) : "never";
        std::string ratio_cell = "n/a";
        if (baseline_cost > 0) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", fedsem::relative_cost(cost, baseline_cost));
            ratio_cell = buf;
        }
        csv += args.histories[i] + "," + rounds_cell + "," + std::to_string(cost) + "," + ratio_cell + "\n";
    }
    if (!args.csv_path.empty()) {
        std::ofstream out(args.csv_path, std::ios::binary | std::ios::trunc);
        if (!out) throw fedsem::DataError("cannot write " + args.csv_path);
        out << csv;
    }
    if (!args.quiet) std::fputs(csv.c_str(), stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated multi-semantic benchmark toolkit"};
    app.require_subcommand(1);

    CommonArgs cluster_args, partition_args, simulate_args;
    auto* cluster = app.add_subcommand("cluster", "build category tensors and fit semantic clusters");
    add_common(cluster, cluster_args, false);
    auto* partition = app.add_subcommand("partition", "cluster, balance, and partition samples to clients");
    add_common(partition, partition_args, false);
    auto* simulate = app.add_subcommand("simulate", "run the full federated simulation pipeline");
    add_common(simulate, simulate_args, true);

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "rounds-to-target and communication cost tables");
    report->add_option("--history", report_args.histories, "history.jsonl files")->required();
    report->add_option("--metric", report_args.metric, "metric column (default acc)");
    report->add_option("--target", report_args.target, "target metric value (default 0.85)");
    report->add_option("--params", report_args.params, "model parameter count(s) for cost");
    report->add_option("--csv", report_args.csv_path, "also write the table to this CSV file");
    report->add_flag("--quiet", report_args.quiet, "suppress stdout table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cluster->parsed()) return cmd_cluster(cluster_args);
        if (partition->parsed()) return cmd_partition(partition_args);
        if (simulate->parsed()) return cmd_simulate(simulate_args);
        if (report->parsed()) return cmd_report(report_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
