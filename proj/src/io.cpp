#include "fedsem/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedsem/errors.hpp"
#include "fedsem/rng.hpp"

namespace fedsem {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kTagGenerator = 1;
constexpr std::uint64_t kTagClustering = 2;
constexpr std::uint64_t kTagBalance = 3;
constexpr std::uint64_t kTagPartition = 4;
constexpr std::uint64_t kTagRound = 5;

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

[[noreturn]] void line_error(const std::string& path, std::size_t line, const std::string& msg) {
    throw DataError(path + ":" + std::to_string(line) + ": " + msg);
}

json parse_line(const std::string& path, std::size_t line_no, const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) line_error(path, line_no, "malformed JSON object");
    return j;
}

} // namespace

std::vector<AnnotationRecord> load_annotations(const std::string& path) {
    auto in = open_in(path);
    std::vector<AnnotationRecord> records;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        json j = parse_line(path, line_no, line);
        AnnotationRecord record;
        if (!j.contains("sample_id") || !j["sample_id"].is_string())
            line_error(path, line_no, "missing string field sample_id");
        record.sample_id = j["sample_id"].get<std::string>();
        if (record.sample_id.empty()) line_error(path, line_no, "empty sample_id");
        if (!seen.insert(record.sample_id).second)
            line_error(path, line_no, "duplicate sample_id " + record.sample_id);

        const bool has_rel = j.contains("relations"), has_attr = j.contains("attributes");
        if (has_rel == has_attr)
            line_error(path, line_no, "record must carry exactly one of relations/attributes");
        if (has_rel) {
            const auto& rels = j["relations"];
            if (!rels.is_array() || rels.empty()) line_error(path, line_no, "relations must be a non-empty array");
            for (const auto& r : rels) {
                if (!r.is_array() || r.size() != 3 || !r[0].is_number_integer() || !r[1].is_number_integer() ||
                    !r[2].is_number_integer())
                    line_error(path, line_no, "each relation must be [subject, object, predicate] integers");
                Triplet t{r[0].get<int>(), r[1].get<int>(), r[2].get<int>()};
                if (t[0] < 0 || t[1] < 0 || t[2] < 0) line_error(path, line_no, "negative category index");
                record.relations.push_back(t);
            }
        } else {
            const auto& attrs = j["attributes"];
            if (!attrs.is_array() || attrs.empty())
                line_error(path, line_no, "attributes must be a non-empty array");
            for (const auto& a : attrs) {
                if (!a.is_number_integer()) line_error(path, line_no, "attributes must be integers");
                int v = a.get<int>();
                if (v != -1 && v != 1) line_error(path, line_no, "attribute values must be -1 or +1");
                record.attributes.push_back(v);
            }
        }
        records.push_back(std::move(record));
    }
    return records;
}

void save_annotations(const std::string& path, const std::vector<AnnotationRecord>& records) {
    auto out = open_out(path);
    for (const auto& record : records) {
        ordered_json j;
        j["sample_id"] = record.sample_id;
        if (record.relation_mode()) {
            auto rels = json::array();
            for (const auto& t : record.relations) rels.push_back({t[0], t[1], t[2]});
            j["relations"] = std::move(rels);
        } else {
            j["attributes"] = record.attributes;
        }
        out << j.dump() << '\n';
    }
}

CategoryMap load_category_map(const std::string& path) {
    auto in = open_in(path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError(path + ": malformed category map JSON");
    CategoryMap map;
    if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].size() != 3)
        throw DataError(path + ": dims must be a 3-element array");
    for (int i = 0; i < 3; ++i) {
        if (!j["dims"][i].is_number_integer()) throw DataError(path + ": dims must be integers");
        map.dims[i] = j["dims"][i].get<int>();
    }
    auto read_map = [&](const char* key, std::map<int, int>& dest) {
        if (!j.contains(key) || !j[key].is_object())
            throw DataError(path + ": missing object field " + std::string(key));
        for (const auto& [fine_str, super] : j[key].items()) {
            int fine;
            try {
                fine = std::stoi(fine_str);
            } catch (...) {
                throw DataError(path + ": non-integer fine label \"" + fine_str + "\" in " + key);
            }
            if (!super.is_number_integer())
                throw DataError(path + ": non-integer super-class for fine label " + fine_str + " in " + key);
            if (!dest.emplace(fine, super.get<int>()).second)
                throw DataError(path + ": duplicate fine label " + fine_str + " in " + key);
        }
    };
    read_map("object_map", map.object_map);
    read_map("predicate_map", map.predicate_map);
    map.validate();
    return map;
}

void save_category_map(const std::string& path, const CategoryMap& map) {
    ordered_json j;
    ordered_json objects, predicates;
    for (const auto& [fine, super] : map.object_map) objects[std::to_string(fine)] = super;
    for (const auto& [fine, super] : map.predicate_map) predicates[std::to_string(fine)] = super;
    j["object_map"] = std::move(objects);
    j["predicate_map"] = std::move(predicates);
    j["dims"] = {map.dims[0], map.dims[1], map.dims[2]};
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

ClusterAssignment load_assignment(const std::string& path) {
    auto in = open_in(path);
    ClusterAssignment assignment;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        json j = parse_line(path, line_no, line);
        if (!j.contains("sample_id") || !j["sample_id"].is_string() || !j.contains("cluster") ||
            !j["cluster"].is_number_integer())
            line_error(path, line_no, "expected {\"sample_id\": str, \"cluster\": int}");
        int cluster = j["cluster"].get<int>();
        if (cluster < 0) line_error(path, line_no, "negative cluster index");
        if (!assignment.labels.emplace(j["sample_id"].get<std::string>(), cluster).second)
            line_error(path, line_no, "duplicate sample_id " + j["sample_id"].get<std::string>());
        assignment.n_clusters = std::max(assignment.n_clusters, cluster + 1);
    }
    return assignment;
}

void save_assignment(const std::string& path, const ClusterAssignment& assignment) {
    auto out = open_out(path);
    for (const auto& [id, cluster] : assignment.labels) {
        ordered_json j;
        j["sample_id"] = id;
        j["cluster"] = cluster;
        out << j.dump() << '\n';
    }
}

namespace {

std::string strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Random:
        return "random";
    case Strategy::Shard:
        return "shard";
    case Strategy::Dirichlet:
        return "dirichlet";
    }
    return "random";
}

Strategy strategy_from(const std::string& name, const std::string& origin) {
    if (name == "random") return Strategy::Random;
    if (name == "shard") return Strategy::Shard;
    if (name == "dirichlet") return Strategy::Dirichlet;
    throw ConfigError(origin + ": unknown partition strategy \"" + name + "\"");
}

ordered_json spec_to_json(const PartitionSpec& spec) {
    ordered_json j;
    j["strategy"] = strategy_name(spec.strategy);
    j["n_clients"] = spec.n_clients;
    j["seed"] = spec.seed;
    if (spec.strategy == Strategy::Shard) {
        j["p"] = spec.shard_p;
        j["size_weighted"] = spec.size_weighted;
    }
    if (spec.strategy == Strategy::Dirichlet) j["alpha"] = spec.alpha;
    return j;
}

} // namespace

PartitionPlan load_plan(const std::string& path) {
    auto in = open_in(path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("spec") || !j.contains("clients"))
        throw DataError(path + ": malformed partition plan");
    PartitionPlan plan;
    const auto& spec = j["spec"];
    plan.spec.strategy = strategy_from(spec.value("strategy", "random"), path);
    plan.spec.n_clients = spec.value("n_clients", 0);
    plan.spec.seed = spec.value("seed", std::uint64_t{0});
    plan.spec.shard_p = spec.value("p", 1);
    plan.spec.size_weighted = spec.value("size_weighted", false);
    if (spec.contains("alpha")) plan.spec.alpha = spec["alpha"].get<std::vector<double>>();
    if (plan.spec.n_clients < 1) throw DataError(path + ": plan spec has no clients");
    plan.clients.resize(plan.spec.n_clients);
    for (const auto& [key, ids] : j["clients"].items()) {
        int client;
        try {
            client = std::stoi(key);
        } catch (...) {
            throw DataError(path + ": non-integer client id \"" + key + "\"");
        }
        if (client < 0 || client >= plan.spec.n_clients)
            throw DataError(path + ": client id " + key + " out of range");
        if (!ids.is_array()) throw DataError(path + ": client " + key + " ids must be an array");
        for (const auto& id : ids) {
            if (!id.is_string()) throw DataError(path + ": sample ids must be strings");
            plan.clients[client].push_back(id.get<std::string>());
        }
    }
    return plan;
}

void save_plan(const std::string& path, const PartitionPlan& plan) {
    ordered_json j;
    j["spec"] = spec_to_json(plan.spec);
    ordered_json clients;
    for (std::size_t u = 0; u < plan.clients.size(); ++u) clients[std::to_string(u)] = plan.clients[u];
    j["clients"] = std::move(clients);
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

RoundHistory load_history(const std::string& path) {
    auto in = open_in(path);
    RoundHistory history;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        json j = parse_line(path, line_no, line);
        MetricRecord record;
        if (!j.contains("round") || !j["round"].is_number_integer())
            line_error(path, line_no, "missing integer field round");
        record.round = j["round"].get<int>();
        auto metric = [&](const char* key) {
            if (!j.contains(key) || !j[key].is_number()) line_error(path, line_no, std::string("missing ") + key);
            return j[key].get<double>();
        };
        record.loss = metric("loss");
        record.acc = metric("acc");
        record.r20 = metric("r20");
        record.r50 = metric("r50");
        record.r100 = metric("r100");
        record.mr20 = metric("mr20");
        record.mr50 = metric("mr50");
        record.mr100 = metric("mr100");
        record.final_round = j.value("final", false);
        record.wall_ms = j.value("wall_ms", 0.0);
        history.push_back(record);
    }
    return history;
}

void save_history_jsonl(const std::string& path, const RoundHistory& history, bool include_timings) {
    auto out = open_out(path);
    for (const auto& r : history) {
        ordered_json j;
        j["round"] = r.round;
        j["loss"] = r.loss;
        j["acc"] = r.acc;
        j["r20"] = r.r20;
        j["r50"] = r.r50;
        j["r100"] = r.r100;
        j["mr20"] = r.mr20;
        j["mr50"] = r.mr50;
        j["mr100"] = r.mr100;
        if (include_timings) j["wall_ms"] = r.wall_ms;
        if (r.final_round) j["final"] = true;
        out << j.dump() << '\n';
    }
}

void save_history_csv(const std::string& path, const RoundHistory& history) {
    auto out = open_out(path);
    out << "round,loss,acc,r20,r50,r100,mr20,mr50,mr100\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.round, r.loss, r.acc,
                      r.r20, r.r50, r.r100, r.mr20, r.mr50, r.mr100);
        out << buf;
    }
}

void save_heterogeneity_csv(const std::string& path, const HeterogeneityReport& report) {
    auto out = open_out(path);
    const int n = report.clients.empty() ? 0 : static_cast<int>(report.clients.front().histogram.size());
    out << "client_id";
    for (int c = 0; c < n; ++c) out << ",cluster" << c;
    out << ",entropy,max_proportion\n";
    char buf[64];
    for (const auto& stats : report.clients) {
        out << stats.client_id;
        for (int count : stats.histogram) out << ',' << count;
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", stats.entropy, stats.max_proportion);
        out << buf;
    }
}

void save_params(const std::string& path, const ModelParams& params) {
    ordered_json header;
    header["num_classes"] = params.layout.num_classes;
    header["feature_dim"] = params.layout.feature_dim;
    header["count"] = params.values.size();
    auto out = open_out(path);
    out << header.dump() << '\n';
    for (double v : params.values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
        out.write(bytes, 8);
    }
}

ModelParams load_params(const std::string& path) {
    auto in = open_in(path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError(path + ": missing layout header");
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.is_object()) throw DataError(path + ": malformed layout header");
    ModelParams params;
    params.layout.num_classes = header.value("num_classes", 0);
    params.layout.feature_dim = header.value("feature_dim", 0);
    auto count = header.value("count", std::size_t{0});
    if (params.layout.size() != static_cast<int>(count))
        throw DataError(path + ": layout/count mismatch");
    params.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        char bytes[8];
        if (!in.read(bytes, 8)) throw DataError(path + ": truncated parameter payload");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[b])) << (8 * b);
        params.values[i] = std::bit_cast<double>(bits);
    }
    return params;
}

namespace {

[[noreturn]] void cfg_fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config: " + path + ": " + msg);
}

const json& require_object(const json& parent, const char* key, const std::string& path) {
    if (!parent.contains(key)) cfg_fail(path, "missing section");
    if (!parent[key].is_object()) cfg_fail(path, "must be an object");
    return parent[key];
}

int get_int(const json& obj, const char* key, const std::string& path, std::optional<int> def = {}) {
    if (!obj.contains(key)) {
        if (def) return *def;
        cfg_fail(path + "." + key, "missing integer field");
    }
    if (!obj[key].is_number_integer()) cfg_fail(path + "." + key, "must be an integer");
    return obj[key].get<int>();
}

double get_double(const json& obj, const char* key, const std::string& path, std::optional<double> def = {}) {
    if (!obj.contains(key)) {
        if (def) return *def;
        cfg_fail(path + "." + key, "missing numeric field");
    }
    if (!obj[key].is_number()) cfg_fail(path + "." + key, "must be a number");
    return obj[key].get<double>();
}

bool get_bool(const json& obj, const char* key, const std::string& path, bool def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_boolean()) cfg_fail(path + "." + key, "must be a boolean");
    return obj[key].get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& path,
                       std::optional<std::string> def = {}) {
    if (!obj.contains(key)) {
        if (def) return *def;
        cfg_fail(path + "." + key, "missing string field");
    }
    if (!obj[key].is_string()) cfg_fail(path + "." + key, "must be a string");
    return obj[key].get<std::string>();
}

std::uint64_t get_seed(const json& obj, const char* key, const std::string& path, std::uint64_t def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer())
        cfg_fail(path + "." + key, "must be an integer seed");
    return obj[key].get<std::uint64_t>();
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) throw ConfigError("config: " + origin + ": malformed JSON");

    ExperimentConfig cfg;
    cfg.seed = get_seed(root, "seed", origin, 0);
    cfg.output_dir = get_string(root, "output_dir", origin, std::string("out"));
    cfg.use_parallel = get_bool(root, "use_parallel", origin, true);

    const auto& dataset = require_object(root, "dataset", "dataset");
    cfg.dataset.holdout_fraction = get_double(dataset, "holdout_fraction", "dataset", 0.2);
    const bool has_gen = dataset.contains("generator"), has_file = dataset.contains("file");
    if (has_gen == has_file) cfg_fail("dataset", "exactly one of generator/file is required");
    if (has_gen) {
        const auto& gen = require_object(dataset, "generator", "dataset.generator");
        GeneratorSpec spec;
        spec.n_true_clusters = get_int(gen, "n_true_clusters", "dataset.generator", 5);
        spec.samples_per_cluster = get_int(gen, "samples_per_cluster", "dataset.generator", 200);
        if (gen.contains("dims")) {
            if (!gen["dims"].is_array() || gen["dims"].size() != 3)
                cfg_fail("dataset.generator.dims", "must be a 3-element array");
            for (int i = 0; i < 3; ++i) spec.dims[i] = gen["dims"][i].get<int>();
        }
        if (gen.contains("relations_per_sample")) {
            if (!gen["relations_per_sample"].is_array() || gen["relations_per_sample"].size() != 2)
                cfg_fail("dataset.generator.relations_per_sample", "must be [min, max]");
            spec.min_relations = gen["relations_per_sample"][0].get<int>();
            spec.max_relations = gen["relations_per_sample"][1].get<int>();
        }
        spec.separation = get_double(gen, "separation", "dataset.generator", 0.05);
        spec.seed = get_seed(gen, "seed", "dataset.generator", rng::derive(cfg.seed, kTagGenerator));
        spec.validate();
        cfg.dataset.generator = spec;
    } else {
        cfg.dataset.annotations_path = get_string(dataset, "file", "dataset");
        cfg.dataset.category_map_path = get_string(dataset, "category_map", "dataset", std::string());
    }
    if (!(cfg.dataset.holdout_fraction > 0.0) || !(cfg.dataset.holdout_fraction < 1.0))
        cfg_fail("dataset.holdout_fraction", "must be in (0, 1)");

    if (root.contains("clustering")) {
        const auto& clustering = require_object(root, "clustering", "clustering");
        cfg.clustering.n_clusters = get_int(clustering, "n_clusters", "clustering", 5);
        cfg.clustering.max_iters = get_int(clustering, "max_iters", "clustering", 300);
        cfg.clustering.tol = get_double(clustering, "tol", "clustering", 1e-6);
        cfg.clustering.normalize = get_bool(clustering, "normalize", "clustering", false);
        cfg.clustering.seed = get_seed(clustering, "seed", "clustering", rng::derive(cfg.seed, kTagClustering));
        if (cfg.clustering.n_clusters < 1) cfg_fail("clustering.n_clusters", "must be >= 1");
        if (cfg.clustering.max_iters < 1) cfg_fail("clustering.max_iters", "must be >= 1");
        if (!(cfg.clustering.tol >= 0.0)) cfg_fail("clustering.tol", "must be >= 0");
    } else {
        cfg.clustering.seed = rng::derive(cfg.seed, kTagClustering);
    }

    cfg.balance = get_bool(root, "balance", "balance", true);

    if (root.contains("partition")) {
        const auto& partition = require_object(root, "partition", "partition");
        PartitionSpec spec;
        spec.strategy = strategy_from(get_string(partition, "strategy", "partition"), "partition.strategy");
        spec.n_clients = get_int(partition, "n_clients", "partition", -1);
        spec.seed = get_seed(partition, "seed", "partition", rng::derive(cfg.seed, kTagPartition));
        spec.shard_p = get_int(partition, "p", "partition", 1);
        spec.size_weighted = get_bool(partition, "size_weighted", "partition", false);
        if (partition.contains("alpha")) {
            if (partition["alpha"].is_number()) {
                spec.alpha.assign(cfg.clustering.n_clusters, partition["alpha"].get<double>());
            } else if (partition["alpha"].is_array()) {
                spec.alpha = partition["alpha"].get<std::vector<double>>();
            } else {
                cfg_fail("partition.alpha", "must be a number or array");
            }
        }
        cfg.partition = spec;
    }

    if (root.contains("round")) {
        const auto& round = require_object(root, "round", "round");
        cfg.round.total_clients = get_int(round, "total_clients", "round", 100);
        cfg.round.clients_per_round = get_int(round, "clients_per_round", "round", 5);
        cfg.round.total_rounds = get_int(round, "total_rounds", "round", 100);
        cfg.round.eval_every = get_int(round, "eval_every", "round", 1);
        cfg.round.strict_empty_clients = get_bool(round, "strict_empty_clients", "round", true);
        cfg.round.master_seed = get_seed(round, "seed", "round", rng::derive(cfg.seed, kTagRound));
        cfg.round.validate();
    } else {
        cfg.round.master_seed = rng::derive(cfg.seed, kTagRound);
    }

    if (root.contains("aggregator")) {
        const auto& agg = require_object(root, "aggregator", "aggregator");
        std::string kind = get_string(agg, "kind", "aggregator", std::string("fedavg"));
        if (kind == "fedavg")
            cfg.aggregator.kind = Aggregator::FedAvg;
        else if (kind == "fedavgm")
            cfg.aggregator.kind = Aggregator::FedAvgM;
        else if (kind == "fedadam")
            cfg.aggregator.kind = Aggregator::FedAdam;
        else
            cfg_fail("aggregator.kind", "must be fedavg, fedavgm, or fedadam");
        cfg.aggregator.beta = get_double(agg, "beta", "aggregator", 0.9);
        cfg.aggregator.beta1 = get_double(agg, "beta1", "aggregator", 0.9);
        cfg.aggregator.beta2 = get_double(agg, "beta2", "aggregator", 0.99);
        cfg.aggregator.eta = get_double(agg, "eta", "aggregator", 0.1);
        cfg.aggregator.epsilon = get_double(agg, "epsilon", "aggregator", 1e-8);
        cfg.aggregator.validate();
    }

    if (root.contains("local")) {
        const auto& local = require_object(root, "local", "local");
        cfg.local.epochs = get_int(local, "epochs", "local", 1);
        cfg.local.batch_size = get_int(local, "batch_size", "local", 16);
        cfg.local.learning_rate = get_double(local, "learning_rate", "local", 0.02);
        cfg.local.momentum = get_double(local, "momentum", "local", 0.9);
        cfg.local.weight_decay = get_double(local, "weight_decay", "local", 1e-4);
        cfg.local.grad_clip_norm = get_double(local, "grad_clip_norm", "local", 35.0);
        cfg.local.decay_before_clip = get_bool(local, "decay_before_clip", "local", false);
        cfg.local.validate();
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    auto in = open_in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str(), path);
}

std::string dump_experiment_config(const ExperimentConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["use_parallel"] = cfg.use_parallel;
    ordered_json dataset;
    if (cfg.dataset.generator) {
        const auto& g = *cfg.dataset.generator;
        ordered_json gen;
        gen["n_true_clusters"] = g.n_true_clusters;
        gen["samples_per_cluster"] = g.samples_per_cluster;
        gen["dims"] = {g.dims[0], g.dims[1], g.dims[2]};
        gen["relations_per_sample"] = {g.min_relations, g.max_relations};
        gen["separation"] = g.separation;
        gen["seed"] = g.seed;
        dataset["generator"] = std::move(gen);
    } else {
        dataset["file"] = cfg.dataset.annotations_path;
        if (!cfg.dataset.category_map_path.empty()) dataset["category_map"] = cfg.dataset.category_map_path;
    }
    dataset["holdout_fraction"] = cfg.dataset.holdout_fraction;
    j["dataset"] = std::move(dataset);

    ordered_json clustering;
    clustering["n_clusters"] = cfg.clustering.n_clusters;
    clustering["max_iters"] = cfg.clustering.max_iters;
    clustering["tol"] = cfg.clustering.tol;
    clustering["normalize"] = cfg.clustering.normalize;
    clustering["seed"] = cfg.clustering.seed;
    j["clustering"] = std::move(clustering);

    j["balance"] = cfg.balance;
    if (cfg.partition) j["partition"] = spec_to_json(*cfg.partition);

    ordered_json round;
    round["total_clients"] = cfg.round.total_clients;
    round["clients_per_round"] = cfg.round.clients_per_round;
    round["total_rounds"] = cfg.round.total_rounds;
    round["eval_every"] = cfg.round.eval_every;
    round["strict_empty_clients"] = cfg.round.strict_empty_clients;
    round["seed"] = cfg.round.master_seed;
    j["round"] = std::move(round);

    ordered_json agg;
    switch (cfg.aggregator.kind) {
    case Aggregator::FedAvg:
        agg["kind"] = "fedavg";
        break;
    case Aggregator::FedAvgM:
        agg["kind"] = "fedavgm";
        agg["beta"] = cfg.aggregator.beta;
        break;
    case Aggregator::FedAdam:
        agg["kind"] = "fedadam";
        agg["beta1"] = cfg.aggregator.beta1;
        agg["beta2"] = cfg.aggregator.beta2;
        agg["eta"] = cfg.aggregator.eta;
        agg["epsilon"] = cfg.aggregator.epsilon;
        break;
    }
    j["aggregator"] = std::move(agg);

    ordered_json local;
    local["epochs"] = cfg.local.epochs;
    local["batch_size"] = cfg.local.batch_size;
    local["learning_rate"] = cfg.local.learning_rate;
    local["momentum"] = cfg.local.momentum;
    local["weight_decay"] = cfg.local.weight_decay;
    local["grad_clip_norm"] = cfg.local.grad_clip_norm;
    local["decay_before_clip"] = cfg.local.decay_before_clip;
    j["local"] = std::move(local);
    return j.dump(2) + "\n";
}

} // namespace fedsem
