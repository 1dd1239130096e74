// Timing comparison of the serial reference kernels against the OpenMP
// variants, verifying along the way that both produce bit-identical results.
// `--quick` shrinks the workloads for use as a smoke test.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "fedsem/datagen.hpp"
#include "fedsem/flcore.hpp"
#include "fedsem/parallel.hpp"
#include "fedsem/partition.hpp"
#include "fedsem/semantics.hpp"
#include "fedsem/trainer.hpp"

using namespace fedsem;

namespace {

template <typename F>
double best_ms(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void print_row(const std::string& name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-38s %10.3f %12.3f %8.2fx   %s\n", name.c_str(), serial_ms, parallel_ms,
                parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, identical ? "yes" : "NO");
}

struct Workload {
    int points;
    int dim;
    int clusters;
    int reps;
    int samples_per_cluster;  // drives the evaluation/round workloads
};

int run(const Workload& w) {
    bool all_identical = true;
    std::printf("workers: %d (OpenMP %s)\n\n", parallel::worker_count(),
                parallel::enabled() ? "active" : "inactive or single-threaded");
    std::printf("%-38s %10s %12s %9s   %s\n", "workload", "serial ms", "parallel ms", "speedup",
                "identical");

    std::mt19937_64 eng(4242);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> points(static_cast<std::size_t>(w.points) * w.dim);
    std::vector<double> centroids(static_cast<std::size_t>(w.clusters) * w.dim);
    for (auto& v : points) v = dist(eng);
    for (auto& v : centroids) v = dist(eng);

    {
        std::vector<int> labels_s, labels_p;
        std::vector<double> sq_s, sq_p;
        double serial = best_ms(w.reps, [&] {
            kernels::assign_nearest_serial(points, w.points, w.dim, centroids, w.clusters, labels_s, sq_s);
        });
        double parallel = best_ms(w.reps, [&] {
            kernels::assign_nearest_parallel(points, w.points, w.dim, centroids, w.clusters, labels_p, sq_p);
        });
        bool identical = labels_s == labels_p && sq_s == sq_p;
        all_identical = all_identical && identical;
        char name[64];
        std::snprintf(name, sizeof(name), "assign_nearest %dx%d k=%d", w.points, w.dim, w.clusters);
        print_row(name, serial, parallel, identical);
    }

    {
        std::vector<double> centroid(points.begin(), points.begin() + w.dim);
        std::vector<double> min_s(static_cast<std::size_t>(w.points), 1e300);
        std::vector<double> min_p(static_cast<std::size_t>(w.points), 1e300);
        double serial = best_ms(w.reps, [&] {
            std::fill(min_s.begin(), min_s.end(), 1e300);
            kernels::update_min_sqdist_serial(points, w.points, w.dim, centroid, min_s);
        });
        double parallel = best_ms(w.reps, [&] {
            std::fill(min_p.begin(), min_p.end(), 1e300);
            kernels::update_min_sqdist_parallel(points, w.points, w.dim, centroid, min_p);
        });
        bool identical = min_s == min_p;
        all_identical = all_identical && identical;
        char name[64];
        std::snprintf(name, sizeof(name), "update_min_sqdist %dx%d", w.points, w.dim);
        print_row(name, serial, parallel, identical);
    }

    GeneratorSpec g;
    g.samples_per_cluster = w.samples_per_cluster;
    g.seed = 99;
    auto bed = make_testbed(g, 0.4, 100);

    ModelLayout layout{7, 2 * 13};
    auto params = ModelParams::zeros(layout);
    std::uniform_real_distribution<double> pdist(-0.5, 0.5);
    for (auto& v : params.values) v = pdist(eng);

    {
        MetricRecord serial_rec, parallel_rec;
        double serial =
            best_ms(w.reps, [&] { serial_rec = evaluate(params, bed.test, {13, 13, 7}, false); });
        double parallel =
            best_ms(w.reps, [&] { parallel_rec = evaluate(params, bed.test, {13, 13, 7}, true); });
        bool identical = serial_rec.loss == parallel_rec.loss && serial_rec.acc == parallel_rec.acc &&
                         serial_rec.r20 == parallel_rec.r20 && serial_rec.mr20 == parallel_rec.mr20 &&
                         serial_rec.r100 == parallel_rec.r100 && serial_rec.mr100 == parallel_rec.mr100;
        all_identical = all_identical && identical;
        char name[64];
        std::snprintf(name, sizeof(name), "evaluate %zu scenes", bed.test.size());
        print_row(name, serial, parallel, identical);
    }

    {
        auto plan = partition_shard(bed.train_labels, 20, 5, 17);
        SimulationBundle bundle;
        bundle.dims = {13, 13, 7};
        bundle.client_data.resize(plan.clients.size());
        std::map<std::string, const AnnotationRecord*> by_id;
        for (const auto& r : bed.train) by_id[r.sample_id] = &r;
        for (std::size_t u = 0; u < plan.clients.size(); ++u)
            for (const auto& id : plan.clients[u])
                for (const auto& rel : by_id.at(id)->relations)
                    bundle.client_data[u].push_back(featurize(rel, bundle.dims));
        bundle.test_scenes = bed.test;
        bundle.round_cfg.total_clients = 20;
        bundle.round_cfg.clients_per_round = 10;
        bundle.round_cfg.total_rounds = 1;
        bundle.round_cfg.master_seed = 7;

        ServerState state_s, state_p;
        double serial = best_ms(w.reps, [&] {
            bundle.use_parallel = false;
            state_s = ServerState::init(layout);
            run_round(state_s, bundle, 1);
        });
        double parallel = best_ms(w.reps, [&] {
            bundle.use_parallel = true;
            state_p = ServerState::init(layout);
            run_round(state_p, bundle, 1);
        });
        bool identical = state_s.global.values == state_p.global.values;
        all_identical = all_identical && identical;
        print_row("federated round, 10 clients", serial, parallel, identical);
    }

    std::printf("\n%s\n", all_identical ? "all parallel outputs bit-identical to serial"
                                        : "MISMATCH between serial and parallel outputs");
    return all_identical ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) {
            quick = true;
        } else {
            std::fprintf(stderr, "usage: fedsem_bench [--quick]\n");
            return 2;
        }
    }
    Workload w = quick ? Workload{2000, 32, 8, 2, 40} : Workload{20000, 64, 16, 5, 300};
    return run(w);
}
