#include "fedsem/semantics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fedsem/errors.hpp"
#include "fedsem/parallel.hpp"
#include "fedsem/rng.hpp"

namespace fedsem {

CategoryMap CategoryMap::identity(std::array<int, 3> dims) {
    CategoryMap map;
    map.dims = dims;
    for (int i = 0; i < dims[0]; ++i) map.object_map[i] = i;
    for (int i = 0; i < dims[2]; ++i) map.predicate_map[i] = i;
    return map;
}

void CategoryMap::validate() const {
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
        throw DataError("category map dims must be positive");
    if (dims[0] != dims[1])
        throw DataError("subject and object axes share one vocabulary, dims[0] must equal dims[1]");
    std::set<int> object_supers, predicate_supers;
    for (const auto& [fine, super] : object_map) {
        if (super < 0 || super >= dims[0])
            throw DataError("object super-class " + std::to_string(super) + " out of range for fine label " +
                            std::to_string(fine));
        object_supers.insert(super);
    }
    for (const auto& [fine, super] : predicate_map) {
        if (super < 0 || super >= dims[2])
            throw DataError("predicate super-class " + std::to_string(super) + " out of range for fine label " +
                            std::to_string(fine));
        predicate_supers.insert(super);
    }
    if (static_cast<int>(object_supers.size()) != dims[0])
        throw DataError("object super-class indices not dense in [0, " + std::to_string(dims[0]) + ")");
    if (static_cast<int>(predicate_supers.size()) != dims[2])
        throw DataError("predicate super-class indices not dense in [0, " + std::to_string(dims[2]) + ")");
}

int CategoryMap::map_object(int fine) const {
    auto it = object_map.find(fine);
    if (it == object_map.end())
        throw DataError("no super-class mapping for object label " + std::to_string(fine));
    return it->second;
}

int CategoryMap::map_predicate(int fine) const {
    auto it = predicate_map.find(fine);
    if (it == predicate_map.end())
        throw DataError("no super-class mapping for predicate label " + std::to_string(fine));
    return it->second;
}

Triplet CategoryMap::map_triplet(const Triplet& fine) const {
    return {map_object(fine[0]), map_object(fine[1]), map_predicate(fine[2])};
}

CategoryTensor build_category_tensor(const AnnotationRecord& record, const CategoryMap& map) {
    if (record.relations.empty())
        throw DataError("record " + record.sample_id + " has no relations");
    CategoryTensor tensor;
    tensor.dims = {map.dims[0], map.dims[1], map.dims[2]};
    tensor.values.assign(static_cast<std::size_t>(map.dims[0]) * map.dims[1] * map.dims[2], 0.0);
    for (const auto& rel : record.relations) {
        Triplet super = map.map_triplet(rel);
        std::size_t cell = (static_cast<std::size_t>(super[0]) * map.dims[1] + super[1]) * map.dims[2] + super[2];
        tensor.values[cell] += 1.0;
    }
    return tensor;
}

CategoryTensor build_attribute_tensor(const AnnotationRecord& record) {
    if (record.attributes.empty())
        throw DataError("record " + record.sample_id + " has no attributes");
    CategoryTensor tensor;
    tensor.dims = {static_cast<int>(record.attributes.size())};
    tensor.values.reserve(record.attributes.size());
    for (int v : record.attributes) {
        if (v != -1 && v != 1)
            throw DataError("record " + record.sample_id + " has attribute value " + std::to_string(v) +
                            ", expected -1 or +1");
        tensor.values.push_back(static_cast<double>(v));
    }
    return tensor;
}

CategoryTensor l1_normalized(const CategoryTensor& tensor) {
    CategoryTensor out = tensor;
    double total = 0.0;
    for (double v : out.values) total += std::abs(v);
    if (total > 0.0)
        for (double& v : out.values) v /= total;
    return out;
}

namespace kernels {

static inline void assign_point(const double* point, int d, const std::vector<double>& centroids, int k,
                                int& label, double& best) {
    best = std::numeric_limits<double>::infinity();
    label = 0;
    for (int c = 0; c < k; ++c) {
        const double* centroid = centroids.data() + static_cast<std::size_t>(c) * d;
        double dist = 0.0;
        for (int j = 0; j < d; ++j) {
            double diff = point[j] - centroid[j];
            dist += diff * diff;
        }
        if (dist < best) {
            best = dist;
            label = c;
        }
    }
}

void assign_nearest_serial(const std::vector<double>& points, int n, int d,
                           const std::vector<double>& centroids, int k,
                           std::vector<int>& labels, std::vector<double>& sqdist) {
    labels.resize(n);
    sqdist.resize(n);
    for (int i = 0; i < n; ++i)
        assign_point(points.data() + static_cast<std::size_t>(i) * d, d, centroids, k, labels[i], sqdist[i]);
}

void assign_nearest_parallel(const std::vector<double>& points, int n, int d,
                             const std::vector<double>& centroids, int k,
                             std::vector<int>& labels, std::vector<double>& sqdist) {
    labels.resize(n);
    sqdist.resize(n);
#pragma omp parallel for schedule(static) num_threads(parallel::worker_count())
    for (int i = 0; i < n; ++i)
        assign_point(points.data() + static_cast<std::size_t>(i) * d, d, centroids, k, labels[i], sqdist[i]);
}

void update_min_sqdist_serial(const std::vector<double>& points, int n, int d,
                              const std::vector<double>& centroid, std::vector<double>& min_sqdist) {
    for (int i = 0; i < n; ++i) {
        const double* point = points.data() + static_cast<std::size_t>(i) * d;
        double dist = 0.0;
        for (int j = 0; j < d; ++j) {
            double diff = point[j] - centroid[j];
            dist += diff * diff;
        }
        if (dist < min_sqdist[i]) min_sqdist[i] = dist;
    }
}

void update_min_sqdist_parallel(const std::vector<double>& points, int n, int d,
                                const std::vector<double>& centroid, std::vector<double>& min_sqdist) {
#pragma omp parallel for schedule(static) num_threads(parallel::worker_count())
    for (int i = 0; i < n; ++i) {
        const double* point = points.data() + static_cast<std::size_t>(i) * d;
        double dist = 0.0;
        for (int j = 0; j < d; ++j) {
            double diff = point[j] - centroid[j];
            dist += diff * diff;
        }
        if (dist < min_sqdist[i]) min_sqdist[i] = dist;
    }
}

} // namespace kernels

namespace {

// k-means++: first centroid uniform, then proportional to current min squared distance.
// Inverse-CDF sampling keeps the draw portable and deterministic.
std::vector<std::vector<double>> kmeanspp_init(const std::vector<double>& points, int n, int d, int k,
                                               std::uint64_t seed, bool use_parallel) {
    auto eng = rng::engine(seed);
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);

    std::uniform_int_distribution<int> first(0, n - 1);
    int idx = first(eng);
    centroids.emplace_back(points.begin() + static_cast<std::size_t>(idx) * d,
                           points.begin() + static_cast<std::size_t>(idx + 1) * d);

    std::vector<double> min_sqdist(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        if (use_parallel)
            kernels::update_min_sqdist_parallel(points, n, d, centroids.back(), min_sqdist);
        else
            kernels::update_min_sqdist_serial(points, n, d, centroids.back(), min_sqdist);
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += min_sqdist[i];
        int pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            double u = unit(eng) * total;
            double cum = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                cum += min_sqdist[i];
                if (u < cum) {
                    pick = i;
                    break;
                }
            }
        } else {
            // All points coincide with chosen centroids; any point works.
            std::uniform_int_distribution<int> any(0, n - 1);
            pick = any(eng);
        }
        centroids.emplace_back(points.begin() + static_cast<std::size_t>(pick) * d,
                               points.begin() + static_cast<std::size_t>(pick + 1) * d);
    }
    return centroids;
}

std::vector<double> flatten_centroids(const std::vector<std::vector<double>>& centroids, int d) {
    std::vector<double> flat(centroids.size() * static_cast<std::size_t>(d));
    for (std::size_t c = 0; c < centroids.size(); ++c)
        std::copy(centroids[c].begin(), centroids[c].end(), flat.begin() + c * static_cast<std::size_t>(d));
    return flat;
}

} // namespace

std::pair<ClusterModel, ClusterAssignment>
kmeans_fit(const std::vector<std::string>& ids, const std::vector<CategoryTensor>& tensors,
           const KMeansOptions& opts) {
    const int n = static_cast<int>(tensors.size());
    if (n == 0) throw DataError("kmeans_fit: empty input");
    if (ids.size() != tensors.size()) throw DataError("kmeans_fit: ids and tensors length mismatch");
    if (opts.n_clusters < 1) throw ConfigError("kmeans_fit: n_clusters must be >= 1");
    if (opts.n_clusters > n)
        throw ConfigError("kmeans_fit: n_clusters " + std::to_string(opts.n_clusters) + " exceeds sample count " +
                          std::to_string(n));
    const int d = static_cast<int>(tensors[0].size());
    for (const auto& t : tensors)
        if (t.dims != tensors[0].dims)
            throw DataError("kmeans_fit: tensor dimension mismatch");

    std::vector<double> points(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i)
        std::copy(tensors[i].values.begin(), tensors[i].values.end(),
                  points.begin() + static_cast<std::size_t>(i) * d);

    const int k = opts.n_clusters;
    auto centroids = kmeanspp_init(points, n, d, k, opts.seed, opts.use_parallel);
    if (opts.inertia_trace) opts.inertia_trace->clear();

    std::vector<int> labels;
    std::vector<double> sqdist;
    double inertia = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> counts(k);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        auto flat = flatten_centroids(centroids, d);
        if (opts.use_parallel)
            kernels::assign_nearest_parallel(points, n, d, flat, k, labels, sqdist);
        else
            kernels::assign_nearest_serial(points, n, d, flat, k, labels, sqdist);

        // Repair empty clusters by stealing the farthest point, lowest index on ties.
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (int i = 0; i < n; ++i) counts[labels[i]]++;
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            int farthest = -1;
            double best = -1.0;
            for (int i = 0; i < n; ++i)
                if (counts[labels[i]] > 1 && sqdist[i] > best) {
                    best = sqdist[i];
                    farthest = i;
                }
            assert(farthest >= 0);
            counts[labels[farthest]]--;
            labels[farthest] = c;
            counts[c] = 1;
            sqdist[farthest] = 0.0;
        }

        double new_inertia = 0.0;
        for (int i = 0; i < n; ++i) new_inertia += sqdist[i];
        assert(new_inertia <= inertia * (1.0 + 1e-12) + 1e-12);
        inertia = new_inertia;
        if (opts.inertia_trace) opts.inertia_trace->push_back(inertia);

        std::vector<std::vector<double>> next(k, std::vector<double>(d, 0.0));
        for (int i = 0; i < n; ++i) {
            const double* point = points.data() + static_cast<std::size_t>(i) * d;
            auto& acc = next[labels[i]];
            for (int j = 0; j < d; ++j) acc[j] += point[j];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            for (int j = 0; j < d; ++j) next[c][j] /= static_cast<double>(counts[c]);
            double delta = 0.0;
            for (int j = 0; j < d; ++j) {
                double diff = next[c][j] - centroids[c][j];
                delta += diff * diff;
            }
            shift = std::max(shift, std::sqrt(delta));
        }
        centroids = std::move(next);
        if (shift < opts.tol) break;
    }

    // Final assignment against the converged centroids.
    auto flat = flatten_centroids(centroids, d);
    if (opts.use_parallel)
        kernels::assign_nearest_parallel(points, n, d, flat, k, labels, sqdist);
    else
        kernels::assign_nearest_serial(points, n, d, flat, k, labels, sqdist);
    inertia = 0.0;
    for (int i = 0; i < n; ++i) inertia += sqdist[i];

    ClusterModel model;
    model.n_clusters = k;
    model.centroids = std::move(centroids);
    model.inertia = inertia;

    ClusterAssignment assignment;
    assignment.n_clusters = k;
    for (int i = 0; i < n; ++i) {
        auto [it, inserted] = assignment.labels.emplace(ids[i], labels[i]);
        if (!inserted) throw DataError("kmeans_fit: duplicate sample_id " + ids[i]);
    }
    return {std::move(model), std::move(assignment)};
}

int kmeans_assign(const ClusterModel& model, const CategoryTensor& tensor) {
    if (model.n_clusters < 1 || model.centroids.empty())
        throw DataError("kmeans_assign: empty model");
    if (tensor.size() != model.centroids[0].size())
        throw DataError("kmeans_assign: tensor dimension mismatch");
    int label = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.n_clusters; ++c) {
        double dist = 0.0;
        for (std::size_t j = 0; j < tensor.values.size(); ++j) {
            double diff = tensor.values[j] - model.centroids[c][j];
            dist += diff * diff;
        }
        if (dist < best) {
            best = dist;
            label = c;
        }
    }
    return label;
}

ClusterAssignment balance_clusters(const ClusterAssignment& assignment, std::uint64_t seed) {
    if (assignment.n_clusters < 1) throw DataError("balance_clusters: no clusters");
    std::vector<std::vector<std::string>> members(assignment.n_clusters);
    for (const auto& [id, cluster] : assignment.labels) members[cluster].push_back(id);
    std::size_t m = std::numeric_limits<std::size_t>::max();
    for (int c = 0; c < assignment.n_clusters; ++c) {
        if (members[c].empty())
            throw DataError("balance_clusters: cluster " + std::to_string(c) + " is empty");
        m = std::min(m, members[c].size());
    }
    ClusterAssignment out;
    out.n_clusters = assignment.n_clusters;
    for (int c = 0; c < assignment.n_clusters; ++c) {
        auto eng = rng::engine(rng::derive(seed, 0x62616Cu, static_cast<std::uint64_t>(c)));
        auto picks = rng::sample_without_replacement(static_cast<int>(members[c].size()),
                                                     static_cast<int>(m), eng);
        for (int idx : picks) out.labels.emplace(members[c][idx], c);
    }
    return out;
}

} // namespace fedsem
