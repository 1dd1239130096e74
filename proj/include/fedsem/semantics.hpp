#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace fedsem {

// (subject, object, predicate) category indices. Comparable, so usable as map/set keys.
using Triplet = std::array<int, 3>;

struct AnnotationRecord {
    std::string sample_id;
    std::vector<Triplet> relations;
    std::vector<int> attributes; // binary ±1 values, attribute mode only

    bool relation_mode() const { return !relations.empty(); }
};

struct CategoryMap {
    std::map<int, int> object_map;    // fine label -> super-class, shared by subject/object axes
    std::map<int, int> predicate_map; // fine label -> super-class
    std::array<int, 3> dims{0, 0, 0}; // (N1, N2, N3) super-class counts

    // fine == super over the given dims.
    static CategoryMap identity(std::array<int, 3> dims);

    // Checks dims positivity, dims[0] == dims[1], super indices in range and dense.
    void validate() const;

    int map_object(int fine) const;    // throws DataError naming an unmapped label
    int map_predicate(int fine) const;
    Triplet map_triplet(const Triplet& fine) const;
};

struct CategoryTensor {
    std::vector<int> dims;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

struct ClusterModel {
    int n_clusters = 0;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
};

struct ClusterAssignment {
    std::map<std::string, int> labels; // sample_id -> cluster index
    int n_clusters = 0;
};

CategoryTensor build_category_tensor(const AnnotationRecord& record, const CategoryMap& map);
CategoryTensor build_attribute_tensor(const AnnotationRecord& record);
CategoryTensor l1_normalized(const CategoryTensor& tensor);

struct KMeansOptions {
    int n_clusters = 5;
    std::uint64_t seed = 0;
    int max_iters = 300;
    double tol = 1e-6;
    bool use_parallel = true;            // OpenMP kernels; output bit-identical to serial
    std::vector<double>* inertia_trace = nullptr; // per-iteration inertia, for tests
};

// Lloyd iterations with k-means++ seeding over flattened tensors.
// `ids` and `tensors` are parallel arrays.
std::pair<ClusterModel, ClusterAssignment>
kmeans_fit(const std::vector<std::string>& ids, const std::vector<CategoryTensor>& tensors,
           const KMeansOptions& opts);

// Nearest centroid, lowest index on ties.
int kmeans_assign(const ClusterModel& model, const CategoryTensor& tensor);

// Downsamples every cluster to the minimum cluster size, uniformly without replacement.
ClusterAssignment balance_clusters(const ClusterAssignment& assignment, std::uint64_t seed);

namespace kernels {

// Nearest-centroid labels and squared distances for n points of dimension d.
// `points` is row-major n*d, `centroids` row-major k*d. Serial reference.
void assign_nearest_serial(const std::vector<double>& points, int n, int d,
                           const std::vector<double>& centroids, int k,
                           std::vector<int>& labels, std::vector<double>& sqdist);

// OpenMP variant. Per-point work is independent, so results are bit-identical
// to the serial kernel.
void assign_nearest_parallel(const std::vector<double>& points, int n, int d,
                             const std::vector<double>& centroids, int k,
                             std::vector<int>& labels, std::vector<double>& sqdist);

// min_sqdist[i] = min(min_sqdist[i], ||points[i] - centroid||^2), used by k-means++.
void update_min_sqdist_serial(const std::vector<double>& points, int n, int d,
                              const std::vector<double>& centroid, std::vector<double>& min_sqdist);
void update_min_sqdist_parallel(const std::vector<double>& points, int n, int d,
                                const std::vector<double>& centroid, std::vector<double>& min_sqdist);

} // namespace kernels

} // namespace fedsem
