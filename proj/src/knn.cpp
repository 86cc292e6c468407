#include "rlsac/knn.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "rlsac/errors.hpp"

namespace rlsac {

NeighborGraph knn_graph(const Tensor& points, int k) {
    if (points.shape.size() != 2 || points.shape[1] < 1)
        throw DimensionError("knn_graph: points must be N x d with d >= 1");
    const int n = static_cast<int>(points.shape[0]);
    const std::size_t d = points.shape[1];
    if (k >= n) throw ConfigError("knn_graph: k must be smaller than the point count");
    if (k < 1) throw ConfigError("knn_graph: k must be positive");

    NeighborGraph graph;
    graph.k = k;
    graph.neighbor_indices.resize(n);

    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double delta = points.data[i * d + c] - points.data[j * d + c];
                sq += delta * delta;
            }
            dist[j] = {sq, j};
        }
        dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
        // (distance, index) ordering makes ties resolve to the lower index
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        auto& row = graph.neighbor_indices[i];
        row.resize(k);
        for (int s = 0; s < k; ++s) row[s] = dist[s].second;
    }
    return graph;
}

}  // namespace rlsac
