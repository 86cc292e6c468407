#pragma once

#include <vector>

#include "rlsac/tensor.hpp"

namespace rlsac {

/// k-nearest-neighbor graph over N points. Row i lists the indices of the k
/// nearest other rows by Euclidean distance, nearest first.
struct NeighborGraph {
    std::vector<std::vector<int>> neighbor_indices;
    int k = 0;

    int num_points() const { return static_cast<int>(neighbor_indices.size()); }
};

/// Builds the k-NN graph of an N x d point matrix. A point is never its own
/// neighbor; distance ties are broken by the lower index so the result is
/// deterministic.
NeighborGraph knn_graph(const Tensor& points, int k);

}  // namespace rlsac
