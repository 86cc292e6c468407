#pragma once

#include <functional>
#include <vector>

#include "rlsac/knn.hpp"
#include "rlsac/tensor.hpp"

namespace rlsac {

using VarId = int;

/// Dynamic computation tape for reverse-mode differentiation. Operations
/// append nodes in execution order, which is by construction a topological
/// order, so backward() is a single reverse sweep.
///
/// A tape is single-threaded; independent tapes may run concurrently as long
/// as any shared inputs are treated as read-only.
class Tape {
public:
    /// When record_gradients is false, forward values are still computed but
    /// no backward closures are stored (inference mode).
    explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

    VarId leaf(Tensor value, bool requires_grad = true);

    const Tensor& value(VarId id) const { return nodes_[id].value; }
    const Tensor& grad(VarId id) const { return nodes_[id].grad; }

    /// Reverse-mode accumulation from a scalar loss. Calling backward twice
    /// without reset_gradients() is an error (accumulators would double up).
    void backward(VarId loss);
    void reset_gradients();

    bool recording() const { return record_; }
    std::size_t num_nodes() const { return nodes_.size(); }

    // --- Operations ---------------------------------------------------
    VarId matmul(VarId a, VarId b);
    VarId add(VarId a, VarId b);
    VarId sub(VarId a, VarId b);
    VarId mul(VarId a, VarId b);
    VarId scale(VarId a, double s);
    VarId add_scalar(VarId a, double s);
    VarId relu(VarId a);
    VarId exp(VarId a);
    /// Bias broadcast: a is R x C, bias is a length-C vector added to every row.
    VarId add_row_broadcast(VarId a, VarId bias);
    VarId concat_cols(VarId a, VarId b);
    /// Rows of a re-indexed by `index` (may repeat); backward scatter-adds.
    VarId gather_rows(VarId a, std::vector<int> index);
    VarId reshape(VarId a, std::vector<std::size_t> shape);
    /// edge_features is N x k x H; output N x H is the per-channel maximum
    /// over the k neighbor slots. Gradient flows to the argmax slot only,
    /// ties resolved to the lowest slot index.
    VarId neighbor_max_pool(VarId edge_features, const NeighborGraph& graph);
    /// Numerically stable log-softmax over a length-N vector (or N x 1).
    VarId log_softmax(VarId logits);
    VarId sum_all(VarId a);
    VarId mean_all(VarId a);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Tape&, const Tensor&)> backprop;  // grad of output -> accumulate into inputs
    };

    VarId push(Tensor value, bool requires_grad, std::function<void(Tape&, const Tensor&)> backprop);
    void accumulate(VarId id, const std::vector<double>& g);
    void accumulate_at(VarId id, std::size_t flat_index, double g);

    std::vector<Node> nodes_;
    bool record_ = true;
    bool backward_done_ = false;
};

}  // namespace rlsac
