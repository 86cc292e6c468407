#include "rlsac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rlsac {

double binomial_count(int n, int m) {
    double total = 1.0;
    for (int i = 0; i < m; ++i)
        total *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    return total;
}

GraphNet::GraphNet(int in_channels, int data_channels, const PolicyConfig& config, Rng& rng)
    : config_(config), in_channels_(in_channels), data_channels_(data_channels) {
    int width_in = in_channels;
    for (int layer = 0; layer < config.edgeconv_layers; ++layer) {
        const std::string p = "ec" + std::to_string(layer) + "_";
        const int edge_in = 2 * width_in;
        params_.add_linear(p + "w1", edge_in, config.hidden_width, rng);
        params_.add_bias(p + "b1", edge_in, config.hidden_width, rng);
        params_.add_linear(p + "w2", config.hidden_width, config.hidden_width, rng);
        params_.add_bias(p + "b2", config.hidden_width, config.hidden_width, rng);
        width_in = config.hidden_width;
    }
    params_.add_linear("head_w1", width_in, config.head_width, rng);
    params_.add_bias("head_b1", width_in, config.head_width, rng);
    params_.add_linear("head_w2", config.head_width, 1, rng);
    params_.add_bias("head_b2", config.head_width, 1, rng);
}

Tensor GraphNet::preprocess(const Tensor& state_matrix) const {
    // Standardize the data channels per scene and damp the unbounded history
    // channel; the action and residual channels are already bounded.
    Tensor x = state_matrix;
    const std::size_t n = x.shape[0];
    const std::size_t total = x.shape[1];
    for (int j = 0; j < data_channels_; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x.at(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x.at(i, j) - mean;
            var += d * d;
        }
        const double stdev = std::sqrt(var / static_cast<double>(n)) + 1e-8;
        for (std::size_t i = 0; i < n; ++i) x.at(i, j) = (x.at(i, j) - mean) / stdev;
    }
    if (total == static_cast<std::size_t>(data_channels_) + 3) {
        for (std::size_t i = 0; i < n; ++i) x.at(i, total - 1) *= 0.1;  // history counts
    }
    return x;
}

VarId GraphNet::forward(Tape& tape, const Tensor& state_matrix, const NeighborGraph& graph,
                        std::vector<VarId>* param_ids) const {
    if (static_cast<int>(state_matrix.shape[1]) != in_channels_)
        throw DimensionError("GraphNet::forward: channel count mismatch");
    const std::size_t n = state_matrix.shape[0];
    if (static_cast<int>(n) != graph.num_points())
        throw DimensionError("GraphNet::forward: graph size mismatch");
    const std::size_t k = static_cast<std::size_t>(graph.k);

    auto param_leaf = [&](std::size_t index) {
        const VarId id = tape.leaf(params_[index].value, param_ids != nullptr);
        if (param_ids) param_ids->push_back(id);
        return id;
    };

    // Flattened neighbor and center index lists, row i*k+slot.
    std::vector<int> nb_index(n * k), center_index(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < k; ++s) {
            nb_index[i * k + s] = graph.neighbor_indices[i][s];
            center_index[i * k + s] = static_cast<int>(i);
        }

    VarId x = tape.leaf(preprocess(state_matrix), false);
    std::size_t pi = 0;
    for (int layer = 0; layer < config_.edgeconv_layers; ++layer) {
        const VarId w1 = param_leaf(pi++), b1 = param_leaf(pi++);
        const VarId w2 = param_leaf(pi++), b2 = param_leaf(pi++);
        const VarId xc = tape.gather_rows(x, center_index);
        const VarId xn = tape.gather_rows(x, nb_index);
        const VarId edge = tape.concat_cols(xc, tape.sub(xn, xc));
        VarId h = tape.relu(tape.add_row_broadcast(tape.matmul(edge, w1), b1));
        h = tape.relu(tape.add_row_broadcast(tape.matmul(h, w2), b2));
        const std::size_t width = tape.value(h).shape[1];
        x = tape.neighbor_max_pool(tape.reshape(h, {n, k, width}), graph);
    }
    const VarId hw1 = param_leaf(pi++), hb1 = param_leaf(pi++);
    const VarId hw2 = param_leaf(pi++), hb2 = param_leaf(pi++);
    VarId h = tape.relu(tape.add_row_broadcast(tape.matmul(x, hw1), hb1));
    h = tape.add_row_broadcast(tape.matmul(h, hw2), hb2);
    return tape.reshape(h, {n});
}

std::vector<double> GraphNet::forward_values(const Tensor& state_matrix,
                                             const NeighborGraph& graph) const {
    Tape tape(false);
    const VarId out = forward(tape, state_matrix, graph);
    return tape.value(out).data;
}

void GraphNet::harvest_gradients(const Tape& tape, const std::vector<VarId>& param_ids,
                                 double scale) {
    if (param_ids.size() != params_.size())
        throw DimensionError("harvest_gradients: id count mismatch");
    for (std::size_t i = 0; i < param_ids.size(); ++i) {
        const auto& g = tape.grad(param_ids[i]).data;
        auto& dst = params_[i].grad.data;
        for (std::size_t j = 0; j < g.size(); ++j) dst[j] += scale * g[j];
    }
}

PolicyOutput policy_forward(const GraphNet& policy, const State& state, const NeighborGraph& graph) {
    Tape tape(false);
    const VarId logits = policy.forward(tape, state.matrix, graph);
    const VarId logp = tape.log_softmax(logits);
    PolicyOutput out;
    out.log_probs = tape.value(logp).data;
    out.probs.resize(out.log_probs.size());
    for (std::size_t i = 0; i < out.probs.size(); ++i) out.probs[i] = std::exp(out.log_probs[i]);
    return out;
}

namespace {

/// One sequential draw of m distinct indices proportional to `probs`.
std::vector<int> draw_set(const std::vector<double>& probs, int m, Rng& rng) {
    const int n = static_cast<int>(probs.size());
    std::vector<double> remaining = probs;
    std::vector<int> picked;
    picked.reserve(m);
    for (int d = 0; d < m; ++d) {
        double total = std::accumulate(remaining.begin(), remaining.end(), 0.0);
        int chosen = -1;
        if (total <= 0.0) {
            // All remaining mass removed; fall back to the first unpicked index.
            for (int i = 0; i < n; ++i)
                if (std::find(picked.begin(), picked.end(), i) == picked.end()) {
                    chosen = i;
                    break;
                }
        } else {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += remaining[i];
                if (u < acc) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) {  // numeric tail
                for (int i = n - 1; i >= 0; --i)
                    if (remaining[i] > 0.0) {
                        chosen = i;
                        break;
                    }
            }
        }
        picked.push_back(chosen);
        remaining[chosen] = 0.0;
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

void check_not_exhausted(int n, int m, const UsedSetRegistry& registry) {
    const double total = binomial_count(n, m);
    if (total < 2e6 && registry.size() >= static_cast<std::size_t>(std::llround(total)))
        throw ExhaustionError("select: every minimal set has been used");
}

/// Uniform draw over unused sets, used after repeated probabilistic rejections.
std::vector<int> uniform_unused(int n, int m, const UsedSetRegistry& registry, Rng& rng) {
    while (true) {
        auto candidate = rng.sample_without_replacement(n, m);
        if (!registry.contains(candidate)) return candidate;
    }
}

}  // namespace

Action select_max(const std::vector<double>& probs, int m, const UsedSetRegistry& registry,
                  Rng& rng) {
    const int n = static_cast<int>(probs.size());
    check_not_exhausted(n, m, registry);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs[a] > probs[b]; });
    std::vector<int> top(order.begin(), order.begin() + m);
    std::sort(top.begin(), top.end());
    if (!registry.contains(top)) return Action{top};

    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto candidate = draw_set(probs, m, rng);
        if (!registry.contains(candidate)) return Action{candidate};
    }
    return Action{uniform_unused(n, m, registry, rng)};
}

Action select_probabilistic(const std::vector<double>& probs, int m, const UsedSetRegistry& registry,
                            Rng& rng) {
    const int n = static_cast<int>(probs.size());
    check_not_exhausted(n, m, registry);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto candidate = draw_set(probs, m, rng);
        if (!registry.contains(candidate)) return Action{candidate};
    }
    return Action{uniform_unused(n, m, registry, rng)};
}

}  // namespace rlsac
