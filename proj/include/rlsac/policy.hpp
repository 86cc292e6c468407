#pragma once

#include <string>
#include <vector>

#include "rlsac/env.hpp"
#include "rlsac/params.hpp"
#include "rlsac/tape.hpp"

namespace rlsac {

struct PolicyConfig {
    int k_neighbors = 15;
    int edgeconv_layers = 2;
    int hidden_width = 64;
    int head_width = 64;
};

/// Number of minimal sets C(n, m), as a double (overflows are saturating and
/// only compared against small caps).
double binomial_count(int n, int m);

/// Edge-convolution network over the k-NN graph: per layer, the edge feature
/// is [center, neighbor - center] through a shared two-layer perceptron, max
/// pooled over the k neighbors; a two-layer per-point head emits one output
/// per point (a logit for the policy, a value for a critic).
class GraphNet {
public:
    GraphNet(int in_channels, int data_channels, const PolicyConfig& config, Rng& rng);

    /// Per-point outputs as a length-N variable. When `param_ids` is given the
    /// parameters are recorded as differentiable leaves whose gradients can be
    /// harvested after backward(); otherwise they enter as constants.
    VarId forward(Tape& tape, const Tensor& state_matrix, const NeighborGraph& graph,
                  std::vector<VarId>* param_ids = nullptr) const;

    /// Plain forward returning the per-point outputs as a vector.
    std::vector<double> forward_values(const Tensor& state_matrix, const NeighborGraph& graph) const;

    /// Adds tape gradients (scaled) into the parameter accumulators.
    void harvest_gradients(const Tape& tape, const std::vector<VarId>& param_ids, double scale);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const PolicyConfig& config() const { return config_; }
    int in_channels() const { return in_channels_; }

private:
    Tensor preprocess(const Tensor& state_matrix) const;

    PolicyConfig config_;
    int in_channels_;
    int data_channels_;
    ParamStore params_;
};

/// Softmax selection probabilities and log-probabilities over the points.
struct PolicyOutput {
    std::vector<double> probs;
    std::vector<double> log_probs;
};

PolicyOutput policy_forward(const GraphNet& policy, const State& state, const NeighborGraph& graph);

/// Top-m points by probability (ties to the lower index). If that set was
/// already used, probabilistic draws are repeated until an unused set turns
/// up. The returned action is not registered; the environment registers it.
Action select_max(const std::vector<double>& probs, int m, const UsedSetRegistry& registry, Rng& rng);

/// m distinct indices drawn sequentially without replacement, proportional to
/// the renormalized remaining probabilities. Whole sets are retried against
/// the registry up to 1000 times, then sampling falls back to uniform over
/// unused sets.
Action select_probabilistic(const std::vector<double>& probs, int m, const UsedSetRegistry& registry,
                            Rng& rng);

}  // namespace rlsac
