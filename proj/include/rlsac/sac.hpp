#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rlsac/policy.hpp"

namespace rlsac {

struct TrainConfig {
    double gamma = 0.95;
    double polyak = 0.005;
    double learning_rate = 3e-4;
    int batch_size = 64;
    double alpha = 0.2;  // fixed entropy temperature
    int updates_per_step = 1;
    int warmup_transitions = 500;
    int epochs = 100;
    int scenes_per_epoch = 1000;
    std::size_t buffer_capacity = 100000;
};

/// One environment interaction, with the scene's shared k-NN graph.
struct Transition {
    State state;
    Action action;
    double reward = 0.0;
    State next_state;
    bool done = false;
    std::shared_ptr<const NeighborGraph> graph;
};

/// Fixed-capacity ring buffer; oldest transitions are evicted first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    std::size_t size() const { return storage_.size(); }
    const Transition& operator[](std::size_t i) const { return storage_[i]; }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

struct LossReport {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
};

/// target <- polyak * online + (1 - polyak) * target for both twin critics.
void soft_update(const GraphNet& online1, const GraphNet& online2, GraphNet& target1,
                 GraphNet& target2, double polyak);

/// Policy, twin critics and their targets, with the discrete soft
/// actor-critic update adapted to set-valued actions: the policy is a
/// per-point categorical, and Q of a minimal set is the mean of its members'
/// per-point values.
class SacAgent {
public:
    SacAgent(int in_channels, int data_channels, const PolicyConfig& policy_config,
             const TrainConfig& train_config, std::uint64_t seed);

    /// Accumulates critic and actor gradients for the batch (averaged over
    /// the batch) into the parameter stores and returns the losses. Throws
    /// DivergenceError on NaN.
    LossReport compute_losses(const std::vector<const Transition*>& batch);

    /// Adam step on the accumulated gradients plus a polyak target update.
    void apply_update();

    GraphNet& policy() { return policy_; }
    const GraphNet& policy() const { return policy_; }
    GraphNet& critic1() { return critic1_; }
    GraphNet& critic2() { return critic2_; }
    GraphNet& target1() { return target1_; }
    GraphNet& target2() { return target2_; }
    const TrainConfig& train_config() const { return config_; }

private:
    TrainConfig config_;
    GraphNet policy_;
    GraphNet critic1_;
    GraphNet critic2_;
    GraphNet target1_;
    GraphNet target2_;
    long update_count_ = 0;
};

struct EpochLog {
    int epoch = 0;
    double mean_reward = 0.0;  // mean over scenes of the episode's best inlier ratio
    double critic_loss = 0.0;  // mean over the epoch's updates
    double actor_loss = 0.0;
    std::size_t buffer_size = 0;
};

/// Deterministic scene source: epoch and scene index to a fresh SceneData.
using SceneStream = std::function<SceneData(int epoch, int scene_index)>;

/// Off-policy training: one probabilistic-sampling episode per scene, every
/// transition into the replay buffer, one gradient update per environment
/// step once the warmup is filled.
std::vector<EpochLog> train(SacAgent& agent, const EpisodeConfig& episode_config,
                            const SceneStream& scenes, Rng& rng,
                            const std::function<void(const EpochLog&)>& on_epoch = nullptr);

}  // namespace rlsac
