#include "rlsac/sac.hpp"

#include <algorithm>
#include <cmath>

namespace rlsac {

void soft_update(const GraphNet& online1, const GraphNet& online2, GraphNet& target1,
                 GraphNet& target2, double polyak) {
    target1.params().polyak_from(online1.params(), polyak);
    target2.params().polyak_from(online2.params(), polyak);
}

SacAgent::SacAgent(int in_channels, int data_channels, const PolicyConfig& policy_config,
                   const TrainConfig& train_config, std::uint64_t seed)
    : config_(train_config),
      policy_([&] {
          Rng r(splitmix64(seed ^ 0x11));
          return GraphNet(in_channels, data_channels, policy_config, r);
      }()),
      critic1_([&] {
          Rng r(splitmix64(seed ^ 0x22));
          return GraphNet(in_channels, data_channels, policy_config, r);
      }()),
      critic2_([&] {
          Rng r(splitmix64(seed ^ 0x33));
          return GraphNet(in_channels, data_channels, policy_config, r);
      }()),
      target1_(critic1_),
      target2_(critic2_) {}

LossReport SacAgent::compute_losses(const std::vector<const Transition*>& batch) {
    if (batch.empty()) throw ContractError("compute_losses: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double alpha = config_.alpha;

    policy_.params().zero_grad();
    critic1_.params().zero_grad();
    critic2_.params().zero_grad();

    LossReport report;
    for (const Transition* t : batch) {
        const NeighborGraph& graph = *t->graph;
        const int n = t->state.num_points();
        const int m = static_cast<int>(t->action.indices.size());

        // Target value of the next state, no gradients anywhere.
        double y = t->reward;
        if (!t->done) {
            Tape inf(false);
            const VarId logp_id = inf.log_softmax(policy_.forward(inf, t->next_state.matrix, graph));
            const auto& logp = inf.value(logp_id).data;
            const auto q1t = target1_.forward_values(t->next_state.matrix, graph);
            const auto q2t = target2_.forward_values(t->next_state.matrix, graph);
            double v = 0.0;
            for (int i = 0; i < n; ++i)
                v += std::exp(logp[i]) * (std::min(q1t[i], q2t[i]) - alpha * logp[i]);
            y += config_.gamma * v;
        }

        // Critic loss: both set-Q estimates against the shared target.
        std::vector<double> q1_values, q2_values;
        {
            Tape tape;
            std::vector<VarId> ids1, ids2;
            const VarId q1 = critic1_.forward(tape, t->state.matrix, graph, &ids1);
            const VarId q2 = critic2_.forward(tape, t->state.matrix, graph, &ids2);
            q1_values = tape.value(q1).data;
            q2_values = tape.value(q2).data;

            auto set_q = [&](VarId q) {
                const VarId member = tape.gather_rows(tape.reshape(q, {static_cast<std::size_t>(n), 1}),
                                                      t->action.indices);
                return tape.scale(tape.sum_all(member), 1.0 / static_cast<double>(m));
            };
            const VarId err1 = tape.add_scalar(set_q(q1), -y);
            const VarId err2 = tape.add_scalar(set_q(q2), -y);
            const VarId loss =
                tape.scale(tape.add(tape.mul(err1, err1), tape.mul(err2, err2)), 0.5);
            report.critic_loss += tape.value(loss).data[0] * inv_b;
            tape.backward(loss);
            critic1_.harvest_gradients(tape, ids1, inv_b);
            critic2_.harvest_gradients(tape, ids2, inv_b);
        }

        // Actor loss: expected alpha*log p - min q under the current policy;
        // the critic values enter as constants.
        {
            std::vector<double> min_q(n);
            for (int i = 0; i < n; ++i) min_q[i] = std::min(q1_values[i], q2_values[i]);

            Tape tape;
            std::vector<VarId> ids;
            const VarId logits = policy_.forward(tape, t->state.matrix, graph, &ids);
            const VarId logp = tape.log_softmax(logits);
            const VarId p = tape.exp(logp);
            const VarId inner =
                tape.sub(tape.scale(logp, alpha), tape.leaf(Tensor::vec(min_q), false));
            const VarId loss = tape.sum_all(tape.mul(p, inner));
            report.actor_loss += tape.value(loss).data[0] * inv_b;
            tape.backward(loss);
            policy_.harvest_gradients(tape, ids, inv_b);
        }
    }

    if (std::isnan(report.critic_loss) || std::isnan(report.actor_loss))
        throw DivergenceError("compute_losses: NaN loss");
    return report;
}

void SacAgent::apply_update() {
    ++update_count_;
    policy_.params().adam_step(config_.learning_rate, update_count_);
    critic1_.params().adam_step(config_.learning_rate, update_count_);
    critic2_.params().adam_step(config_.learning_rate, update_count_);
    soft_update(critic1_, critic2_, target1_, target2_, config_.polyak);
}

std::vector<EpochLog> train(SacAgent& agent, const EpisodeConfig& episode_config,
                            const SceneStream& scenes, Rng& rng,
                            const std::function<void(const EpochLog&)>& on_epoch) {
    const TrainConfig& config = agent.train_config();
    ReplayBuffer buffer(config.buffer_capacity);
    std::vector<EpochLog> logs;
    logs.reserve(config.epochs);

    EpisodeConfig episode = episode_config;
    episode.train_mode = true;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        EpochLog log;
        log.epoch = epoch;
        long updates = 0;

        for (int scene_index = 0; scene_index < config.scenes_per_epoch; ++scene_index) {
            const SceneData scene = scenes(epoch, scene_index);
            const auto graph = std::make_shared<const NeighborGraph>(
                knn_graph(scene.features, agent.policy().config().k_neighbors));

            Environment env(scene, episode);
            UsedSetRegistry registry;
            BestTracker tracker;

            StepOutcome outcome = env.reset(registry, tracker, rng);
            State state = outcome.next_state;
            bool done = false;
            while (!done) {
                const PolicyOutput policy_out = policy_forward(agent.policy(), state, *graph);
                const Action action = select_probabilistic(
                    policy_out.probs, minimal_set_size(scene.task), registry, rng);
                outcome = env.step(state, action, registry, tracker);

                Transition t;
                t.state = state;
                t.action = action;
                t.reward = outcome.reward;
                t.next_state = outcome.next_state;
                t.done = outcome.done;
                t.graph = graph;
                buffer.push(std::move(t));

                state = outcome.next_state;
                done = outcome.done;

                if (buffer.size() >= static_cast<std::size_t>(config.warmup_transitions)) {
                    for (int u = 0; u < config.updates_per_step; ++u) {
                        std::vector<const Transition*> batch;
                        batch.reserve(config.batch_size);
                        for (int b = 0; b < config.batch_size; ++b)
                            batch.push_back(&buffer[rng.uniform_int(static_cast<int>(buffer.size()))]);
                        const LossReport losses = agent.compute_losses(batch);
                        agent.apply_update();
                        log.critic_loss += losses.critic_loss;
                        log.actor_loss += losses.actor_loss;
                        ++updates;
                    }
                }
            }
            log.mean_reward += tracker.best_inlier_ratio;
        }

        log.mean_reward /= static_cast<double>(config.scenes_per_epoch);
        if (updates > 0) {
            log.critic_loss /= static_cast<double>(updates);
            log.actor_loss /= static_cast<double>(updates);
        }
        log.buffer_size = buffer.size();
        logs.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return logs;
}

}  // namespace rlsac
