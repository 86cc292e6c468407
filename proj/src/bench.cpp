#include "rlsac/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace rlsac {

double maa(const std::vector<double>& errors, double tolerance) {
    if (errors.empty()) throw ContractError("maa: empty error list");
    if (tolerance <= 0.0) throw ContractError("maa: tolerance must be positive");
    constexpr int kThresholds = 20;
    double acc = 0.0;
    for (int j = 1; j <= kThresholds; ++j) {
        const double t = static_cast<double>(j) * tolerance / kThresholds;
        int below = 0;
        for (double e : errors)
            if (e < t) ++below;
        acc += static_cast<double>(below) / static_cast<double>(errors.size());
    }
    return acc / kThresholds;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ContractError("median: empty list");
    const std::size_t idx = (values.size() - 1) / 2;  // lower median
    std::nth_element(values.begin(), values.begin() + idx, values.end());
    return values[idx];
}

RansacOutcome ransac_run(const SceneData& scene, int budget, Rng& rng) {
    if (budget < 1) throw ContractError("ransac_run: budget must be >= 1");
    const int n = scene.num_points();
    const int m = minimal_set_size(scene.task);

    BestTracker tracker;
    RansacOutcome outcome;
    for (int iter = 0; iter < budget; ++iter) {
        const auto indices = rng.sample_without_replacement(n, m);
        ++outcome.hypotheses_used;
        Hypothesis h;
        try {
            h = solve_minimal(scene, indices);
        } catch (const DegenerateSampleError&) {
            continue;
        }
        const auto residuals = hypothesis_residuals(scene, h);
        std::vector<bool> mask(n, false);
        int z = 0;
        for (int i = 0; i < n; ++i)
            if (residuals[i] <= scene.inlier_threshold) {
                mask[i] = true;
                ++z;
            }
        tracker.observe(h, static_cast<double>(z) / static_cast<double>(n), mask);
    }
    if (!tracker.has_hypothesis) {
        outcome.failed = true;
        return outcome;
    }
    outcome.hypothesis = finalize_scene(tracker, scene);
    outcome.best_inlier_ratio = tracker.best_inlier_ratio;
    return outcome;
}

OracleResult exhaustive_oracle(const SceneData& scene) {
    const int n = scene.num_points();
    const int m = minimal_set_size(scene.task);
    if (binomial_count(n, m) > 1e6)
        throw ContractError("exhaustive_oracle: instance too large to enumerate");

    OracleResult best;
    best.inlier_ratio = -1.0;
    std::vector<int> indices(m);
    for (int i = 0; i < m; ++i) indices[i] = i;
    while (true) {
        Hypothesis h;
        bool ok = true;
        try {
            h = solve_minimal(scene, indices);
        } catch (const DegenerateSampleError&) {
            ok = false;
        }
        if (ok) {
            const auto residuals = hypothesis_residuals(scene, h);
            int z = 0;
            for (double r : residuals)
                if (r <= scene.inlier_threshold) ++z;
            const double ratio = static_cast<double>(z) / static_cast<double>(n);
            if (ratio > best.inlier_ratio) {
                best.inlier_ratio = ratio;
                best.hypothesis = h;
            }
        }
        // Next combination in lexicographic order.
        int pos = m - 1;
        while (pos >= 0 && indices[pos] == n - m + pos) --pos;
        if (pos < 0) break;
        ++indices[pos];
        for (int i = pos + 1; i < m; ++i) indices[i] = indices[i - 1] + 1;
    }
    if (best.inlier_ratio < 0.0) throw DegenerateSampleError("exhaustive_oracle: no solvable set");
    return best;
}

namespace {

/// Task error of a polished hypothesis; sets the failure marker when the
/// model or pose cannot be recovered.
void score_hypothesis(const SceneData& scene, const Hypothesis& polished, bool failed,
                      RunResult& result) {
    if (scene.task == Task::Line2D) {
        if (failed) {
            result.failed = true;
            result.error_deg = 90.0;
            return;
        }
        result.error_deg = line_angular_error(polished.line, scene.gt_line);
        return;
    }
    if (failed) {
        result.failed = true;
        result.error_deg = result.rot_error_deg = result.trans_error_deg = 180.0;
        return;
    }
    std::vector<Correspondence> inliers;
    const int n = scene.num_points();
    for (int i = 0; i < n; ++i)
        if (scene_residual_fundamental(scene, polished.f, i) <= scene.inlier_threshold)
            inliers.push_back(scene.pixels[i]);
    try {
        const RelativePose pose =
            pose_from_fundamental(polished.f, scene.intrinsics1, scene.intrinsics2, inliers);
        const auto [rot, trans] = pose_errors(pose, scene.gt_pose);
        result.rot_error_deg = rot;
        result.trans_error_deg = trans;
        result.error_deg = std::max(rot, trans);
    } catch (const std::runtime_error&) {  // no inliers or cheirality failure
        result.failed = true;
        result.error_deg = result.rot_error_deg = result.trans_error_deg = 180.0;
    }
}

template <typename Fn>
std::vector<RunResult> run_scenes(const std::vector<SceneData>& scenes, int threads, Fn&& per_scene) {
    std::vector<RunResult> results(scenes.size());
    const int t = std::max(1, threads);
    if (t == 1) {
        for (std::size_t i = 0; i < scenes.size(); ++i) results[i] = per_scene(static_cast<int>(i));
        return results;
    }
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < t; ++w) {
        workers.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= scenes.size()) return;
                results[i] = per_scene(static_cast<int>(i));
            }
        });
    }
    for (auto& worker : workers) worker.join();
    return results;
}

}  // namespace

RunResult rlsac_run_scene(const GraphNet& policy, const SceneData& scene, const EvalConfig& config,
                          int scene_id) {
    const auto start = std::chrono::steady_clock::now();
    const NeighborGraph graph = knn_graph(scene.features, policy.config().k_neighbors);
    const int m = minimal_set_size(scene.task);

    EpisodeConfig episode;
    episode.train_mode = false;
    episode.psi_max_steps = config.steps_per_episode;
    episode.epsilon = scene.inlier_threshold;

    Environment env(scene, episode);
    UsedSetRegistry registry;
    BestTracker tracker;
    Rng rng(splitmix64(config.seed ^ splitmix64(0x5ce4e5 + scene_id)));

    for (int ep = 0; ep < config.episodes_per_scene; ++ep) {
        StepOutcome outcome = env.reset(registry, tracker, rng);
        State state = outcome.next_state;
        bool done = false;
        while (!done) {
            const PolicyOutput out = policy_forward(policy, state, graph);
            const Action action = config.sampling == SamplingMode::Max
                                      ? select_max(out.probs, m, registry, rng)
                                      : select_probabilistic(out.probs, m, registry, rng);
            outcome = env.step(state, action, registry, tracker);
            state = outcome.next_state;
            done = outcome.done;
        }
    }

    RunResult result;
    result.scene_id = scene_id;
    result.best_inlier_ratio = tracker.best_inlier_ratio;
    result.hypotheses_used = env.hypotheses_used();
    const Hypothesis polished = finalize_scene(tracker, scene);
    score_hypothesis(scene, polished, false, result);
    if (config.timing) {
        result.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    }
    return result;
}

std::vector<RunResult> evaluate_rlsac(const GraphNet& policy, const std::vector<SceneData>& scenes,
                                      const EvalConfig& config) {
    return run_scenes(scenes, config.threads,
                      [&](int i) { return rlsac_run_scene(policy, scenes[i], config, i); });
}

std::vector<RunResult> evaluate_ransac(const std::vector<SceneData>& scenes,
                                       const EvalConfig& config) {
    return run_scenes(scenes, config.threads, [&](int i) {
        const auto start = std::chrono::steady_clock::now();
        Rng rng(splitmix64(config.seed ^ splitmix64(0xba5e11 + i)));
        const RansacOutcome outcome = ransac_run(scenes[i], config.budget(), rng);
        RunResult result;
        result.scene_id = i;
        result.best_inlier_ratio = outcome.best_inlier_ratio;
        result.hypotheses_used = outcome.hypotheses_used;
        score_hypothesis(scenes[i], outcome.hypothesis, outcome.failed, result);
        if (config.timing) {
            result.wall_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        }
        return result;
    });
}

EvalSummary summarize(const std::vector<RunResult>& results, double tolerance_deg) {
    EvalSummary summary;
    summary.n_scenes = static_cast<int>(results.size());
    std::vector<double> errors, rot, trans;
    errors.reserve(results.size());
    for (const auto& r : results) {
        errors.push_back(r.error_deg);
        rot.push_back(r.rot_error_deg);
        trans.push_back(r.trans_error_deg);
    }
    summary.maa_value = maa(errors, tolerance_deg);
    summary.median_deg = median(errors);
    summary.maa_rotation = maa(rot, tolerance_deg);
    summary.maa_translation = maa(trans, tolerance_deg);
    summary.median_rotation = median(rot);
    summary.median_translation = median(trans);
    return summary;
}

}  // namespace rlsac
