#pragma once

#include <optional>
#include <vector>

#include "rlsac/sac.hpp"

namespace rlsac {

enum class SamplingMode { Max, Probabilistic };

struct EvalConfig {
    int episodes_per_scene = 10;  // nu
    int steps_per_episode = 15;   // psi
    SamplingMode sampling = SamplingMode::Max;
    std::uint64_t seed = 0;
    int threads = 1;
    bool timing = false;  // wall_ms stays 0 when off, keeping outputs byte-stable

    /// Hypothesis budget per scene; includes each episode's random initial set.
    int budget() const { return episodes_per_scene * (steps_per_episode + 1); }
};

struct RunResult {
    int scene_id = 0;
    double error_deg = 0.0;  // line angle, or max(rotation, translation) for poses
    double rot_error_deg = 0.0;
    double trans_error_deg = 0.0;
    double best_inlier_ratio = 0.0;
    int hypotheses_used = 0;
    double wall_ms = 0.0;
    bool failed = false;
};

struct EvalSummary {
    double maa_value = 0.0;
    double median_deg = 0.0;
    double maa_rotation = 0.0;
    double maa_translation = 0.0;
    double median_rotation = 0.0;
    double median_translation = 0.0;
    int n_scenes = 0;
};

/// Mean average accuracy: average over K=20 equally spaced thresholds
/// t_j = j * tolerance / K of the fraction of errors strictly below t_j.
double maa(const std::vector<double>& errors, double tolerance);

/// Lower median (deterministic for even counts).
double median(std::vector<double> values);

struct RansacOutcome {
    Hypothesis hypothesis;
    bool failed = false;
    double best_inlier_ratio = 0.0;
    int hypotheses_used = 0;
};

/// Classic RANSAC: uniform minimal-set sampling without dedup, best-ratio
/// tracking, final inlier refit. Degenerate draws consume their iteration.
RansacOutcome ransac_run(const SceneData& scene, int budget, Rng& rng);

struct OracleResult {
    Hypothesis hypothesis;
    double inlier_ratio = 0.0;
};

/// Enumerates every minimal set (refuses above 1e6) and returns the
/// maximum-inlier-ratio hypothesis, ties by enumeration order.
OracleResult exhaustive_oracle(const SceneData& scene);

/// RLSAC rollout on one scene: nu episodes of psi steps with the given
/// sampling mode, shared registry and tracker, final polish.
RunResult rlsac_run_scene(const GraphNet& policy, const SceneData& scene, const EvalConfig& config,
                          int scene_id);

/// Evaluation over a scene set; scenes run independently (optionally across
/// threads) with per-scene seeds, so results are deterministic.
std::vector<RunResult> evaluate_rlsac(const GraphNet& policy, const std::vector<SceneData>& scenes,
                                      const EvalConfig& config);
std::vector<RunResult> evaluate_ransac(const std::vector<SceneData>& scenes,
                                       const EvalConfig& config);

EvalSummary summarize(const std::vector<RunResult>& results, double tolerance_deg);

}  // namespace rlsac
