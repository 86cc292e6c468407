#pragma once

#include <set>
#include <vector>

#include "rlsac/rng.hpp"
#include "rlsac/scene.hpp"

namespace rlsac {

/// Task-dispatched model hypothesis.
struct Hypothesis {
    Task task = Task::Line2D;
    Line2D line;
    FundamentalMatrix f;
};

/// Sorted minimal-set indices; the agent's action.
struct Action {
    std::vector<int> indices;
};

/// N x C state matrix: the scene's c data channels followed by the three
/// memory channels (action membership, clipped normalized residual,
/// per-point usage count).
struct State {
    Tensor matrix;
    int data_channels = 0;

    int num_points() const { return static_cast<int>(matrix.shape[0]); }
    int num_channels() const { return static_cast<int>(matrix.shape[1]); }
};

enum class DoneReason { Running, InliersUnchanged, NoImprovement, MaxSteps };

const char* done_reason_name(DoneReason reason);

struct StepOutcome {
    State next_state;
    double reward = 0.0;
    Hypothesis hypothesis;
    std::vector<double> residuals;
    std::vector<bool> inlier_mask;
    int inlier_count = 0;
    bool done = false;
    DoneReason done_reason = DoneReason::Running;
    bool degenerate = false;
};

struct EpisodeConfig {
    int kappa = 2;             // steps with unchanged inlier count
    int sigma_no_improve = 3;  // steps without exceeding the episode max ratio
    int psi_max_steps = 15;
    double epsilon = 0.1;
    bool train_mode = true;
};

/// Minimal sets already solved for the current scene. Scene-scoped: shared
/// across the episodes of one scene run, cleared between scenes.
class UsedSetRegistry {
public:
    bool contains(const std::vector<int>& set) const { return used_.count(set) > 0; }
    void insert(const std::vector<int>& set) { used_.insert(set); }
    std::size_t size() const { return used_.size(); }
    void clear() { used_.clear(); }

private:
    std::set<std::vector<int>> used_;
};

/// Highest-inlier-ratio hypothesis seen across all episodes of a scene.
struct BestTracker {
    bool has_hypothesis = false;
    Hypothesis best_hypothesis;
    double best_inlier_ratio = -1.0;
    std::vector<bool> best_inlier_mask;

    void observe(const Hypothesis& h, double ratio, const std::vector<bool>& mask) {
        if (ratio > best_inlier_ratio) {
            best_hypothesis = h;
            best_inlier_ratio = ratio;
            best_inlier_mask = mask;
            has_hypothesis = true;
        }
    }
};

/// Residual-channel values are min(residual / epsilon, kResidualClip), which
/// puts the inlier boundary at 1 for every task and bounds network inputs.
constexpr double kResidualClip = 5.0;

/// Builds the three memory channels: column 0 is +-1 action membership,
/// column 1 the clipped normalized residual, column 2 the usage counts with
/// the action's members incremented.
Tensor encode_memory_channels(const Action& action, const std::vector<double>& residuals,
                              const std::vector<int>& history, double epsilon);

/// Per-episode termination bookkeeping.
struct EpisodeStats {
    std::vector<int> step_inlier_counts;  // successful steps only, reset excluded
    double max_ratio = -1.0;              // includes the reset hypothesis
    int steps_since_improvement = 0;
    int step_count = 0;
};

DoneReason check_termination(const EpisodeStats& stats, const EpisodeConfig& config);

/// Solves the task's minimal-set model. Throws DegenerateSampleError for
/// unusable samples.
Hypothesis solve_minimal(const SceneData& scene, const std::vector<int>& indices);

/// Model fit to an arbitrary index set (>= minimal size); used for refits.
Hypothesis solve_subset(const SceneData& scene, const std::vector<int>& indices);

std::vector<double> hypothesis_residuals(const SceneData& scene, const Hypothesis& h);

/// Unconditional inlier refit of the best hypothesis (line: total least
/// squares; F: 8-point on the consensus). Falls back to the unrefined best
/// when the consensus is smaller than a minimal set or degenerate.
Hypothesis finalize_scene(const BestTracker& tracker, const SceneData& scene);

/// The sampling-consensus environment for one scene. reset() starts a new
/// episode from a random unused minimal set; step() scores an agent action.
class Environment {
public:
    Environment(const SceneData& scene, EpisodeConfig config);

    StepOutcome reset(UsedSetRegistry& registry, BestTracker& tracker, Rng& rng);
    StepOutcome step(const State& state, const Action& action, UsedSetRegistry& registry,
                     BestTracker& tracker);

    const EpisodeStats& stats() const { return stats_; }
    const SceneData& scene() const { return *scene_; }
    const EpisodeConfig& config() const { return config_; }
    /// Hypotheses attempted (solved or degenerate) since construction.
    int hypotheses_used() const { return hypotheses_used_; }

private:
    State build_state(const Action& action, const std::vector<double>& residuals);

    const SceneData* scene_;
    EpisodeConfig config_;
    EpisodeStats stats_;
    std::vector<int> history_;
    int hypotheses_used_ = 0;
};

}  // namespace rlsac
