#include "rlsac/env.hpp"

#include <algorithm>
#include <cmath>

namespace rlsac {

const char* done_reason_name(DoneReason reason) {
    switch (reason) {
        case DoneReason::Running: return "running";
        case DoneReason::InliersUnchanged: return "inliers_unchanged";
        case DoneReason::NoImprovement: return "no_improvement";
        case DoneReason::MaxSteps: return "max_steps";
    }
    return "unknown";
}

Tensor encode_memory_channels(const Action& action, const std::vector<double>& residuals,
                              const std::vector<int>& history, double epsilon) {
    const std::size_t n = residuals.size();
    if (history.size() != n) throw DimensionError("encode_memory_channels: history size mismatch");
    Tensor mem = Tensor::zeros({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        mem.at(i, 0) = -1.0;
        mem.at(i, 1) = std::min(residuals[i] / epsilon, kResidualClip);
        mem.at(i, 2) = static_cast<double>(history[i]);
    }
    for (int idx : action.indices) {
        mem.at(idx, 0) = 1.0;
        mem.at(idx, 2) += 1.0;
    }
    return mem;
}

DoneReason check_termination(const EpisodeStats& stats, const EpisodeConfig& config) {
    if (config.train_mode) {
        const auto& counts = stats.step_inlier_counts;
        if (static_cast<int>(counts.size()) >= config.kappa + 1) {
            bool unchanged = true;
            for (int i = 0; i < config.kappa; ++i) {
                if (counts[counts.size() - 1 - i] != counts[counts.size() - 2 - i]) {
                    unchanged = false;
                    break;
                }
            }
            if (unchanged) return DoneReason::InliersUnchanged;
        }
        if (stats.steps_since_improvement >= config.sigma_no_improve)
            return DoneReason::NoImprovement;
    }
    if (stats.step_count >= config.psi_max_steps) return DoneReason::MaxSteps;
    return DoneReason::Running;
}

Hypothesis solve_subset(const SceneData& scene, const std::vector<int>& indices) {
    Hypothesis h;
    h.task = scene.task;
    if (scene.task == Task::Line2D) {
        if (indices.size() == 2) {
            h.line = fit_line_2pts({scene.features.at(indices[0], 0), scene.features.at(indices[0], 1)},
                                   {scene.features.at(indices[1], 0), scene.features.at(indices[1], 1)});
        } else {
            std::vector<Vec2> pts;
            pts.reserve(indices.size());
            for (int i : indices) pts.push_back({scene.features.at(i, 0), scene.features.at(i, 1)});
            h.line = refine_line_tls(pts);
        }
    } else {
        std::vector<Correspondence> cs;
        cs.reserve(indices.size());
        for (int i : indices) cs.push_back(scene.pixels[i]);
        h.f = fit_fundamental_8pt(cs);
    }
    return h;
}

Hypothesis solve_minimal(const SceneData& scene, const std::vector<int>& indices) {
    if (static_cast<int>(indices.size()) != minimal_set_size(scene.task))
        throw ContractError("solve_minimal: wrong minimal-set size");
    return solve_subset(scene, indices);
}

std::vector<double> hypothesis_residuals(const SceneData& scene, const Hypothesis& h) {
    const int n = scene.num_points();
    std::vector<double> residuals(n);
    if (scene.task == Task::Line2D) {
        for (int i = 0; i < n; ++i) residuals[i] = scene_residual_line(scene, h.line, i);
    } else {
        for (int i = 0; i < n; ++i) residuals[i] = scene_residual_fundamental(scene, h.f, i);
    }
    return residuals;
}

namespace {

int count_inliers(const SceneData& scene, const Hypothesis& h) {
    const auto residuals = hypothesis_residuals(scene, h);
    int z = 0;
    for (double r : residuals)
        if (r <= scene.inlier_threshold) ++z;
    return z;
}

}  // namespace

Hypothesis finalize_scene(const BestTracker& tracker, const SceneData& scene) {
    if (!tracker.has_hypothesis) throw ContractError("finalize_scene: tracker holds no hypothesis");
    std::vector<int> inliers;
    for (int i = 0; i < scene.num_points(); ++i)
        if (tracker.best_inlier_mask[i]) inliers.push_back(i);

    const int needed = scene.task == Task::Line2D ? 2 : 8;
    if (static_cast<int>(inliers.size()) < needed) return tracker.best_hypothesis;

    Hypothesis polished;
    try {
        polished = solve_subset(scene, inliers);
    } catch (const DegenerateSampleError&) {
        return tracker.best_hypothesis;
    }
    // Unconditional refinement: the polished model is returned even when it
    // scores fewer inliers at epsilon than the raw best hypothesis. A
    // keep-the-better-count guard was tried and systematically hurt accuracy:
    // the raw winner is a minimal-set model whose count is luck-inflated, and
    // reverting to it keeps that noise.
    return polished;
}

Environment::Environment(const SceneData& scene, EpisodeConfig config)
    : scene_(&scene), config_(config) {
    config_.epsilon = scene.inlier_threshold;
    history_.assign(scene.num_points(), 0);
}

State Environment::build_state(const Action& action, const std::vector<double>& residuals) {
    const Tensor mem = encode_memory_channels(action, residuals, history_, config_.epsilon);
    for (int idx : action.indices) history_[idx] += 1;

    const int n = scene_->num_points();
    const int c = scene_->num_channels();
    State state;
    state.data_channels = c;
    state.matrix = Tensor::zeros({static_cast<std::size_t>(n), static_cast<std::size_t>(c) + 3});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) state.matrix.at(i, j) = scene_->features.at(i, j);
        for (int j = 0; j < 3; ++j) state.matrix.at(i, c + j) = mem.at(i, j);
    }
    return state;
}

StepOutcome Environment::reset(UsedSetRegistry& registry, BestTracker& tracker, Rng& rng) {
    const int n = scene_->num_points();
    const int m = minimal_set_size(scene_->task);

    stats_ = EpisodeStats{};
    history_.assign(n, 0);

    // Exhaustion is only decidable for small index spaces; C(n, m) above the
    // cap cannot be exhausted in any realistic run.
    double total_sets = 1.0;
    for (int i = 0; i < m; ++i) total_sets *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (total_sets < 2e6 && registry.size() >= static_cast<std::size_t>(std::llround(total_sets)))
        throw ExhaustionError("reset: every minimal set of this scene has been used");

    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<int> indices;
        do {
            indices = rng.sample_without_replacement(n, m);
        } while (registry.contains(indices));
        registry.insert(indices);
        ++hypotheses_used_;

        Hypothesis h;
        try {
            h = solve_minimal(*scene_, indices);
        } catch (const DegenerateSampleError&) {
            continue;
        }

        StepOutcome outcome;
        outcome.hypothesis = h;
        outcome.residuals = hypothesis_residuals(*scene_, h);
        outcome.inlier_mask.assign(n, false);
        for (int i = 0; i < n; ++i)
            outcome.inlier_mask[i] = outcome.residuals[i] <= config_.epsilon;
        outcome.inlier_count =
            static_cast<int>(std::count(outcome.inlier_mask.begin(), outcome.inlier_mask.end(), true));
        outcome.reward = static_cast<double>(outcome.inlier_count) / static_cast<double>(n);
        outcome.done = false;
        outcome.done_reason = DoneReason::Running;

        Action initial;
        initial.indices = indices;
        outcome.next_state = build_state(initial, outcome.residuals);

        stats_.max_ratio = outcome.reward;
        tracker.observe(h, outcome.reward, outcome.inlier_mask);
        return outcome;
    }
    throw DegenerateSampleError("reset: 100 consecutive degenerate initial samples");
}

StepOutcome Environment::step(const State& state, const Action& action, UsedSetRegistry& registry,
                              BestTracker& tracker) {
    if (registry.contains(action.indices))
        throw ContractError("step: action already in the used-set registry (sampler bug)");
    registry.insert(action.indices);
    ++hypotheses_used_;
    ++stats_.step_count;

    const int n = scene_->num_points();
    const int c = scene_->num_channels();

    StepOutcome outcome;
    bool solved = true;
    try {
        outcome.hypothesis = solve_minimal(*scene_, action.indices);
    } catch (const DegenerateSampleError&) {
        solved = false;
    }

    if (solved) {
        outcome.residuals = hypothesis_residuals(*scene_, outcome.hypothesis);
        outcome.inlier_mask.assign(n, false);
        for (int i = 0; i < n; ++i)
            outcome.inlier_mask[i] = outcome.residuals[i] <= config_.epsilon;
        outcome.inlier_count =
            static_cast<int>(std::count(outcome.inlier_mask.begin(), outcome.inlier_mask.end(), true));
        outcome.reward = static_cast<double>(outcome.inlier_count) / static_cast<double>(n);
        outcome.next_state = build_state(action, outcome.residuals);

        tracker.observe(outcome.hypothesis, outcome.reward, outcome.inlier_mask);
        stats_.step_inlier_counts.push_back(outcome.inlier_count);
        if (outcome.reward > stats_.max_ratio) {
            stats_.max_ratio = outcome.reward;
            stats_.steps_since_improvement = 0;
        } else {
            ++stats_.steps_since_improvement;
        }
    } else {
        // Degenerate sample: reward 0, residual channel carried over from the
        // previous state. It consumes a step and counts as non-improving, but
        // does not enter the unchanged-inlier-count sequence.
        outcome.degenerate = true;
        outcome.reward = 0.0;
        outcome.inlier_mask.assign(n, false);
        outcome.residuals.assign(n, 0.0);
        std::vector<double> carried(n);
        for (int i = 0; i < n; ++i)
            carried[i] = state.matrix.at(i, c + 1) * config_.epsilon;  // undo the encoding
        outcome.residuals = carried;
        outcome.next_state = build_state(action, carried);
        ++stats_.steps_since_improvement;
    }

    outcome.done_reason = check_termination(stats_, config_);
    outcome.done = outcome.done_reason != DoneReason::Running;
    return outcome;
}

}  // namespace rlsac
