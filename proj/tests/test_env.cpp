#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rlsac/env.hpp"

using namespace rlsac;

namespace {

EpisodeConfig line_config(bool train_mode = true) {
    EpisodeConfig cfg;
    cfg.epsilon = 0.1;
    cfg.train_mode = train_mode;
    return cfg;
}

/// Uniform random unused action, mirroring what a policy-free driver does.
Action random_unused_action(int n, int m, const UsedSetRegistry& registry, Rng& rng) {
    for (int guard = 0; guard < 100000; ++guard) {
        Action a{rng.sample_without_replacement(n, m)};
        if (!registry.contains(a.indices)) return a;
    }
    throw ContractError("random_unused_action: no unused set found");
}

int action_channel_plus_ones(const State& s) {
    int n = 0;
    for (int i = 0; i < s.num_points(); ++i) {
        const double v = s.matrix.at(i, s.data_channels);
        if (v == 1.0) ++n;
        else if (v != -1.0) return -1;  // invariant violation
    }
    return n;
}

}  // namespace

TEST_CASE("reset builds a valid initial state") {
    const SceneData scene = gen_line_scene(0.3, 50, 3);
    Environment env(scene, line_config());
    UsedSetRegistry registry;
    BestTracker tracker;
    Rng rng(9);

    const StepOutcome out = env.reset(registry, tracker, rng);
    CHECK(action_channel_plus_ones(out.next_state) == 2);
    CHECK(out.next_state.num_channels() == 5);
    CHECK(registry.size() == 1);
    CHECK(out.reward == doctest::Approx(out.inlier_count / 50.0).epsilon(1e-15));
    CHECK(tracker.best_inlier_ratio == out.reward);

    int count = 0;
    for (int i = 0; i < 50; ++i)
        if (out.residuals[i] <= scene.inlier_threshold) ++count;
    CHECK(count == out.inlier_count);
}

TEST_CASE("reset with an exhausted registry throws") {
    const SceneData scene = gen_line_scene(0.0, 4, 5);
    Environment env(scene, line_config());
    UsedSetRegistry registry;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) registry.insert({i, j});
    BestTracker tracker;
    Rng rng(1);
    CHECK_THROWS_AS(env.reset(registry, tracker, rng), ExhaustionError);
}

TEST_CASE("step reward equals inlier fraction and perfect actions score high") {
    const SceneData scene = gen_line_scene(0.3, 100, 13);
    Environment env(scene, line_config());
    UsedSetRegistry registry;
    BestTracker tracker;
    Rng rng(2);
    const StepOutcome s0 = env.reset(registry, tracker, rng);

    // Pick two true inliers far apart: the resulting line catches most of the
    // true inlier mass.
    int first = -1, second = -1;
    for (int i = 0; i < 100; ++i) {
        if (!scene.true_inlier_mask[i]) continue;
        if (first < 0) first = i;
        second = i;
    }
    Action good{{first, second}};
    if (registry.contains(good.indices)) good.indices[1] = second - 1;
    const StepOutcome out = env.step(s0.next_state, good, registry, tracker);
    CHECK(out.reward == doctest::Approx(out.inlier_count / 100.0).epsilon(1e-15));
    CHECK(out.reward >= 0.3);
    CHECK(registry.size() == 2);

    CHECK_THROWS_AS(env.step(out.next_state, good, registry, tracker), ContractError);
}

TEST_CASE("degenerate steps score zero and keep the episode alive") {
    // Scene with two coincident points to force a degenerate solve.
    SceneData scene = gen_line_scene(0.2, 20, 8);
    scene.features.at(1, 0) = scene.features.at(0, 0);
    scene.features.at(1, 1) = scene.features.at(0, 1);

    Environment env(scene, line_config());
    UsedSetRegistry registry;
    BestTracker tracker;
    Rng rng(3);
    const StepOutcome s0 = env.reset(registry, tracker, rng);

    Action degenerate{{0, 1}};
    REQUIRE(!registry.contains(degenerate.indices));
    const StepOutcome out = env.step(s0.next_state, degenerate, registry, tracker);
    CHECK(out.degenerate);
    CHECK(out.reward == 0.0);
    CHECK(!out.done);
    // Residual channel carried over from the previous state.
    for (int i = 0; i < 20; ++i)
        CHECK(out.next_state.matrix.at(i, 3) == s0.next_state.matrix.at(i, 3));
}

TEST_CASE("encode_memory_channels spec examples") {
    const Action action{{0, 3}};
    const std::vector<double> residuals{0.05, 10.0, 0.1, 0.0, 0.2};
    const std::vector<int> history{0, 2, 1, 0, 0};
    const Tensor mem = encode_memory_channels(action, residuals, history, 0.1);

    const std::vector<double> col0{1, -1, -1, 1, -1};
    for (int i = 0; i < 5; ++i) CHECK(mem.at(i, 0) == col0[i]);

    CHECK(mem.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mem.at(1, 1) == 5.0);  // clipped
    CHECK(mem.at(2, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mem.at(3, 1) == 0.0);

    const Tensor mem2 = encode_memory_channels(Action{{1}}, residuals, history, 0.1);
    const std::vector<double> col2{0, 3, 1, 0, 0};
    for (int i = 0; i < 5; ++i) CHECK(mem2.at(i, 2) == col2[i]);
}

TEST_CASE("check_termination spec examples and priority") {
    EpisodeConfig cfg = line_config(true);

    EpisodeStats unchanged;
    unchanged.step_inlier_counts = {40, 40, 40};
    unchanged.max_ratio = 0.4;
    unchanged.steps_since_improvement = 2;
    unchanged.step_count = 3;
    CHECK(check_termination(unchanged, cfg) == DoneReason::InliersUnchanged);

    EpisodeStats stalled;
    stalled.step_inlier_counts = {50, 55, 58};
    stalled.max_ratio = 0.6;  // set before these steps
    stalled.steps_since_improvement = 3;
    stalled.step_count = 3;
    CHECK(check_termination(stalled, cfg) == DoneReason::NoImprovement);

    EpisodeStats maxed;
    maxed.step_inlier_counts = std::vector<int>(15, 1);
    std::iota(maxed.step_inlier_counts.begin(), maxed.step_inlier_counts.end(), 1);
    maxed.max_ratio = 0.15;
    maxed.steps_since_improvement = 0;
    maxed.step_count = 15;
    CHECK(check_termination(maxed, cfg) == DoneReason::MaxSteps);

    // Test mode: only max_steps fires.
    cfg.train_mode = false;
    CHECK(check_termination(unchanged, cfg) == DoneReason::Running);
    CHECK(check_termination(stalled, cfg) == DoneReason::Running);
    CHECK(check_termination(maxed, cfg) == DoneReason::MaxSteps);

    // Priority: all three conditions hold -> inliers_unchanged wins.
    cfg.train_mode = true;
    EpisodeStats all;
    all.step_inlier_counts = std::vector<int>(15, 40);
    all.max_ratio = 0.9;
    all.steps_since_improvement = 15;
    all.step_count = 15;
    CHECK(check_termination(all, cfg) == DoneReason::InliersUnchanged);

    EpisodeStats running;
    running.step_inlier_counts = {40, 41};
    running.max_ratio = 0.41;
    running.steps_since_improvement = 0;
    running.step_count = 2;
    CHECK(check_termination(running, cfg) == DoneReason::Running);
}

TEST_CASE("finalize_scene polishes noiseless lines to zero error") {
    // Noise-free line points: generator noise is in [-0.1, 0.1], so build the
    // scene by hand from exact collinear points plus far-away outliers.
    SceneData scene = gen_line_scene(0.0, 20, 4);
    const Line2D gt = fit_line_2pts({1, 1}, {8, 4});
    for (int i = 0; i < 20; ++i) {
        const double t = i * 0.4;
        scene.features.at(i, 0) = 1 + 7 * t / 8.0;
        scene.features.at(i, 1) = 1 + 3 * t / 8.0;
    }
    scene.gt_line = gt;

    Environment env(scene, line_config());
    UsedSetRegistry registry;
    BestTracker tracker;
    Rng rng(6);
    env.reset(registry, tracker, rng);
    const Hypothesis polished = finalize_scene(tracker, scene);
    // arccos amplifies a 1-ulp dot product to ~1e-6 degrees.
    CHECK(line_angular_error(polished.line, gt) < 1e-5);

    BestTracker empty;
    CHECK_THROWS_AS(finalize_scene(empty, scene), ContractError);
}

TEST_CASE("finalize_scene keeps the unrefined model when F inliers are scarce") {
    const SceneData scene = gen_epipolar_scene(30, 0.3, 1.0, 10);
    BestTracker tracker;
    Hypothesis h;
    h.task = Task::Fundamental;
    h.f = scene.gt_f;
    std::vector<bool> mask(30, false);
    for (int i = 0; i < 7; ++i) mask[i] = true;  // fewer than the 8 needed
    tracker.observe(h, 7.0 / 30.0, mask);
    const Hypothesis out = finalize_scene(tracker, scene);
    CHECK(out.f.m == h.f.m);
}

TEST_CASE("environment invariants over 200 steps") {
    const SceneData scene = gen_line_scene(0.4, 60, 42);
    Environment env(scene, line_config(false));  // test mode: long episodes
    UsedSetRegistry registry;
    BestTracker tracker;
    Rng rng(7);

    struct LogEntry {
        Hypothesis h;
        double reward;
        std::vector<bool> mask;
    };
    std::vector<LogEntry> log;

    State state;
    std::vector<double> prev_history(60, 0.0);
    double best_seen = -1.0;
    int steps_done = 0;
    while (steps_done < 200) {
        StepOutcome out = env.reset(registry, tracker, rng);
        log.push_back({out.hypothesis, out.reward, out.inlier_mask});
        state = out.next_state;
        prev_history.assign(60, 0.0);  // history is per-episode
        for (int s = 0; s < 15 && steps_done < 200; ++s, ++steps_done) {
            const Action a = random_unused_action(60, 2, registry, rng);
            out = env.step(state, a, registry, tracker);
            if (!out.degenerate) log.push_back({out.hypothesis, out.reward, out.inlier_mask});

            // Action-channel cardinality.
            CHECK(action_channel_plus_ones(out.next_state) == 2);
            // Residual channel bounded.
            for (int i = 0; i < 60; ++i) {
                const double r = out.next_state.matrix.at(i, 3);
                CHECK(r >= 0.0);
                CHECK(r <= kResidualClip);
            }
            // History monotone within the episode.
            for (int i = 0; i < 60; ++i) {
                const double h = out.next_state.matrix.at(i, 4);
                CHECK(h >= prev_history[i]);
                prev_history[i] = h;
            }
            // Best ratio monotone.
            CHECK(tracker.best_inlier_ratio >= best_seen);
            best_seen = tracker.best_inlier_ratio;
            // Reward is an exact inlier fraction.
            CHECK(out.reward * 60.0 == doctest::Approx(std::round(out.reward * 60.0)).epsilon(1e-12));

            state = out.next_state;
            if (out.done) break;
        }
    }

    // Registry recorded one entry per attempted set: no duplicates by
    // construction of std::set, and count matches attempts.
    CHECK(registry.size() == static_cast<std::size_t>(env.hypotheses_used()));

    // Eq. 4 replay: the tracker holds the argmax hypothesis of the log.
    double replay_best = -1.0;
    for (const auto& entry : log) replay_best = std::max(replay_best, entry.reward);
    CHECK(tracker.best_inlier_ratio == replay_best);
    const auto residuals = hypothesis_residuals(scene, tracker.best_hypothesis);
    int count = 0;
    for (double r : residuals)
        if (r <= scene.inlier_threshold) ++count;
    CHECK(count == static_cast<int>(std::lround(replay_best * 60.0)));
}

TEST_CASE("training-mode termination fires within budget") {
    const SceneData scene = gen_line_scene(0.5, 40, 17);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Environment env(scene, line_config(true));
        UsedSetRegistry registry;
        BestTracker tracker;
        Rng rng(seed);
        StepOutcome out = env.reset(registry, tracker, rng);
        State state = out.next_state;
        int steps = 0;
        while (!out.done && steps < 15) {
            out = env.step(state, random_unused_action(40, 2, registry, rng), registry, tracker);
            state = out.next_state;
            ++steps;
        }
        CHECK(out.done);
        CHECK(out.done_reason != DoneReason::Running);
        CHECK(steps <= 15);
    }
}
