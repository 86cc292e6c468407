#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rlsac/geometry.hpp"
#include "rlsac/tensor.hpp"

namespace rlsac {

enum class Task { Line2D, Fundamental };

const char* task_tag(Task task);
Task task_from_tag(const std::string& tag);

/// Minimal-set size for a task: 2 points for a line, 8 correspondences for F.
int minimal_set_size(Task task);

/// One estimation problem instance. `features` is the N x c matrix fed to the
/// network (line task: coordinates in [0,10]^2, c=2; F task: normalized
/// coordinates in [-1,1] plus a match-score channel, c=5). The F task keeps
/// the raw pixel correspondences for the geometry.
struct SceneData {
    Task task = Task::Line2D;
    Tensor features;                     // N x c
    std::vector<bool> true_inlier_mask;  // generation labels, per row
    double inlier_threshold = 0.1;       // epsilon

    // Line-task ground truth.
    Line2D gt_line;

    // F-task ground truth and raw geometry.
    RelativePose gt_pose;
    Mat3 intrinsics1{}, intrinsics2{};
    FundamentalMatrix gt_f;
    std::vector<Correspondence> pixels;  // N rows, raw pixel coordinates

    int num_points() const { return static_cast<int>(features.shape[0]); }
    int num_channels() const { return static_cast<int>(features.shape[1]); }
};

/// Random 2D line scene: round((1-rate)*N) inliers uniformly along the
/// in-square segment, perturbed perpendicular by uniform noise within the
/// inlier threshold; remaining points uniform over the 10x10 square.
/// Deterministic in the seed.
SceneData gen_line_scene(double outlier_rate, int n_points, std::uint64_t rng_seed);

/// Synthetic epipolar scene: random relative pose (rotation <= 45 deg,
/// unit baseline), shared intrinsics (focal 600, principal point (320,240)),
/// inliers projected with Gaussian pixel noise, outliers uniform in both
/// images. epsilon = 4 px.
SceneData gen_epipolar_scene(int n_points, double outlier_rate, double pixel_noise_sigma,
                             std::uint64_t rng_seed);

void save_scene(const std::string& path, const SceneData& scene);
SceneData load_scene(const std::string& path);

/// Hypothesis residual of one scene row, dispatching on the task.
double scene_residual_line(const SceneData& scene, const Line2D& line, int row);
double scene_residual_fundamental(const SceneData& scene, const FundamentalMatrix& f, int row);

}  // namespace rlsac
