#pragma once

#include <array>
#include <utility>
#include <vector>

#include "rlsac/errors.hpp"

namespace rlsac {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/// One image-pair correspondence in pixel coordinates.
struct Correspondence {
    double x1, y1, x2, y2;
};

/// Line a*x + b*y + c = 0 with unit normal. Canonical sign: b > 0, or
/// (b == 0 and a > 0).
struct Line2D {
    double a = 0.0, b = 1.0, c = 0.0;
};

/// Rank-2 fundamental matrix, Frobenius norm 1, sign fixed so the
/// largest-magnitude entry is positive.
struct FundamentalMatrix {
    Mat3 m{};
};

/// Rotation (orthonormal, det +1) and unit translation direction.
struct RelativePose {
    Mat3 rotation{};
    Vec3 translation_dir{};
};

// --- 2D line task --------------------------------------------------------

/// Line through two distinct points, canonicalized.
Line2D fit_line_2pts(const Vec2& p1, const Vec2& p2);

/// Perpendicular distance of a point to the line.
double line_point_residual(const Line2D& line, const Vec2& p);

/// Total-least-squares line: normal is the minor eigenvector of the scatter
/// matrix of the centered points; passes through the centroid.
Line2D refine_line_tls(const std::vector<Vec2>& points);

/// Angle between line normals in degrees, in [0, 90].
double line_angular_error(const Line2D& est, const Line2D& gt);

// --- Fundamental-matrix task ---------------------------------------------

/// Hartley-normalized 8-point solver. Accepts 8 or more correspondences
/// (the over-determined form is used for inlier refits).
FundamentalMatrix fit_fundamental_8pt(const std::vector<Correspondence>& correspondences);

/// First-order geometric (Sampson) distance in pixels. Near-zero denominators
/// return a large sentinel so the point scores as an outlier.
double sampson_residual(const FundamentalMatrix& f, const Vec2& x1, const Vec2& x2);

/// Epipolar constraint value x2^T F x1 with homogeneous (x, y, 1).
double epipolar_constraint(const FundamentalMatrix& f, const Vec2& x1, const Vec2& x2);

/// Essential decomposition with cheirality voting over the inliers
/// (midpoint triangulation, positive depth in both cameras).
RelativePose pose_from_fundamental(const FundamentalMatrix& f, const Mat3& k1, const Mat3& k2,
                                   const std::vector<Correspondence>& inliers);

/// (rotation error, translation error) in degrees. Translation is
/// sign-invariant because F fixes t only up to sign.
std::pair<double, double> pose_errors(const RelativePose& est, const RelativePose& gt);

// --- Small matrix helpers shared with the scene generator ----------------

Mat3 mat3_identity();
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Mat3 mat3_transpose(const Mat3& a);
Vec3 mat3_apply(const Mat3& a, const Vec3& v);
Mat3 mat3_inverse(const Mat3& a);
Mat3 axis_angle_rotation(const Vec3& axis, double angle_rad);
/// F = K2^-T [t]x R K1^-1, canonicalized; the synthesis route used by the
/// epipolar scene generator and the solver oracles.
FundamentalMatrix fundamental_from_pose(const Mat3& k1, const Mat3& k2, const Mat3& rotation,
                                        const Vec3& translation);
FundamentalMatrix canonicalize_fundamental(const Mat3& m);

}  // namespace rlsac
