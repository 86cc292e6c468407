#include "rlsac/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace rlsac {

namespace {

Eigen::Matrix3d to_eigen(const Mat3& m) {
    Eigen::Matrix3d e;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) e(r, c) = m[r][c];
    return e;
}

Mat3 from_eigen(const Eigen::Matrix3d& e) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m[r][c] = e(r, c);
    return m;
}

Line2D canonicalize_line(double a, double b, double c) {
    const double norm = std::sqrt(a * a + b * b);
    a /= norm;
    b /= norm;
    c /= norm;
    if (b < 0.0 || (b == 0.0 && a < 0.0)) {
        a = -a;
        b = -b;
        c = -c;
    }
    return Line2D{a, b, c};
}

}  // namespace

Line2D fit_line_2pts(const Vec2& p1, const Vec2& p2) {
    const double dx = p2[0] - p1[0];
    const double dy = p2[1] - p1[1];
    if (std::sqrt(dx * dx + dy * dy) <= 1e-12)
        throw DegenerateSampleError("fit_line_2pts: coincident points");
    const double a = -dy;
    const double b = dx;
    const double c = -(a * p1[0] + b * p1[1]);
    return canonicalize_line(a, b, c);
}

double line_point_residual(const Line2D& line, const Vec2& p) {
    return std::abs(line.a * p[0] + line.b * p[1] + line.c);
}

Line2D refine_line_tls(const std::vector<Vec2>& points) {
    if (points.size() < 2) throw DegenerateSampleError("refine_line_tls: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p[0];
        my += p[1];
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : points) {
        const double dx = p[0] - mx;
        const double dy = p[1] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx + syy <= 1e-24) throw DegenerateSampleError("refine_line_tls: all points coincident");

    // Minor eigenvector of the 2x2 scatter matrix [sxx sxy; sxy syy].
    const double tr = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    const double lambda_min = tr / 2.0 - std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    double na, nb;
    // (S - lambda I) n = 0: n is orthogonal to the rows of (S - lambda I);
    // take the perpendicular of the better-conditioned row.
    const double r1x = sxx - lambda_min, r1y = sxy;
    const double r2x = sxy, r2y = syy - lambda_min;
    if (r1x * r1x + r1y * r1y >= r2x * r2x + r2y * r2y) {
        na = r1y;
        nb = -r1x;
    } else {
        na = r2y;
        nb = -r2x;
    }
    if (na * na + nb * nb <= 1e-30) {
        // Isotropic scatter: any direction is optimal; fix one deterministically.
        na = 0.0;
        nb = 1.0;
    }
    const double c = -(na * mx + nb * my);
    return canonicalize_line(na, nb, c);
}

double line_angular_error(const Line2D& est, const Line2D& gt) {
    const double dot = std::abs(est.a * gt.a + est.b * gt.b);
    return std::acos(std::clamp(dot, 0.0, 1.0)) * 180.0 / M_PI;
}

FundamentalMatrix canonicalize_fundamental(const Mat3& m) {
    Eigen::Matrix3d f = to_eigen(m);
    // Enforce rank 2.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = svd.singularValues();
    s(2) = 0.0;
    f = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    const double norm = f.norm();
    if (norm <= 1e-30) throw DegenerateSampleError("fundamental: zero matrix");
    f /= norm;
    // Sign: largest-magnitude entry positive.
    double best = 0.0;
    double best_abs = -1.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            if (std::abs(f(r, c)) > best_abs) {
                best_abs = std::abs(f(r, c));
                best = f(r, c);
            }
    if (best < 0.0) f = -f;
    return FundamentalMatrix{from_eigen(f)};
}

FundamentalMatrix fit_fundamental_8pt(const std::vector<Correspondence>& correspondences) {
    const std::size_t n = correspondences.size();
    if (n < 8) throw DimensionError("fit_fundamental_8pt: need at least 8 correspondences");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = correspondences[i];
            const auto& b = correspondences[j];
            if (a.x1 == b.x1 && a.y1 == b.y1 && a.x2 == b.x2 && a.y2 == b.y2)
                throw DegenerateSampleError("fit_fundamental_8pt: duplicate correspondence");
        }

    // Hartley normalization per image: centroid to origin, RMS distance sqrt(2).
    auto normalize = [n](auto get_x, auto get_y, const std::vector<Correspondence>& cs,
                         Eigen::Matrix3d& t) {
        double cx = 0.0, cy = 0.0;
        for (const auto& c : cs) {
            cx += get_x(c);
            cy += get_y(c);
        }
        cx /= static_cast<double>(n);
        cy /= static_cast<double>(n);
        double rms = 0.0;
        for (const auto& c : cs) {
            const double dx = get_x(c) - cx;
            const double dy = get_y(c) - cy;
            rms += dx * dx + dy * dy;
        }
        rms = std::sqrt(rms / static_cast<double>(n));
        if (rms <= 1e-12) throw DegenerateSampleError("fit_fundamental_8pt: coincident image points");
        const double s = std::sqrt(2.0) / rms;
        t << s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0;
    };

    Eigen::Matrix3d t1, t2;
    normalize([](const Correspondence& c) { return c.x1; },
              [](const Correspondence& c) { return c.y1; }, correspondences, t1);
    normalize([](const Correspondence& c) { return c.x2; },
              [](const Correspondence& c) { return c.y2; }, correspondences, t2);

    Eigen::MatrixXd a(n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = correspondences[i];
        const double u1 = t1(0, 0) * c.x1 + t1(0, 2);
        const double v1 = t1(1, 1) * c.y1 + t1(1, 2);
        const double u2 = t2(0, 0) * c.x2 + t2(0, 2);
        const double v2 = t2(1, 1) * c.y2 + t2(1, 2);
        a.row(i) << u2 * u1, u2 * v1, u2, v2 * u1, v2 * v1, v2, u1, v1, 1.0;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // For exactly 8 rows the nullspace must be one-dimensional; a second
    // vanishing singular value means the configuration is degenerate.
    if (n == 8 && sv(7) < 1e-10 * std::max(sv(0), 1e-300))
        throw DegenerateSampleError("fit_fundamental_8pt: rank-deficient design matrix");

    const Eigen::VectorXd fvec = svd.matrixV().col(8);
    Eigen::Matrix3d fn;
    fn << fvec(0), fvec(1), fvec(2), fvec(3), fvec(4), fvec(5), fvec(6), fvec(7), fvec(8);
    const Eigen::Matrix3d denorm = t2.transpose() * fn * t1;
    return canonicalize_fundamental(from_eigen(denorm));
}

double epipolar_constraint(const FundamentalMatrix& f, const Vec2& x1, const Vec2& x2) {
    const auto& m = f.m;
    const double fx0 = m[0][0] * x1[0] + m[0][1] * x1[1] + m[0][2];
    const double fx1 = m[1][0] * x1[0] + m[1][1] * x1[1] + m[1][2];
    const double fx2 = m[2][0] * x1[0] + m[2][1] * x1[1] + m[2][2];
    return x2[0] * fx0 + x2[1] * fx1 + fx2;
}

double sampson_residual(const FundamentalMatrix& f, const Vec2& x1, const Vec2& x2) {
    const auto& m = f.m;
    const double fx_0 = m[0][0] * x1[0] + m[0][1] * x1[1] + m[0][2];
    const double fx_1 = m[1][0] * x1[0] + m[1][1] * x1[1] + m[1][2];
    const double fx_2 = m[2][0] * x1[0] + m[2][1] * x1[1] + m[2][2];
    const double ftx_0 = m[0][0] * x2[0] + m[1][0] * x2[1] + m[2][0];
    const double ftx_1 = m[0][1] * x2[0] + m[1][1] * x2[1] + m[2][1];
    const double num = x2[0] * fx_0 + x2[1] * fx_1 + fx_2;
    const double denom = fx_0 * fx_0 + fx_1 * fx_1 + ftx_0 * ftx_0 + ftx_1 * ftx_1;
    if (denom < 1e-20) return 1e12;
    return std::sqrt(num * num / denom);
}

Mat3 mat3_identity() {
    Mat3 m{};
    m[0][0] = m[1][1] = m[2][2] = 1.0;
    return m;
}

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 3; ++k) out[r][c] += a[r][k] * b[k][c];
    return out;
}

Mat3 mat3_transpose(const Mat3& a) {
    Mat3 out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out[r][c] = a[c][r];
    return out;
}

Vec3 mat3_apply(const Mat3& a, const Vec3& v) {
    Vec3 out{};
    for (int r = 0; r < 3; ++r) out[r] = a[r][0] * v[0] + a[r][1] * v[1] + a[r][2] * v[2];
    return out;
}

Mat3 mat3_inverse(const Mat3& a) {
    return from_eigen(to_eigen(a).inverse());
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle_rad) {
    Eigen::Vector3d ax(axis[0], axis[1], axis[2]);
    ax.normalize();
    return from_eigen(Eigen::AngleAxisd(angle_rad, ax).toRotationMatrix());
}

FundamentalMatrix fundamental_from_pose(const Mat3& k1, const Mat3& k2, const Mat3& rotation,
                                        const Vec3& translation) {
    const Eigen::Vector3d t(translation[0], translation[1], translation[2]);
    Eigen::Matrix3d tx;
    tx << 0.0, -t(2), t(1), t(2), 0.0, -t(0), -t(1), t(0), 0.0;
    const Eigen::Matrix3d e = tx * to_eigen(rotation);
    const Eigen::Matrix3d f =
        to_eigen(k2).inverse().transpose() * e * to_eigen(k1).inverse();
    return canonicalize_fundamental(from_eigen(f));
}

namespace {

/// Midpoint triangulation depth test: returns true if the point implied by
/// the two normalized rays has positive depth in both camera frames.
bool cheirality_pass(const Eigen::Matrix3d& r, const Eigen::Vector3d& t, const Eigen::Vector3d& ray1,
                     const Eigen::Vector3d& ray2) {
    // Camera 1 at origin; camera 2 with center c2 = -R^T t, ray direction R^T ray2.
    const Eigen::Vector3d d1 = ray1.normalized();
    const Eigen::Vector3d d2 = (r.transpose() * ray2).normalized();
    const Eigen::Vector3d c2 = -r.transpose() * t;
    // Closest points on the two rays: solve for scalars s1, s2.
    const double b = d1.dot(d2);
    const double denom = 1.0 - b * b;
    if (std::abs(denom) < 1e-12) return false;  // parallel rays
    const Eigen::Vector3d w = c2;               // origin offset
    const double s1 = (d1.dot(w) - b * d2.dot(w)) / denom;
    const double s2 = (b * d1.dot(w) - d2.dot(w)) / denom;
    const Eigen::Vector3d p = 0.5 * (s1 * d1 + (c2 + s2 * d2));
    const double depth1 = p.z();
    const double depth2 = (r * p + t).z();
    return depth1 > 0.0 && depth2 > 0.0;
}

}  // namespace

RelativePose pose_from_fundamental(const FundamentalMatrix& f, const Mat3& k1, const Mat3& k2,
                                   const std::vector<Correspondence>& inliers) {
    if (inliers.empty()) throw ContractError("pose_from_fundamental: no inliers for cheirality vote");
    const Eigen::Matrix3d e_raw = to_eigen(k2).transpose() * to_eigen(f.m) * to_eigen(k1);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(e_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    if (u.determinant() < 0.0) u.col(2) *= -1.0;
    if (v.determinant() < 0.0) v.col(2) *= -1.0;

    Eigen::Matrix3d w;
    w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    const Eigen::Matrix3d r1 = u * w * v.transpose();
    const Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
    const Eigen::Vector3d t = u.col(2);

    const Eigen::Matrix3d k1i = to_eigen(k1).inverse();
    const Eigen::Matrix3d k2i = to_eigen(k2).inverse();

    struct Candidate {
        Eigen::Matrix3d r;
        Eigen::Vector3d t;
    };
    const Candidate candidates[4] = {{r1, t}, {r1, -t}, {r2, t}, {r2, -t}};

    int best_votes = -1;
    int best_idx = 0;
    for (int i = 0; i < 4; ++i) {
        int votes = 0;
        for (const auto& c : inliers) {
            const Eigen::Vector3d ray1 = k1i * Eigen::Vector3d(c.x1, c.y1, 1.0);
            const Eigen::Vector3d ray2 = k2i * Eigen::Vector3d(c.x2, c.y2, 1.0);
            if (cheirality_pass(candidates[i].r, candidates[i].t, ray1, ray2)) ++votes;
        }
        if (votes > best_votes) {
            best_votes = votes;
            best_idx = i;
        }
    }
    if (best_votes <= 0)
        throw PoseRecoveryError("pose_from_fundamental: no candidate with positive-depth points");

    RelativePose pose;
    pose.rotation = from_eigen(candidates[best_idx].r);
    const Eigen::Vector3d tn = candidates[best_idx].t.normalized();
    pose.translation_dir = {tn(0), tn(1), tn(2)};
    return pose;
}

std::pair<double, double> pose_errors(const RelativePose& est, const RelativePose& gt) {
    const Eigen::Matrix3d rel = to_eigen(gt.rotation).transpose() * to_eigen(est.rotation);
    const double cos_r = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double rot_err = std::acos(cos_r) * 180.0 / M_PI;
    const double dot = std::abs(est.translation_dir[0] * gt.translation_dir[0] +
                                est.translation_dir[1] * gt.translation_dir[1] +
                                est.translation_dir[2] * gt.translation_dir[2]);
    const double t_err = std::acos(std::clamp(dot, 0.0, 1.0)) * 180.0 / M_PI;
    return {rot_err, t_err};
}

}  // namespace rlsac
