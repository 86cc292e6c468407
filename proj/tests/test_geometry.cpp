#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rlsac/geometry.hpp"
#include "rlsac/rng.hpp"

using namespace rlsac;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mat3 intrinsics() {
    Mat3 k = mat3_identity();
    k[0][0] = 600;
    k[1][1] = 600;
    k[0][2] = 320;
    k[1][2] = 240;
    return k;
}

/// Random pose with bounded rotation plus noiseless projected correspondences.
struct SyntheticPair {
    RelativePose pose;
    FundamentalMatrix f;
    std::vector<Correspondence> corr;
};

SyntheticPair synthesize(Rng& rng, int n_points) {
    const Mat3 k = intrinsics();
    for (int attempt = 0; attempt < 200; ++attempt) {
        Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
        const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
        if (norm < 1e-9) continue;
        for (auto& v : axis) v /= norm;
        const Mat3 r = axis_angle_rotation(axis, rng.uniform(0.05, 0.6));
        Vec3 t{rng.normal(), rng.normal(), rng.normal()};
        const double tn = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
        if (tn < 1e-9) continue;
        for (auto& v : t) v /= tn;

        std::vector<Correspondence> corr;
        for (int guard = 0; guard < 4000 && static_cast<int>(corr.size()) < n_points; ++guard) {
            const double z = rng.uniform(4.0, 10.0);
            const Vec3 p{rng.uniform(-0.4, 0.4) * z, rng.uniform(-0.3, 0.3) * z, z};
            const Vec3 q{r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + t[0],
                         r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + t[1],
                         r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + t[2]};
            if (q[2] < 0.1) continue;
            const Vec3 u1 = mat3_apply(k, p);
            const Vec3 u2 = mat3_apply(k, q);
            const Correspondence c{u1[0] / u1[2], u1[1] / u1[2], u2[0] / u2[2], u2[1] / u2[2]};
            if (c.x2 < 0 || c.x2 > 640 || c.y2 < 0 || c.y2 > 480) continue;
            corr.push_back(c);
        }
        if (static_cast<int>(corr.size()) < n_points) continue;
        return {RelativePose{r, t}, fundamental_from_pose(k, k, r, t), std::move(corr)};
    }
    throw std::runtime_error("synthesize: could not build a scene");
}

double f_distance(const FundamentalMatrix& a, const FundamentalMatrix& b) {
    double plus = 0.0, minus = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double d1 = a.m[i][j] - b.m[i][j];
            const double d2 = a.m[i][j] + b.m[i][j];
            plus += d1 * d1;
            minus += d2 * d2;
        }
    return std::sqrt(std::min(plus, minus));
}

double sq_residual_sum(const Line2D& line, const std::vector<Vec2>& pts) {
    double s = 0.0;
    for (const auto& p : pts) {
        const double r = line_point_residual(line, p);
        s += r * r;
    }
    return s;
}

}  // namespace

TEST_CASE("fit_line_2pts canonical examples") {
    const double s = std::sqrt(0.5);
    const Line2D diag = fit_line_2pts({0, 0}, {1, 1});
    CHECK(diag.a == doctest::Approx(-s).epsilon(1e-12));
    CHECK(diag.b == doctest::Approx(s).epsilon(1e-12));
    CHECK(diag.c == doctest::Approx(0).epsilon(1e-12));

    const Line2D horiz = fit_line_2pts({0, 2}, {1, 2});
    CHECK(horiz.a == doctest::Approx(0).epsilon(1e-12));
    CHECK(horiz.b == doctest::Approx(1).epsilon(1e-12));
    CHECK(horiz.c == doctest::Approx(-2).epsilon(1e-12));

    const Line2D vert = fit_line_2pts({3, 0}, {3, 5});
    CHECK(vert.a == doctest::Approx(1).epsilon(1e-12));
    CHECK(vert.b == doctest::Approx(0).epsilon(1e-12));
    CHECK(vert.c == doctest::Approx(-3).epsilon(1e-12));

    CHECK_THROWS_AS(fit_line_2pts({1, 1}, {1, 1}), DegenerateSampleError);
}

TEST_CASE("fit_line_2pts interpolates its inputs") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Vec2 p1{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
        const Vec2 p2{rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
        if (std::hypot(p1[0] - p2[0], p1[1] - p2[1]) <= 1e-12) continue;
        const Line2D line = fit_line_2pts(p1, p2);
        CHECK(line.a * line.a + line.b * line.b == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(line_point_residual(line, p1) < 1e-12);
        CHECK(line_point_residual(line, p2) < 1e-12);
        CHECK((line.b > 0 || (line.b == 0 && line.a > 0)));
    }
}

TEST_CASE("line_point_residual examples") {
    const Line2D diag = fit_line_2pts({0, 0}, {1, 1});
    CHECK(line_point_residual(diag, {0, 1}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(line_point_residual(diag, {2, 2}) == doctest::Approx(0).epsilon(1e-12));
    const Line2D flat = fit_line_2pts({0, 0}, {1, 0});
    CHECK(line_point_residual(flat, {5, -0.1}) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("refine_line_tls exact and symmetric cases") {
    const std::vector<Vec2> collinear{{0, 1}, {2, 3}, {5, 6}, {-1, 0}};
    const Line2D exact = refine_line_tls(collinear);
    for (const auto& p : collinear) CHECK(line_point_residual(exact, p) < 1e-12);

    const double delta = 0.25;
    const Line2D sym = refine_line_tls({{0, delta}, {0, -delta}, {1, delta}, {1, -delta}});
    CHECK(sym.a == doctest::Approx(0).epsilon(1e-12));
    CHECK(sym.b == doctest::Approx(1).epsilon(1e-12));
    CHECK(sym.c == doctest::Approx(0).epsilon(1e-12));

    CHECK_THROWS_AS(refine_line_tls({{1, 1}, {1, 1}}), DegenerateSampleError);
}

TEST_CASE("refine_line_tls beats every 2-point fit on noisy clouds") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Vec2> pts;
        const Line2D base = fit_line_2pts({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)},
                                          {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
        for (int i = 0; i < 12; ++i) {
            const double tpar = rng.uniform(-4.0, 4.0);
            const double off = rng.uniform(-0.2, 0.2);
            // Point along the line direction (-b, a), then off along the normal.
            pts.push_back({-base.b * tpar - base.a * base.c + base.a * off,
                           base.a * tpar - base.b * base.c + base.b * off});
        }
        const Line2D tls = refine_line_tls(pts);
        const double tls_sum = sq_residual_sum(tls, pts);
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                if (std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]) <= 1e-12) continue;
                const double pair_sum = sq_residual_sum(fit_line_2pts(pts[i], pts[j]), pts);
                CHECK(tls_sum <= pair_sum + 1e-10);
            }
    }
}

TEST_CASE("line_angular_error examples") {
    const Line2D diag = fit_line_2pts({0, 0}, {1, 1});
    const Line2D flat = fit_line_2pts({0, 0}, {1, 0});
    const Line2D vert = fit_line_2pts({0, 0}, {0, 1});
    CHECK(line_angular_error(diag, diag) < 1e-5);
    CHECK(line_angular_error(diag, flat) == doctest::Approx(45).epsilon(1e-9));
    CHECK(line_angular_error(flat, vert) == doctest::Approx(90).epsilon(1e-9));
}

TEST_CASE("fit_fundamental_8pt recovers synthesized F and satisfies invariants") {
    Rng rng(29);
    for (int trial = 0; trial < 40; ++trial) {
        const auto scene = synthesize(rng, 8);
        const FundamentalMatrix f = fit_fundamental_8pt(scene.corr);

        CHECK(f_distance(f, scene.f) < 1e-8);
        for (const auto& c : scene.corr)
            CHECK(std::abs(epipolar_constraint(f, {c.x1, c.y1}, {c.x2, c.y2})) < 1e-10);

        double det = f.m[0][0] * (f.m[1][1] * f.m[2][2] - f.m[1][2] * f.m[2][1]) -
                     f.m[0][1] * (f.m[1][0] * f.m[2][2] - f.m[1][2] * f.m[2][0]) +
                     f.m[0][2] * (f.m[1][0] * f.m[2][1] - f.m[1][1] * f.m[2][0]);
        CHECK(std::abs(det) < 1e-10);
        double fro = 0.0, largest = 0.0;
        for (const auto& row : f.m)
            for (double v : row) {
                fro += v * v;
                if (std::abs(v) > std::abs(largest)) largest = v;
            }
        CHECK(std::sqrt(fro) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(largest > 0);
    }
}

TEST_CASE("fit_fundamental_8pt rejects degenerate samples") {
    std::vector<Correspondence> same(8, Correspondence{10, 20, 30, 40});
    CHECK_THROWS_AS(fit_fundamental_8pt(same), DegenerateSampleError);
    CHECK_THROWS_AS(fit_fundamental_8pt({same.begin(), same.begin() + 4}), DimensionError);
}

TEST_CASE("sampson_residual hand value and symmetry") {
    FundamentalMatrix f;
    f.m = {{{0, 0, 0}, {0, 0, -1}, {0, 1, 0}}};
    CHECK(sampson_residual(f, {0, 0}, {0, 1}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    Rng rng(41);
    const auto scene = synthesize(rng, 10);
    FundamentalMatrix ft;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ft.m[i][j] = scene.f.m[j][i];
    for (const auto& c : scene.corr) {
        CHECK(sampson_residual(scene.f, {c.x1, c.y1}, {c.x2, c.y2}) < 1e-9);
        const Vec2 shifted{c.x2 + rng.uniform(-20.0, 20.0), c.y2 + rng.uniform(-20.0, 20.0)};
        CHECK(sampson_residual(scene.f, {c.x1, c.y1}, shifted) ==
              doctest::Approx(sampson_residual(ft, shifted, {c.x1, c.y1})).epsilon(1e-12));
    }
}

TEST_CASE("sampson_residual tracks perpendicular pixel displacement") {
    Rng rng(43);
    const auto scene = synthesize(rng, 12);
    int checked = 0;
    for (const auto& c : scene.corr) {
        // Displace x2 perpendicular to its epipolar line by 4 px.
        const Vec3 l = mat3_apply(scene.f.m, {c.x1, c.y1, 1.0});
        const double n = std::hypot(l[0], l[1]);
        if (n < 1e-12) continue;
        const Vec2 moved{c.x2 + 4.0 * l[0] / n, c.y2 + 4.0 * l[1] / n};
        // Sampson spreads the correction over both images, so a 4 px
        // single-image displacement scores between 4/sqrt(2) and 4.
        const double r = sampson_residual(scene.f, {c.x1, c.y1}, moved);
        CHECK(r > 4.0 / std::sqrt(2.0) * 0.9);
        CHECK(r < 4.0 * 1.02);
        ++checked;
    }
    CHECK(checked >= 8);
}

TEST_CASE("pose_from_fundamental recovers the true pose") {
    Rng rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        const auto scene = synthesize(rng, 12);
        const Mat3 k = intrinsics();
        const RelativePose est = pose_from_fundamental(scene.f, k, k, scene.corr);
        const auto [rot_err, trans_err] = pose_errors(est, scene.pose);
        CHECK(rot_err < 1e-6 * 180.0 / kPi);
        CHECK(trans_err < 1e-6 * 180.0 / kPi);
    }
}

TEST_CASE("pose_from_fundamental pure-x translation") {
    const Mat3 k = intrinsics();
    const Mat3 r = mat3_identity();
    const Vec3 t{1, 0, 0};
    const FundamentalMatrix f = fundamental_from_pose(k, k, r, t);
    std::vector<Correspondence> corr;
    Rng rng(59);
    for (int i = 0; i < 10; ++i) {
        const double z = rng.uniform(4.0, 10.0);
        const Vec3 p{rng.uniform(-0.3, 0.3) * z, rng.uniform(-0.3, 0.3) * z, z};
        const Vec3 u1 = mat3_apply(k, p);
        const Vec3 u2 = mat3_apply(k, {p[0] + 1, p[1], p[2]});
        corr.push_back({u1[0] / u1[2], u1[1] / u1[2], u2[0] / u2[2], u2[1] / u2[2]});
    }
    const RelativePose est = pose_from_fundamental(f, k, k, corr);
    CHECK(std::abs(est.translation_dir[0]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(est.translation_dir[1]) < 1e-9);
    CHECK(std::abs(est.translation_dir[2]) < 1e-9);
}

TEST_CASE("pose_errors examples and global-rotation invariance") {
    RelativePose a;
    a.rotation = mat3_identity();
    a.translation_dir = {0, 0, 1};
    auto [r0, t0] = pose_errors(a, a);
    CHECK(r0 == doctest::Approx(0).epsilon(1e-12));
    CHECK(t0 == doctest::Approx(0).epsilon(1e-12));

    RelativePose b = a;
    b.rotation = axis_angle_rotation({0, 0, 1}, 10.0 * kPi / 180.0);
    CHECK(pose_errors(b, a).first == doctest::Approx(10.0).epsilon(1e-9));

    RelativePose c = a;
    c.translation_dir = {0, 0, -1};
    CHECK(pose_errors(c, a).second == doctest::Approx(0).epsilon(1e-9));

    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        RelativePose est, gt;
        est.rotation = axis_angle_rotation({0, 1, 0}, rng.uniform(0.0, 1.0));
        gt.rotation = axis_angle_rotation({1, 0, 0}, rng.uniform(0.0, 1.0));
        est.translation_dir = {1, 0, 0};
        gt.translation_dir = {0, 1, 0};
        const auto base = pose_errors(est, gt);

        Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
        const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
        for (auto& v : axis) v /= n;
        const Mat3 g = axis_angle_rotation(axis, rng.uniform(0.0, 3.0));
        RelativePose est2{mat3_mul(g, est.rotation), mat3_apply(g, est.translation_dir)};
        RelativePose gt2{mat3_mul(g, gt.rotation), mat3_apply(g, gt.translation_dir)};
        const auto rotated = pose_errors(est2, gt2);
        CHECK(rotated.first == doctest::Approx(base.first).epsilon(1e-8));
        CHECK(rotated.second == doctest::Approx(base.second).epsilon(1e-8));
    }
}
